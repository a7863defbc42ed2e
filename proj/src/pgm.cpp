#include "laneseq/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace laneseq {

void write_pgm(const std::string& path, const Tensor& values) {
    if (values.rank() != 2)
        throw std::runtime_error("write_pgm: expected rank-2 tensor, got " +
                                 shape_str(values.shape));
    uint32_t h = values.shape[0], w = values.shape[1];
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(w);
    for (uint32_t y = 0; y < h; ++y) {
        for (uint32_t x = 0; x < w; ++x) {
            double v = values[size_t(y) * w + x];
            if (v < 0) v = 0;
            if (v > 1) v = 1;
            row[x] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
        }
        f.write(reinterpret_cast<const char*>(row.data()), w);
    }
    if (!f) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace laneseq
