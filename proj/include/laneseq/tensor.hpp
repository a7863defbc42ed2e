#pragma once
// Dense row-major double tensor plus the LSTF container format.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace laneseq {

struct Tensor {
    std::vector<uint32_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<uint32_t> s, double fill = 0.0);

    size_t rank() const { return shape.size(); }
    size_t size() const { return data.size(); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    // rank-3 (C,H,W) element access
    double& at3(size_t c, size_t y, size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    double at3(size_t c, size_t y, size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    // rank-4 (O,C,Kh,Kw) element access
    double& at4(size_t o, size_t c, size_t y, size_t x) {
        return data[((o * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    double at4(size_t o, size_t c, size_t y, size_t x) const {
        return data[((o * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
};

size_t shape_size(const std::vector<uint32_t>& shape);
std::string shape_str(const std::vector<uint32_t>& shape);
bool same_shape(const Tensor& a, const Tensor& b);

// --- LSTF container ---------------------------------------------------------
// magic "LSTF", version byte (1), rank byte, rank x u32 LE dims,
// row-major f64 LE payload. `where` names the file/stream in error messages.

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in, const std::string& where);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace laneseq
