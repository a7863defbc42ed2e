#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "laneseq/data.hpp"
#include "laneseq/rng.hpp"

namespace laneseq {

std::vector<uint32_t> sample_indices(uint32_t anchor, uint32_t stride, uint32_t n_frames) {
    if (n_frames == 0) throw std::invalid_argument("sample needs at least one frame");
    if (stride == 0) throw std::invalid_argument("stride must be at least 1");
    int64_t first = int64_t(anchor) - int64_t(n_frames - 1) * int64_t(stride);
    if (first < 0)
        throw std::out_of_range("sample at anchor " + std::to_string(anchor) + " with stride " +
                                std::to_string(stride) + " reaches frame " +
                                std::to_string(first));
    std::vector<uint32_t> idx;
    for (uint32_t k = 0; k < n_frames; ++k)
        idx.push_back(uint32_t(first + int64_t(k) * stride));
    return idx;
}

SequenceSample sample_sequence(const Scene& scene, uint32_t anchor, uint32_t stride,
                               uint32_t n_frames) {
    if (anchor >= scene.frames.size())
        throw std::out_of_range("anchor " + std::to_string(anchor) + " beyond the scene's " +
                                std::to_string(scene.frames.size()) + " frames");
    std::vector<uint32_t> idx = sample_indices(anchor, stride, n_frames);
    SequenceSample s;
    for (uint32_t i : idx) s.frames.push_back(scene.frames[i]);
    uint32_t h = scene.frames[anchor].shape[1], w = scene.frames[anchor].shape[2];
    s.label = rasterize_label(scene.polylines[anchor], h, w);
    s.label_polylines = scene.polylines[anchor];
    s.stride = stride;
    return s;
}

SequenceSample sample_from_seed(uint64_t seed, const std::string& difficulty, uint32_t h,
                                uint32_t w, uint32_t stride, uint32_t n_frames) {
    for (uint32_t attempt = 0; attempt < 16; ++attempt) {
        uint64_t eff = seed;
        if (attempt > 0) eff = SplitMix64(seed ^ (0x9e3779b97f4a7c15ULL * attempt)).next();
        uint32_t lead = uint32_t(named_stream(eff, "sample.lead").below(4));
        uint32_t total = (n_frames - 1) * stride + 1 + lead;
        SceneSpec spec = random_scene_spec(eff, difficulty, h, w, total);
        Scene scene = generate_scene(spec, total);
        SequenceSample s = sample_sequence(scene, total - 1, stride, n_frames);
        size_t lane_px = 0;
        for (uint8_t v : s.label.labels) lane_px += v;
        if (lane_px >= 1 && lane_px * 10 <= s.label.size()) {
            s.seed = seed;
            s.difficulty = difficulty;
            return s;
        }
    }
    throw std::runtime_error("could not generate a valid " + difficulty + " sample from seed " +
                             std::to_string(seed));
}

namespace {

double bilinear(const Tensor& img, uint32_t c, double sy, double sx) {
    int64_t h = img.shape[1], w = img.shape[2];
    int64_t x0 = int64_t(std::floor(sx)), y0 = int64_t(std::floor(sy));
    double fx = sx - double(x0), fy = sy - double(y0);
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            int64_t xx = x0 + dx, yy = y0 + dy;
            if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;  // zero outside
            double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            acc += wgt * img.at3(c, size_t(yy), size_t(xx));
        }
    return acc;
}

template <typename InvMap>
Tensor warp_frame(const Tensor& img, InvMap&& inv) {
    uint32_t h = img.shape[1], w = img.shape[2];
    Tensor out({3, h, w});
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            auto [sy, sx] = inv(double(y), double(x));
            for (uint32_t c = 0; c < 3; ++c) out.at3(c, y, x) = bilinear(img, c, sy, sx);
        }
    return out;
}

template <typename FwdPoint>
std::vector<Polyline> map_polylines(const std::vector<Polyline>& in, FwdPoint&& fwd) {
    std::vector<Polyline> out;
    for (const auto& pl : in) {
        Polyline q;
        for (const auto& p : pl) q.push_back(fwd(p));
        out.push_back(std::move(q));
    }
    return out;
}

std::optional<SequenceSample> finish_geometric(const SequenceSample& base,
                                               std::vector<Tensor> frames,
                                               std::vector<Polyline> polylines) {
    uint32_t h = base.label.h, w = base.label.w;
    LabelMap lm = rasterize_label(polylines, h, w);
    size_t lane_px = 0;
    for (uint8_t v : lm.labels) lane_px += v;
    if (lane_px == 0) return std::nullopt;
    SequenceSample out = base;
    out.frames = std::move(frames);
    out.label = std::move(lm);
    out.label_polylines = std::move(polylines);
    return out;
}

}  // namespace

SequenceSample augment_illumination(const SequenceSample& sample, double gain, double bias) {
    SequenceSample out = sample;
    for (Tensor& f : out.frames)
        for (double& v : f.data) v = std::clamp(gain * v + bias, 0.0, 1.0);
    return out;
}

std::optional<SequenceSample> augment(const SequenceSample& sample, AugmentOp op,
                                      uint64_t rng_seed) {
    if (sample.frames.empty()) throw std::invalid_argument("cannot augment an empty sample");
    SplitMix64 rng = named_stream(rng_seed, "augment");
    uint32_t h = sample.label.h, w = sample.label.w;

    switch (op) {
        case AugmentOp::Illumination: {
            double gain = rng.uniform(0.7, 1.3);
            double bias = rng.uniform(-0.1, 0.1);
            return augment_illumination(sample, gain, bias);
        }
        case AugmentOp::FlipH: {
            std::vector<Tensor> frames;
            for (const Tensor& f : sample.frames) {
                Tensor g({3, h, w});
                for (uint32_t c = 0; c < 3; ++c)
                    for (uint32_t y = 0; y < h; ++y)
                        for (uint32_t x = 0; x < w; ++x)
                            g.at3(c, y, x) = f.at3(c, y, w - 1 - x);
                frames.push_back(std::move(g));
            }
            auto fwd = [&](Point p) { return Point{double(w - 1) - p.x, p.y}; };
            return finish_geometric(sample, std::move(frames),
                                    map_polylines(sample.label_polylines, fwd));
        }
        case AugmentOp::Rotate: {
            double th = rng.uniform(-5.0, 5.0) * (3.14159265358979323846 / 180.0);
            double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
            double c = std::cos(th), s = std::sin(th);
            auto inv = [&](double y, double x) {
                double sx = c * (x - cx) + s * (y - cy) + cx;
                double sy = -s * (x - cx) + c * (y - cy) + cy;
                return std::pair<double, double>(sy, sx);
            };
            auto fwd = [&](Point p) {
                return Point{c * (p.x - cx) - s * (p.y - cy) + cx,
                             s * (p.x - cx) + c * (p.y - cy) + cy};
            };
            std::vector<Tensor> frames;
            for (const Tensor& f : sample.frames) frames.push_back(warp_frame(f, inv));
            return finish_geometric(sample, std::move(frames),
                                    map_polylines(sample.label_polylines, fwd));
        }
        case AugmentOp::CropResize: {
            double area = rng.uniform(0.8, 1.0);  // keeps >= 80% of the image
            double sc = std::sqrt(area);
            double cw = sc * w, ch = sc * h;
            double ox = rng.uniform(0.0, w - cw), oy = rng.uniform(0.0, h - ch);
            auto inv = [&](double y, double x) {
                double sx = ox + (x + 0.5) * cw / w - 0.5;
                double sy = oy + (y + 0.5) * ch / h - 0.5;
                return std::pair<double, double>(sy, sx);
            };
            auto fwd = [&](Point p) {
                return Point{(p.x - ox + 0.5) * (w / cw) - 0.5,
                             (p.y - oy + 0.5) * (h / ch) - 0.5};
            };
            std::vector<Tensor> frames;
            for (const Tensor& f : sample.frames) frames.push_back(warp_frame(f, inv));
            return finish_geometric(sample, std::move(frames),
                                    map_polylines(sample.label_polylines, fwd));
        }
    }
    throw std::invalid_argument("unknown augmentation op");
}

void save_sample(const std::string& path, const SequenceSample& sample) {
    if (sample.frames.empty()) throw std::invalid_argument("cannot save an empty sample");
    uint32_t h = sample.frames[0].shape[1], w = sample.frames[0].shape[2];
    Tensor packed({uint32_t(3 * sample.frames.size()), h, w});
    size_t per = size_t(3) * h * w;
    for (size_t i = 0; i < sample.frames.size(); ++i) {
        if (sample.frames[i].size() != per)
            throw std::invalid_argument("sample frames disagree on shape");
        std::copy(sample.frames[i].data.begin(), sample.frames[i].data.end(),
                  packed.data.begin() + i * per);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_tensor(out, packed);
    write_tensor(out, label_to_tensor(sample.label));
    if (!out) throw std::runtime_error("failed while writing " + path);
}

SequenceSample load_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Tensor packed = read_tensor(in, path);
    Tensor label = read_tensor(in, path);
    if (packed.rank() != 3 || packed.shape[0] % 3 != 0)
        throw std::runtime_error(path + " frame record has shape " + shape_str(packed.shape) +
                                 ", expected 3N x H x W");
    uint32_t n = packed.shape[0] / 3, h = packed.shape[1], w = packed.shape[2];
    SequenceSample s;
    size_t per = size_t(3) * h * w;
    for (uint32_t i = 0; i < n; ++i) {
        Tensor f({3, h, w});
        std::copy(packed.data.begin() + i * per, packed.data.begin() + (i + 1) * per,
                  f.data.begin());
        s.frames.push_back(std::move(f));
    }
    if (label.rank() != 2 || label.shape[0] != h || label.shape[1] != w)
        throw std::runtime_error(path + " label record has shape " + shape_str(label.shape) +
                                 ", expected " + std::to_string(h) + " x " + std::to_string(w));
    s.label = label_from_tensor(label, 2);
    return s;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& e : entries)
        out << e.path << '\t' << e.seed << '\t' << e.stride << '\t' << e.difficulty << '\n';
    if (!out) throw std::runtime_error("failed while writing " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        ManifestEntry e;
        std::string seed_s, stride_s;
        if (!std::getline(ls, e.path, '\t') || !std::getline(ls, seed_s, '\t') ||
            !std::getline(ls, stride_s, '\t') || !std::getline(ls, e.difficulty))
            throw std::runtime_error("malformed manifest line " + std::to_string(lineno) +
                                     " in " + path);
        try {
            e.seed = std::stoull(seed_s);
            e.stride = uint32_t(std::stoul(stride_s));
        } catch (const std::exception&) {
            throw std::runtime_error("malformed manifest line " + std::to_string(lineno) +
                                     " in " + path);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<SequenceSample> load_dataset(const std::string& manifest_path) {
    std::string dir = std::filesystem::path(manifest_path).parent_path().string();
    if (dir.empty()) dir = ".";
    std::vector<SequenceSample> samples;
    for (const auto& e : read_manifest(manifest_path)) {
        SequenceSample s = load_sample(dir + "/" + e.path);
        s.seed = e.seed;
        s.stride = e.stride;
        s.difficulty = e.difficulty;
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<SequenceSample> build_samples(uint32_t count, const DifficultyMix& mix,
                                          uint64_t seed, uint32_t h, uint32_t w,
                                          uint32_t n_frames, uint32_t stride) {
    double parts[4] = {mix.clean, mix.shadowed, mix.occluded, mix.dashed_noise};
    static const char* names[4] = {"clean", "shadowed", "occluded", "dashed_noise"};
    double total = 0.0;
    for (double p : parts) {
        if (p < 0.0) throw std::invalid_argument("difficulty mix weights must be non-negative");
        total += p;
    }
    if (total <= 0.0) throw std::invalid_argument("difficulty mix is all zero");

    std::vector<SequenceSample> samples;
    for (uint32_t i = 0; i < count; ++i) {
        double u = indexed_stream(seed, "dataset.mix", i).unit() * total;
        uint32_t d = 0;
        double acc = parts[0];
        while (d + 1 < 4 && u >= acc) acc += parts[++d];
        uint64_t sample_seed = indexed_stream(seed, "dataset.sample", i).next();
        samples.push_back(sample_from_seed(sample_seed, names[d], h, w, stride, n_frames));
    }
    return samples;
}

std::vector<ManifestEntry> build_dataset(uint32_t count, const DifficultyMix& mix,
                                         const std::string& out_dir, uint64_t seed, uint32_t h,
                                         uint32_t w, uint32_t n_frames, uint32_t stride) {
    std::vector<SequenceSample> samples = build_samples(count, mix, seed, h, w, n_frames, stride);
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    for (uint32_t i = 0; i < samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05u.lstf", i);
        save_sample(out_dir + "/" + name, samples[i]);
        entries.push_back({name, samples[i].seed, stride, samples[i].difficulty});
    }
    write_manifest(out_dir + "/manifest.tsv", entries);
    return entries;
}

}  // namespace laneseq
