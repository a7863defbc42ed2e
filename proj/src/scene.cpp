#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "laneseq/data.hpp"
#include "laneseq/rng.hpp"

namespace laneseq {

namespace {

// Per-lane appearance derived from the scene seed only, so occluder placement
// (random_scene_spec) and rendering (generate_scene) agree on lane paths.
struct LaneSet {
    std::vector<double> bottom_x;    // lane center at the bottom row, frame 0
    std::vector<double> brightness;  // painted intensity
    std::vector<uint32_t> width;     // painted width at the bottom row, px
    std::vector<bool> dashed;
};

LaneSet derive_lanes(const SceneSpec& spec) {
    LaneSet ls;
    SplitMix64 rng = named_stream(spec.seed, "scene.lanes");
    uint32_t n = spec.lane_count;
    double margin = 0.08 * spec.w;
    double span = (spec.w - 1) - 2.0 * margin;
    double spacing = span / (n - 1);
    for (uint32_t i = 0; i < n; ++i) {
        double frac = double(i) / (n - 1);
        ls.bottom_x.push_back(margin + span * frac + rng.uniform(-0.05, 0.05) * spacing);
        ls.brightness.push_back(rng.uniform(0.82, 0.98));
        ls.width.push_back(2 + uint32_t(rng.below(2)));
        bool interior = i > 0 && i + 1 < n;
        ls.dashed.push_back(spec.dash_period > 0.0 && (n == 2 ? i == 1 : interior));
    }
    return ls;
}

// Lane center column at row y, frame t. Straight part converges to the
// vanishing point; curvature adds a shared quadratic bend anchored at the
// bottom row; in a curve, forward motion also drifts the scene laterally.
double lane_x_at(const SceneSpec& spec, const LaneSet& ls, uint32_t lane, double y, uint32_t t) {
    double u = (y - spec.vanish_y) / (double(spec.h - 1) - spec.vanish_y);
    double lateral = spec.curvature * spec.speed * 30.0 * t;
    double bx = ls.bottom_x[lane] + lateral;
    double rows_up = double(spec.h - 1) - y;
    return spec.vanish_x + (bx - spec.vanish_x) * u + spec.curvature * rows_up * rows_up;
}

}  // namespace

void validate_scene_spec(const SceneSpec& spec) {
    if (spec.h < 8 || spec.w < 8)
        throw std::invalid_argument("scene is " + std::to_string(spec.h) + "x" +
                                    std::to_string(spec.w) + ", needs at least 8x8");
    if (spec.lane_count < 2 || spec.lane_count > 5)
        throw std::invalid_argument("lane_count " + std::to_string(spec.lane_count) +
                                    " outside 2..5");
    if (!(spec.vanish_y >= 0.0) || spec.vanish_y >= spec.h / 4.0)
        throw std::invalid_argument("vanishing point row " + std::to_string(spec.vanish_y) +
                                    " outside the top quarter of a " + std::to_string(spec.h) +
                                    "-row image");
    if (!(spec.vanish_x >= 0.0) || spec.vanish_x >= double(spec.w))
        throw std::invalid_argument("vanishing point column " + std::to_string(spec.vanish_x) +
                                    " outside the image");
    if (!std::isfinite(spec.curvature))
        throw std::invalid_argument("curvature must be finite");
    if (!(spec.speed >= 0.0) || !std::isfinite(spec.speed))
        throw std::invalid_argument("speed " + std::to_string(spec.speed) +
                                    " must be non-negative");
    if (spec.dash_period < 0.0)
        throw std::invalid_argument("dash_period must be non-negative");
    if (spec.dash_period > 0.0 && !(spec.dash_duty > 0.0 && spec.dash_duty <= 1.0))
        throw std::invalid_argument("dash_duty " + std::to_string(spec.dash_duty) +
                                    " outside (0,1]");
    if (!(spec.noise_sigma >= 0.0))
        throw std::invalid_argument("noise_sigma must be non-negative");
    for (const auto& o : spec.occluders) {
        if (o.frame_begin > o.frame_end)
            throw std::invalid_argument("occluder frame range " + std::to_string(o.frame_begin) +
                                        ".." + std::to_string(o.frame_end) + " is reversed");
        if (!(o.x0 < o.x1) || !(o.y0 < o.y1))
            throw std::invalid_argument("occluder rectangle is empty");
        if (!(o.intensity >= 0.0 && o.intensity <= 1.0))
            throw std::invalid_argument("occluder intensity " + std::to_string(o.intensity) +
                                        " outside [0,1]");
    }
    for (const auto& sb : spec.shadows) {
        if (!(sb.darkening > 0.0 && sb.darkening <= 1.0))
            throw std::invalid_argument("shadow darkening " + std::to_string(sb.darkening) +
                                        " outside (0,1]");
        if (!(sb.width > 0.0))
            throw std::invalid_argument("shadow width must be positive");
    }
    for (const auto& il : spec.illumination)
        if (!std::isfinite(il.gain) || !std::isfinite(il.bias))
            throw std::invalid_argument("illumination gain/bias must be finite");
}

Scene generate_scene(const SceneSpec& spec, uint32_t total_frames) {
    validate_scene_spec(spec);
    if (total_frames == 0) throw std::invalid_argument("generate_scene needs at least one frame");

    LaneSet ls = derive_lanes(spec);
    uint32_t h = spec.h, w = spec.w;
    uint32_t y_start = uint32_t(std::ceil(spec.vanish_y));
    double vspan = double(h - 1) - spec.vanish_y;
    static const double tint[3] = {0.30, 0.31, 0.33};

    Scene scene;
    for (uint32_t t = 0; t < total_frames; ++t) {
        Tensor img({3, h, w});
        for (uint32_t c = 0; c < 3; ++c)
            for (uint32_t y = 0; y < h; ++y) {
                double v = tint[c] + 0.08 * double(y) / (h - 1);
                double* row = img.ptr() + (size_t(c) * h + y) * w;
                std::fill(row, row + w, v);
            }

        double phase = spec.speed * t;
        std::vector<Polyline> lanes_t;
        for (uint32_t i = 0; i < spec.lane_count; ++i) {
            Polyline pl;
            for (uint32_t y = y_start; y < h; ++y) {
                double cx = lane_x_at(spec, ls, i, double(y), t);
                pl.push_back({cx, double(y)});
                if (ls.dashed[i]) {
                    double arc = double(h - 1) - y + phase;  // scrolls with forward motion
                    if (std::fmod(arc, spec.dash_period) >= spec.dash_duty * spec.dash_period)
                        continue;
                }
                double u = (double(y) - spec.vanish_y) / vspan;
                uint32_t pw = std::max<int64_t>(
                    1, std::lround(double(ls.width[i]) * (0.35 + 0.65 * u)));
                int64_t x0 = std::llround(cx) - int64_t(pw - 1) / 2;
                double b = ls.brightness[i];
                double col[3] = {b, b, b * 0.97};
                for (int64_t x = x0; x < x0 + int64_t(pw); ++x) {
                    if (x < 0 || x >= int64_t(w)) continue;
                    for (uint32_t c = 0; c < 3; ++c) {
                        double& px = img.at3(c, y, size_t(x));
                        px = std::max(px, col[c]);
                    }
                }
            }
            lanes_t.push_back(std::move(pl));
        }

        // shadow bands scroll with forward motion and wrap vertically
        for (const auto& sb : spec.shadows) {
            double top = std::fmod(sb.y_pos + phase, double(h));
            if (top < 0) top += h;
            uint32_t rows = uint32_t(std::max<int64_t>(1, std::lround(sb.width)));
            for (uint32_t k = 0; k < rows; ++k) {
                uint32_t y = uint32_t(std::fmod(top + k, double(h)));
                for (uint32_t c = 0; c < 3; ++c) {
                    double* row = img.ptr() + (size_t(c) * h + y) * w;
                    for (uint32_t x = 0; x < w; ++x) row[x] *= sb.darkening;
                }
            }
        }

        for (const auto& o : spec.occluders) {
            if (t < o.frame_begin || t > o.frame_end) continue;
            int64_t ya = std::max<int64_t>(0, std::llround(o.y0));
            int64_t yb = std::min<int64_t>(h, std::llround(o.y1));
            int64_t xa = std::max<int64_t>(0, std::llround(o.x0));
            int64_t xb = std::min<int64_t>(w, std::llround(o.x1));
            for (int64_t y = ya; y < yb; ++y)
                for (uint32_t c = 0; c < 3; ++c) {
                    double* row = img.ptr() + (size_t(c) * h + y) * w;
                    for (int64_t x = xa; x < xb; ++x) row[x] = o.intensity;
                }
        }

        if (!spec.illumination.empty()) {
            const Illum& il =
                spec.illumination[std::min<size_t>(t, spec.illumination.size() - 1)];
            for (double& v : img.data) v = il.gain * v + il.bias;
        }

        if (spec.noise_sigma > 0.0) {
            SplitMix64 nrng = indexed_stream(spec.seed, "scene.noise", t);
            for (double& v : img.data) v += spec.noise_sigma * nrng.gaussian();
        }

        for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);

        scene.frames.push_back(std::move(img));
        scene.polylines.push_back(std::move(lanes_t));
    }
    return scene;
}

LabelMap rasterize_label(const std::vector<Polyline>& polylines, uint32_t h, uint32_t w) {
    LabelMap lm = make_label_map(h, w);
    auto plot = [&](int64_t x, int64_t y) {
        if (x >= 0 && y >= 0 && x < int64_t(w) && y < int64_t(h))
            lm.labels[size_t(y) * w + size_t(x)] = 1;
    };
    for (const auto& pl : polylines) {
        if (pl.size() == 1) plot(std::llround(pl[0].x), std::llround(pl[0].y));
        for (size_t s = 0; s + 1 < pl.size(); ++s) {
            int64_t x0 = std::llround(pl[s].x), y0 = std::llround(pl[s].y);
            int64_t x1 = std::llround(pl[s + 1].x), y1 = std::llround(pl[s + 1].y);
            int64_t dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
            int64_t dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
            int64_t err = dx + dy;
            while (true) {
                plot(x0, y0);
                if (x0 == x1 && y0 == y1) break;
                int64_t e2 = 2 * err;
                if (e2 >= dy) {
                    err += dy;
                    x0 += sx;
                }
                if (e2 <= dx) {
                    err += dx;
                    y0 += sy;
                }
            }
        }
    }
    return lm;
}

SceneSpec random_scene_spec(uint64_t seed, const std::string& difficulty, uint32_t h, uint32_t w,
                            uint32_t total_frames) {
    SceneSpec spec;
    spec.seed = seed;
    spec.h = h;
    spec.w = w;
    SplitMix64 rng = named_stream(seed, "scene.spec");
    spec.lane_count = 2 + uint32_t(rng.below(4));
    spec.vanish_y = rng.uniform(0.06, 0.23) * h;
    spec.vanish_x = rng.uniform(0.35, 0.65) * w;
    spec.curvature = rng.uniform(-0.004, 0.004);
    spec.speed = rng.uniform(1.0, 3.0);

    if (difficulty == "clean") {
        // base fields only
    } else if (difficulty == "shadowed") {
        uint32_t n_sh = 1 + uint32_t(rng.below(3));
        for (uint32_t k = 0; k < n_sh; ++k) {
            ShadowBand sb;
            sb.y_pos = rng.uniform(0.2, 0.9) * h;
            sb.width = rng.uniform(6.0, 18.0);
            sb.darkening = rng.uniform(0.45, 0.8);
            spec.shadows.push_back(sb);
        }
    } else if (difficulty == "occluded") {
        LaneSet ls = derive_lanes(spec);
        uint32_t anchor = total_frames - 1;
        uint32_t n_occ = 1 + uint32_t(rng.below(2));
        for (uint32_t k = 0; k < n_occ; ++k) {
            uint32_t lane = uint32_t(rng.below(spec.lane_count));
            double ya = rng.uniform(0.35, 0.5) * h;
            double xmin = 1e30, xmax = -1e30;
            for (double y = ya; y < double(h); y += 1.0) {
                double cx = lane_x_at(spec, ls, lane, y, anchor);
                xmin = std::min(xmin, cx);
                xmax = std::max(xmax, cx);
            }
            double pad = rng.uniform(4.0, 10.0);
            uint32_t r = uint32_t(rng.below(4));
            if (total_frames >= 2 && r + 2 > total_frames) r = total_frames - 2;
            if (total_frames == 1) r = 0;
            Occluder o;
            o.frame_begin = total_frames - 1 - r;
            o.frame_end = total_frames - 1;
            o.x0 = xmin - pad;
            o.x1 = xmax + pad;
            o.y0 = ya;
            o.y1 = double(h);
            o.intensity = rng.uniform(0.45, 0.7);
            spec.occluders.push_back(o);
        }
    } else if (difficulty == "dashed_noise") {
        spec.dash_period = rng.uniform(8.0, 14.0);
        spec.dash_duty = rng.uniform(0.5, 0.7);
        spec.noise_sigma = rng.uniform(0.01, 0.03);
    } else {
        throw std::invalid_argument("unknown difficulty \"" + difficulty + "\"");
    }
    return spec;
}

}  // namespace laneseq
