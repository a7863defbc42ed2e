#pragma once
// Independent reference implementations used only by tests. Written as direct
// formula transliterations (per-output gather loops, explicit bounds checks)
// before the production kernels; intentionally share no code with src/.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "laneseq/rng.hpp"
#include "laneseq/tensor.hpp"

namespace oracle {

using laneseq::Tensor;

// out[o,y,x] = b[o] + sum_{c,ky,kx} in[c, y+ky-k/2, x+kx-k/2] * w[o,c,ky,kx]
inline Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b) {
    uint32_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
    uint32_t O = w.shape[0], K = w.shape[2];
    int r = int(K) / 2;
    Tensor out({O, H, W});
    for (uint32_t o = 0; o < O; ++o)
        for (uint32_t y = 0; y < H; ++y)
            for (uint32_t x = 0; x < W; ++x) {
                double acc = b.size() ? b[o] : 0.0;
                for (uint32_t c = 0; c < C; ++c)
                    for (uint32_t ky = 0; ky < K; ++ky)
                        for (uint32_t kx = 0; kx < K; ++kx) {
                            int sy = int(y) + int(ky) - r;
                            int sx = int(x) + int(kx) - r;
                            if (sy < 0 || sy >= int(H) || sx < 0 || sx >= int(W)) continue;
                            acc += in.at3(c, sy, sx) * w.at4(o, c, ky, kx);
                        }
                out.at3(o, y, x) = acc;
            }
    return out;
}

struct PoolOut {
    Tensor out;
    std::vector<size_t> argmax;  // flat input index per output element
};

inline PoolOut maxpool2(const Tensor& in) {
    uint32_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
    PoolOut r;
    r.out = Tensor({C, H / 2, W / 2});
    r.argmax.resize(r.out.size());
    size_t oi = 0;
    for (uint32_t c = 0; c < C; ++c)
        for (uint32_t y = 0; y + 1 < H; y += 2)
            for (uint32_t x = 0; x + 1 < W; x += 2) {
                double best = in.at3(c, y, x);
                size_t best_at = (size_t(c) * H + y) * W + x;
                const int offs[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
                for (auto& d : offs) {
                    double v = in.at3(c, y + d[0], x + d[1]);
                    if (v > best) {
                        best = v;
                        best_at = (size_t(c) * H + y + d[0]) * W + x + d[1];
                    }
                }
                r.out[oi] = best;
                r.argmax[oi] = best_at;
                ++oi;
            }
    return r;
}

inline Tensor upsample2(const Tensor& in) {
    uint32_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
    Tensor out({C, 2 * H, 2 * W});
    for (uint32_t c = 0; c < C; ++c)
        for (uint32_t y = 0; y < 2 * H; ++y)
            for (uint32_t x = 0; x < 2 * W; ++x) out.at3(c, y, x) = in.at3(c, y / 2, x / 2);
    return out;
}

// direct-formula softmax in extended precision, no max subtraction
inline Tensor softmax(const Tensor& logits) {
    uint32_t K = logits.shape[0], H = logits.shape[1], W = logits.shape[2];
    Tensor out(logits.shape);
    for (uint32_t y = 0; y < H; ++y)
        for (uint32_t x = 0; x < W; ++x) {
            long double denom = 0.0L;
            for (uint32_t k = 0; k < K; ++k) denom += std::exp((long double)logits.at3(k, y, x));
            for (uint32_t k = 0; k < K; ++k)
                out.at3(k, y, x) = double(std::exp((long double)logits.at3(k, y, x)) / denom);
        }
    return out;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// One ConvLSTM step as a literal equation transliteration over naive convs.
// Weights passed individually; peepholes and biases are full/broadcast shapes.
struct CellOracleOut {
    Tensor c, h, gi, gf, go;
};

inline Tensor broadcast_bias(const Tensor& bias, uint32_t H, uint32_t W) {
    Tensor out({uint32_t(bias.size()), H, W});
    for (uint32_t c = 0; c < bias.size(); ++c)
        for (uint32_t y = 0; y < H; ++y)
            for (uint32_t x = 0; x < W; ++x) out.at3(c, y, x) = bias[c];
    return out;
}

inline CellOracleOut cell_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                               const Tensor& w_xi, const Tensor& w_hi, const Tensor& w_ci,
                               const Tensor& b_i, const Tensor& w_xf, const Tensor& w_hf,
                               const Tensor& w_cf, const Tensor& b_f, const Tensor& w_xc,
                               const Tensor& w_hc, const Tensor& b_c, const Tensor& w_xo,
                               const Tensor& w_ho, const Tensor& w_co, const Tensor& b_o,
                               bool peephole_current_cell = false) {
    Tensor none;  // empty bias for gate convs; biases added explicitly below
    uint32_t hidden = w_xi.shape[0], H = x.shape[1], W = x.shape[2];
    auto gate = [&](const Tensor& wx, const Tensor& wh, const Tensor* peep, const Tensor& bias,
                    const Tensor& cell) {
        Tensor a = oracle::conv2d(x, wx, none);
        Tensor b2 = oracle::conv2d(h_prev, wh, none);
        Tensor out({hidden, H, W});
        for (size_t i = 0; i < out.size(); ++i) {
            double pre = a[i] + b2[i] + bias[i / (size_t(H) * W)];
            if (peep) pre += (*peep)[i] * cell[i];
            out[i] = sigmoid(pre);
        }
        return out;
    };
    CellOracleOut r;
    r.gi = gate(w_xi, w_hi, &w_ci, b_i, c_prev);
    r.gf = gate(w_xf, w_hf, &w_cf, b_f, c_prev);
    Tensor ca = oracle::conv2d(x, w_xc, none);
    Tensor cb = oracle::conv2d(h_prev, w_hc, none);
    r.c = Tensor({hidden, H, W});
    for (size_t i = 0; i < r.c.size(); ++i) {
        double g = std::tanh(ca[i] + cb[i] + b_c[i / (size_t(H) * W)]);
        r.c[i] = r.gf[i] * c_prev[i] + r.gi[i] * g;
    }
    r.go = gate(w_xo, w_ho, &w_co, b_o, peephole_current_cell ? r.c : c_prev);
    r.h = Tensor({hidden, H, W});
    for (size_t i = 0; i < r.h.size(); ++i) r.h[i] = r.go[i] * std::tanh(r.c[i]);
    return r;
}

// --- finite differences ------------------------------------------------------

inline double central_diff(const std::function<double(double)>& f, double x0, double h = 1e-5) {
    return (f(x0 + h) - f(x0 - h)) / (2 * h);
}

// spec's relative error: |ga-gn| / max(1, |ga|, |gn|)
inline double rel_err(double ga, double gn) {
    double denom = std::max(1.0, std::max(std::fabs(ga), std::fabs(gn)));
    return std::fabs(ga - gn) / denom;
}

// Max relative error between an analytic gradient tensor and the central
// difference of `loss` w.r.t. each element of `param` (mutated in place).
inline double max_grad_rel_err(Tensor& param, const Tensor& analytic,
                               const std::function<double()>& loss, double h = 1e-5) {
    if (param.size() != analytic.size())
        throw std::runtime_error("max_grad_rel_err: size mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < param.size(); ++i) {
        double keep = param[i];
        param[i] = keep + h;
        double up = loss();
        param[i] = keep - h;
        double dn = loss();
        param[i] = keep;
        double gn = (up - dn) / (2 * h);
        worst = std::max(worst, rel_err(analytic[i], gn));
    }
    return worst;
}

inline Tensor random_tensor(std::vector<uint32_t> shape, laneseq::SplitMix64& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace oracle
