#include "laneseq/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "laneseq/threading.hpp"

namespace laneseq {

static void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

static void check_chw(const Tensor& t, const char* who) {
    require(t.rank() == 3, std::string(who) + ": expected rank-3 C×H×W tensor, got " +
                               shape_str(t.shape));
}

// --- conv2d -------------------------------------------------------------------

// valid output span along a length-L axis for a tap offset d: [max(0,-d),
// min(L, L-d)), clamped to empty when the kernel radius exceeds the image
static inline std::pair<uint32_t, uint32_t> tap_span(int d, uint32_t L) {
    int lo = std::max(0, -d);
    int hi = std::min(int(L), int(L) - d);
    return {uint32_t(lo), uint32_t(std::max(lo, hi))};
}

static void check_conv_args(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    check_chw(input, "conv2d");
    require(kernels.rank() == 4,
            "conv2d: expected rank-4 O×C×k×k kernels, got " + shape_str(kernels.shape));
    require(kernels.shape[2] == kernels.shape[3],
            "conv2d: kernel height " + std::to_string(kernels.shape[2]) + " != kernel width " +
                std::to_string(kernels.shape[3]));
    require(kernels.shape[2] % 2 == 1,
            "conv2d: kernel size " + std::to_string(kernels.shape[2]) + " is not odd");
    require(input.shape[0] == kernels.shape[1],
            "conv2d: input channels " + std::to_string(input.shape[0]) +
                " != kernel channels " + std::to_string(kernels.shape[1]));
    require(bias.size() == 0 || bias.size() == kernels.shape[0],
            "conv2d: bias length " + std::to_string(bias.size()) + " != output channels " +
                std::to_string(kernels.shape[0]));
}

// all nine taps of one input channel in a single pass over the interior; border
// rows/columns fall back to the tap-guarded form
static void accum_channel_3x3(double* outp, const double* inp, const double* wp, uint32_t H,
                              uint32_t W) {
    auto guarded_row = [&](uint32_t y) {
        for (uint32_t x = 0; x < W; ++x) {
            double acc = 0.0;
            for (uint32_t ky = 0; ky < 3; ++ky) {
                int sy = int(y) + int(ky) - 1;
                if (sy < 0 || sy >= int(H)) continue;
                const double* src = inp + size_t(sy) * W;
                for (uint32_t kx = 0; kx < 3; ++kx) {
                    int sx = int(x) + int(kx) - 1;
                    if (sx < 0 || sx >= int(W)) continue;
                    acc += wp[ky * 3 + kx] * src[sx];
                }
            }
            outp[size_t(y) * W + x] += acc;
        }
    };
    if (H < 3 || W < 3) {
        for (uint32_t y = 0; y < H; ++y) guarded_row(y);
        return;
    }
    const double w00 = wp[0], w01 = wp[1], w02 = wp[2];
    const double w10 = wp[3], w11 = wp[4], w12 = wp[5];
    const double w20 = wp[6], w21 = wp[7], w22 = wp[8];
    guarded_row(0);
    for (uint32_t y = 1; y + 1 < H; ++y) {
        const double* s0 = inp + size_t(y - 1) * W;
        const double* s1 = s0 + W;
        const double* s2 = s1 + W;
        double* dst = outp + size_t(y) * W;
        dst[0] += w01 * s0[0] + w02 * s0[1] + w11 * s1[0] + w12 * s1[1] + w21 * s2[0] +
                  w22 * s2[1];
        for (uint32_t x = 1; x + 1 < W; ++x)
            dst[x] += w00 * s0[x - 1] + w01 * s0[x] + w02 * s0[x + 1] + w10 * s1[x - 1] +
                      w11 * s1[x] + w12 * s1[x + 1] + w20 * s2[x - 1] + w21 * s2[x] +
                      w22 * s2[x + 1];
        dst[W - 1] += w00 * s0[W - 2] + w01 * s0[W - 1] + w10 * s1[W - 2] + w11 * s1[W - 1] +
                      w20 * s2[W - 2] + w21 * s2[W - 1];
    }
    guarded_row(H - 1);
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    check_conv_args(input, kernels, bias);
    const uint32_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const uint32_t O = kernels.shape[0], K = kernels.shape[2];
    const int r = int(K) / 2;
    const size_t hw = size_t(H) * W;
    Tensor out({O, H, W});
    const double* in = input.ptr();
    const double* wts = kernels.ptr();
    double* op = out.ptr();
    parallel_for(O, [&](size_t o0, size_t o1) {
        for (size_t o = o0; o < o1; ++o) {
            double* outp = op + o * hw;
            double b = bias.size() ? bias[o] : 0.0;
            std::fill(outp, outp + hw, b);
            for (uint32_t c = 0; c < C; ++c) {
                const double* inp = in + size_t(c) * hw;
                const double* wp = wts + (o * C + c) * K * K;
                if (K == 3) {
                    accum_channel_3x3(outp, inp, wp, H, W);
                    continue;
                }
                for (uint32_t ky = 0; ky < K; ++ky) {
                    const int dy = int(ky) - r;
                    const auto [y0, y1] = tap_span(dy, H);
                    for (uint32_t kx = 0; kx < K; ++kx) {
                        const int dx = int(kx) - r;
                        const auto [x0, x1] = tap_span(dx, W);
                        const double wv = wp[ky * K + kx];
                        for (uint32_t y = y0; y < y1; ++y) {
                            const double* src = inp + size_t(y + dy) * W + (x0 + dx);
                            double* dst = outp + size_t(y) * W + x0;
                            for (uint32_t i = 0; i < x1 - x0; ++i) dst[i] += wv * src[i];
                        }
                    }
                }
            }
        }
    });
    return out;
}

Conv2dGrads conv2d_grad(const Tensor& output_grad, const Tensor& input, const Tensor& kernels) {
    check_conv_args(input, kernels, Tensor{});
    check_chw(output_grad, "conv2d_grad");
    require(output_grad.shape[0] == kernels.shape[0] && output_grad.shape[1] == input.shape[1] &&
                output_grad.shape[2] == input.shape[2],
            "conv2d_grad: output_grad shape " + shape_str(output_grad.shape) +
                " does not match conv output (" + std::to_string(kernels.shape[0]) + "," +
                std::to_string(input.shape[1]) + "," + std::to_string(input.shape[2]) + ")");
    const uint32_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const uint32_t O = kernels.shape[0], K = kernels.shape[2];
    const int r = int(K) / 2;
    const size_t hw = size_t(H) * W;
    Conv2dGrads g;
    g.input_grad = Tensor(input.shape);
    g.kernel_grad = Tensor(kernels.shape);
    g.bias_grad = Tensor({O});
    const double* in = input.ptr();
    const double* go = output_grad.ptr();
    const double* wts = kernels.ptr();

    // bias and kernel grads: independent per output channel
    parallel_for(O, [&](size_t o0, size_t o1) {
        for (size_t o = o0; o < o1; ++o) {
            const double* gop = go + o * hw;
            double acc = 0.0;
            for (size_t i = 0; i < hw; ++i) acc += gop[i];
            g.bias_grad[o] = acc;
            for (uint32_t c = 0; c < C; ++c) {
                const double* inp = in + size_t(c) * hw;
                double* gwp = g.kernel_grad.ptr() + (o * C + c) * K * K;
                for (uint32_t ky = 0; ky < K; ++ky) {
                    const int dy = int(ky) - r;
                    const auto [y0, y1] = tap_span(dy, H);
                    for (uint32_t kx = 0; kx < K; ++kx) {
                        const int dx = int(kx) - r;
                        const auto [x0, x1] = tap_span(dx, W);
                        double acc2 = 0.0;
                        for (uint32_t y = y0; y < y1; ++y) {
                            const double* src = inp + size_t(y + dy) * W + (x0 + dx);
                            const double* gr = gop + size_t(y) * W + x0;
                            for (uint32_t i = 0; i < x1 - x0; ++i) acc2 += gr[i] * src[i];
                        }
                        gwp[ky * K + kx] = acc2;
                    }
                }
            }
        }
    });

    // input grad: independent per input channel
    parallel_for(C, [&](size_t c0, size_t c1) {
        for (size_t c = c0; c < c1; ++c) {
            double* gip = g.input_grad.ptr() + c * hw;
            for (uint32_t o = 0; o < O; ++o) {
                const double* gop = go + size_t(o) * hw;
                const double* wp = wts + (size_t(o) * C + c) * K * K;
                for (uint32_t ky = 0; ky < K; ++ky) {
                    const int dy = int(ky) - r;
                    const auto [y0, y1] = tap_span(dy, H);
                    for (uint32_t kx = 0; kx < K; ++kx) {
                        const int dx = int(kx) - r;
                        const auto [x0, x1] = tap_span(dx, W);
                        const double wv = wp[ky * K + kx];
                        for (uint32_t y = y0; y < y1; ++y) {
                            double* dst = gip + size_t(y + dy) * W + (x0 + dx);
                            const double* gr = gop + size_t(y) * W + x0;
                            for (uint32_t i = 0; i < x1 - x0; ++i) dst[i] += wv * gr[i];
                        }
                    }
                }
            }
        }
    });
    return g;
}

// --- pooling ------------------------------------------------------------------

Pooled maxpool2(const Tensor& input) {
    check_chw(input, "maxpool2");
    const uint32_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    require(H % 2 == 0, "maxpool2: odd height " + std::to_string(H));
    require(W % 2 == 0, "maxpool2: odd width " + std::to_string(W));
    Pooled p;
    p.out = Tensor({C, H / 2, W / 2});
    p.indices.shape = {C, H / 2, W / 2};
    p.indices.in_h = H;
    p.indices.in_w = W;
    p.indices.flat.resize(p.out.size());
    const double* in = input.ptr();
    size_t oi = 0;
    for (uint32_t c = 0; c < C; ++c)
        for (uint32_t y = 0; y < H; y += 2)
            for (uint32_t x = 0; x < W; x += 2) {
                size_t base = (size_t(c) * H + y) * W + x;
                // row-major window order; strictly-greater keeps the first max
                size_t best_at = base;
                double best = in[base];
                if (in[base + 1] > best) { best = in[base + 1]; best_at = base + 1; }
                if (in[base + W] > best) { best = in[base + W]; best_at = base + W; }
                if (in[base + W + 1] > best) { best = in[base + W + 1]; best_at = base + W + 1; }
                p.out[oi] = best;
                p.indices.flat[oi] = best_at;
                ++oi;
            }
    return p;
}

static void check_pool_grad(const Tensor& t, const PoolIndices& idx, const char* who) {
    require(t.shape == idx.shape, std::string(who) + ": tensor shape " + shape_str(t.shape) +
                                      " != pooled shape " + shape_str(idx.shape));
}

Tensor maxpool2_grad(const Tensor& output_grad, const PoolIndices& idx) {
    check_pool_grad(output_grad, idx, "maxpool2_grad");
    Tensor gx({idx.shape[0], idx.in_h, idx.in_w});
    for (size_t i = 0; i < idx.flat.size(); ++i) gx[idx.flat[i]] += output_grad[i];
    return gx;
}

Tensor max_unpool(const Tensor& input, const PoolIndices& idx, uint32_t target_h,
                  uint32_t target_w) {
    check_pool_grad(input, idx, "max_unpool");
    Tensor out({idx.shape[0], target_h, target_w});
    for (size_t i = 0; i < idx.flat.size(); ++i) {
        require(idx.flat[i] < out.size(),
                "max_unpool: index " + std::to_string(idx.flat[i]) + " outside target of " +
                    std::to_string(out.size()) + " elements");
        out[idx.flat[i]] = input[i];
    }
    return out;
}

Tensor max_unpool_grad(const Tensor& output_grad, const PoolIndices& idx) {
    Tensor gx(idx.shape);
    for (size_t i = 0; i < idx.flat.size(); ++i) {
        require(idx.flat[i] < output_grad.size(), "max_unpool_grad: index outside output");
        gx[i] = output_grad[idx.flat[i]];
    }
    return gx;
}

// --- resampling / concat --------------------------------------------------------

Tensor upsample_nearest2(const Tensor& input) {
    check_chw(input, "upsample_nearest2");
    const uint32_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    Tensor out({C, 2 * H, 2 * W});
    for (uint32_t c = 0; c < C; ++c)
        for (uint32_t y = 0; y < H; ++y) {
            const double* src = input.ptr() + (size_t(c) * H + y) * W;
            double* d0 = out.ptr() + (size_t(c) * 2 * H + 2 * y) * 2 * W;
            double* d1 = d0 + 2 * W;
            for (uint32_t x = 0; x < W; ++x) {
                d0[2 * x] = d0[2 * x + 1] = src[x];
                d1[2 * x] = d1[2 * x + 1] = src[x];
            }
        }
    return out;
}

Tensor upsample_nearest2_grad(const Tensor& output_grad) {
    check_chw(output_grad, "upsample_nearest2_grad");
    const uint32_t C = output_grad.shape[0], H2 = output_grad.shape[1], W2 = output_grad.shape[2];
    require(H2 % 2 == 0 && W2 % 2 == 0, "upsample_nearest2_grad: odd output dims");
    Tensor gx({C, H2 / 2, W2 / 2});
    for (uint32_t c = 0; c < C; ++c)
        for (uint32_t y = 0; y < H2 / 2; ++y) {
            const double* s0 = output_grad.ptr() + (size_t(c) * H2 + 2 * y) * W2;
            const double* s1 = s0 + W2;
            double* dst = gx.ptr() + (size_t(c) * (H2 / 2) + y) * (W2 / 2);
            for (uint32_t x = 0; x < W2 / 2; ++x)
                dst[x] = s0[2 * x] + s0[2 * x + 1] + s1[2 * x] + s1[2 * x + 1];
        }
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_chw(a, "concat_channels");
    check_chw(b, "concat_channels");
    require(a.shape[1] == b.shape[1] && a.shape[2] == b.shape[2],
            "concat_channels: spatial dims " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out({a.shape[0] + b.shape[0], a.shape[1], a.shape[2]});
    std::memcpy(out.ptr(), a.ptr(), a.size() * sizeof(double));
    std::memcpy(out.ptr() + a.size(), b.ptr(), b.size() * sizeof(double));
    return out;
}

Tensor slice_channels(const Tensor& x, uint32_t c_begin, uint32_t c_end) {
    check_chw(x, "slice_channels");
    require(c_begin <= c_end && c_end <= x.shape[0],
            "slice_channels: range [" + std::to_string(c_begin) + "," + std::to_string(c_end) +
                ") outside " + std::to_string(x.shape[0]) + " channels");
    const size_t hw = size_t(x.shape[1]) * x.shape[2];
    Tensor out({c_end - c_begin, x.shape[1], x.shape[2]});
    std::memcpy(out.ptr(), x.ptr() + size_t(c_begin) * hw, out.size() * sizeof(double));
    return out;
}

// --- pointwise ------------------------------------------------------------------

Tensor pointwise(const Tensor& input, Act kind) {
    Tensor out(input.shape);
    const double* in = input.ptr();
    double* op = out.ptr();
    const size_t n = input.size();
    switch (kind) {
        case Act::Sigmoid:
            for (size_t i = 0; i < n; ++i) op[i] = 1.0 / (1.0 + std::exp(-in[i]));
            break;
        case Act::Tanh:
            for (size_t i = 0; i < n; ++i) op[i] = std::tanh(in[i]);
            break;
        case Act::Relu:
            for (size_t i = 0; i < n; ++i) op[i] = in[i] > 0.0 ? in[i] : 0.0;
            break;
    }
    return out;
}

Tensor pointwise_grad_from_output(const Tensor& output_grad, const Tensor& output, Act kind) {
    require(same_shape(output_grad, output), "pointwise_grad: shape mismatch " +
                                                 shape_str(output_grad.shape) + " vs " +
                                                 shape_str(output.shape));
    Tensor gx(output.shape);
    const double* g = output_grad.ptr();
    const double* y = output.ptr();
    double* d = gx.ptr();
    const size_t n = output.size();
    switch (kind) {
        case Act::Sigmoid:
            for (size_t i = 0; i < n; ++i) d[i] = g[i] * y[i] * (1.0 - y[i]);
            break;
        case Act::Tanh:
            for (size_t i = 0; i < n; ++i) d[i] = g[i] * (1.0 - y[i] * y[i]);
            break;
        case Act::Relu:
            for (size_t i = 0; i < n; ++i) d[i] = y[i] > 0.0 ? g[i] : 0.0;
            break;
    }
    return gx;
}

Tensor softmax_channel(const Tensor& logits) {
    check_chw(logits, "softmax_channel");
    const uint32_t K = logits.shape[0], H = logits.shape[1], W = logits.shape[2];
    const size_t hw = size_t(H) * W;
    Tensor out(logits.shape);
    const double* in = logits.ptr();
    double* op = out.ptr();
    for (size_t p = 0; p < hw; ++p) {
        double mx = in[p];
        for (uint32_t k = 1; k < K; ++k) mx = std::max(mx, in[k * hw + p]);
        double denom = 0.0;
        for (uint32_t k = 0; k < K; ++k) {
            double e = std::exp(in[k * hw + p] - mx);
            op[k * hw + p] = e;
            denom += e;
        }
        for (uint32_t k = 0; k < K; ++k) op[k * hw + p] /= denom;
    }
    return out;
}

// --- elementwise binary -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require(same_shape(a, b),
            "add: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out(a.shape);
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require(same_shape(a, b),
            "mul: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out(a.shape);
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

}  // namespace laneseq
