#pragma once
// Internal: the forward pass is written once, templated over a context that
// either computes plain tensors (PureCtx) or records onto a Tape (TapeCtx).
// Both contexts invoke the same kernels in the same order, so recorded and
// pure passes produce bit-identical values.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "laneseq/network.hpp"
#include "laneseq/ops.hpp"
#include "laneseq/tape.hpp"

namespace laneseq::detail {

struct PureCtx {
    using Val = Tensor;
    using Pool = PoolIndices;
    using ParamRef = const Tensor*;

    const std::map<std::string, Tensor>* params = nullptr;

    ParamRef param(const std::string& name) const {
        auto it = params->find(name);
        if (it == params->end()) throw std::runtime_error("model: missing parameter " + name);
        return &it->second;
    }
    const std::vector<uint32_t>& pshape(ParamRef p) const { return p->shape; }
    Val input(Tensor v) const { return v; }
    Val zeros(std::vector<uint32_t> s) const { return Tensor(std::move(s)); }
    const std::vector<uint32_t>& shape(const Val& v) const { return v.shape; }

    Val conv(const Val& x, ParamRef w, ParamRef b) const {
        static const Tensor kEmpty;
        return conv2d(x, *w, b ? *b : kEmpty);
    }
    Val conv_nb(const Val& x, ParamRef w) const {
        static const Tensor kEmpty;
        return conv2d(x, *w, kEmpty);
    }
    std::pair<Val, Pool> pool(const Val& x) const {
        Pooled p = maxpool2(x);
        return {std::move(p.out), std::move(p.indices)};
    }
    Val unpool(const Val& x, const Pool& idx, uint32_t h, uint32_t w) const {
        return max_unpool(x, idx, h, w);
    }
    Val up2(const Val& x) const { return upsample_nearest2(x); }
    Val cat(const Val& a, const Val& b) const { return concat_channels(a, b); }
    Val act(const Val& x, Act k) const { return pointwise(x, k); }
    Val add(const Val& a, const Val& b) const { return laneseq::add(a, b); }
    Val mul(const Val& a, const Val& b) const { return laneseq::mul(a, b); }
    Val mul_param(ParamRef w, const Val& x) const { return laneseq::mul(*w, x); }
};

struct TapeCtx {
    using Val = int;
    using Pool = int;
    using ParamRef = int;

    Tape* tape = nullptr;
    const std::map<std::string, int>* ids = nullptr;

    ParamRef param(const std::string& name) const {
        auto it = ids->find(name);
        if (it == ids->end()) throw std::runtime_error("model: missing parameter " + name);
        return it->second;
    }
    const std::vector<uint32_t>& pshape(ParamRef p) const { return tape->value(p).shape; }
    Val input(Tensor v) const { return tape->input(std::move(v)); }
    Val zeros(std::vector<uint32_t> s) const { return tape->input(Tensor(std::move(s))); }
    const std::vector<uint32_t>& shape(Val v) const { return tape->value(v).shape; }

    Val conv(Val x, ParamRef w, ParamRef b) const { return tape->conv2d(x, w, b); }
    Val conv_nb(Val x, ParamRef w) const { return tape->conv2d(x, w, -1); }
    std::pair<Val, Pool> pool(Val x) const {
        auto p = tape->maxpool2(x);
        return {p.out, p.indices};
    }
    Val unpool(Val x, Pool idx, uint32_t h, uint32_t w) const {
        return tape->max_unpool(x, idx, h, w);
    }
    Val up2(Val x) const { return tape->upsample2(x); }
    Val cat(Val a, Val b) const { return tape->concat(a, b); }
    Val act(Val x, Act k) const { return tape->act(x, k); }
    Val add(Val a, Val b) const { return tape->add(a, b); }
    Val mul(Val a, Val b) const { return tape->mul(a, b); }
    Val mul_param(ParamRef w, Val x) const { return tape->mul(w, x); }
};

// --- ConvLSTM cell / stack ----------------------------------------------------

template <class Ctx>
struct CellRefs {
    typename Ctx::ParamRef w_xi, w_hi, w_ci, b_i;
    typename Ctx::ParamRef w_xf, w_hf, w_cf, b_f;
    typename Ctx::ParamRef w_xc, w_hc, b_c;
    typename Ctx::ParamRef w_xo, w_ho, w_co, b_o;
    bool peephole_current_cell = false;
};

template <class Ctx>
CellRefs<Ctx> cell_refs(const Ctx& ctx, const std::string& prefix, bool peephole_current) {
    auto P = [&](const char* n) { return ctx.param(prefix + n); };
    return {P("w_xi"), P("w_hi"), P("w_ci"), P("b_i"),
            P("w_xf"), P("w_hf"), P("w_cf"), P("b_f"),
            P("w_xc"), P("w_hc"), P("b_c"),
            P("w_xo"), P("w_ho"), P("w_co"), P("b_o"),
            peephole_current};
}

template <class Ctx>
struct CellOut {
    typename Ctx::Val c, h, gi, gf, go;
};

// Eq-1 step: i = σ(Wxi∗x + Whi∗H + Wci∘C + bi), f/o analogous,
// C' = f∘C + i∘tanh(Wxc∗x + Whc∗H + bc), H' = o∘tanh(C').
template <class Ctx>
CellOut<Ctx> cell_step_ctx(const Ctx& ctx, const CellRefs<Ctx>& p, const typename Ctx::Val& x,
                           const typename Ctx::Val& c_prev, const typename Ctx::Val& h_prev) {
    CellOut<Ctx> o;
    auto pre_i = ctx.add(ctx.add(ctx.conv(x, p.w_xi, p.b_i), ctx.conv_nb(h_prev, p.w_hi)),
                         ctx.mul_param(p.w_ci, c_prev));
    o.gi = ctx.act(pre_i, Act::Sigmoid);
    auto pre_f = ctx.add(ctx.add(ctx.conv(x, p.w_xf, p.b_f), ctx.conv_nb(h_prev, p.w_hf)),
                         ctx.mul_param(p.w_cf, c_prev));
    o.gf = ctx.act(pre_f, Act::Sigmoid);
    auto cand = ctx.act(ctx.add(ctx.conv(x, p.w_xc, p.b_c), ctx.conv_nb(h_prev, p.w_hc)),
                        Act::Tanh);
    o.c = ctx.add(ctx.mul(o.gf, c_prev), ctx.mul(o.gi, cand));
    auto pre_o = ctx.add(ctx.add(ctx.conv(x, p.w_xo, p.b_o), ctx.conv_nb(h_prev, p.w_ho)),
                         ctx.mul_param(p.w_co, p.peephole_current_cell ? o.c : c_prev));
    o.go = ctx.act(pre_o, Act::Sigmoid);
    o.h = ctx.mul(o.go, ctx.act(o.c, Act::Tanh));
    return o;
}

template <class Ctx>
typename Ctx::Val stack_forward_ctx(const Ctx& ctx, const CellRefs<Ctx>& l1,
                                    const CellRefs<Ctx>& l2,
                                    const std::vector<typename Ctx::Val>& xs) {
    if (xs.empty()) throw std::runtime_error("stack_forward: empty input sequence");
    const auto& s = ctx.shape(xs[0]);
    uint32_t hidden1 = ctx.pshape(l1.w_hi)[0], hidden2 = ctx.pshape(l2.w_hi)[0];
    uint32_t h = s[1], w = s[2];
    auto c1 = ctx.zeros({hidden1, h, w});
    auto h1 = ctx.zeros({hidden1, h, w});
    auto c2 = ctx.zeros({hidden2, h, w});
    auto h2 = ctx.zeros({hidden2, h, w});
    for (const auto& x : xs) {
        auto o1 = cell_step_ctx(ctx, l1, x, c1, h1);
        c1 = o1.c;
        h1 = o1.h;
        auto o2 = cell_step_ctx(ctx, l2, o1.h, c2, h2);
        c2 = o2.c;
        h2 = o2.h;
    }
    return h2;
}

// --- encoder / decoder / full model ---------------------------------------------

template <class Ctx>
struct EncOutT {
    std::vector<typename Ctx::Val> skips;
    std::vector<typename Ctx::Pool> pools;
    typename Ctx::Val bottleneck{};
};

template <class Ctx>
EncOutT<Ctx> encoder_ctx(const Ctx& ctx, const NetworkConfig& cfg,
                         const typename Ctx::Val& frame) {
    const auto& fs = ctx.shape(frame);
    if (fs.size() != 3 || fs[0] != cfg.input_channels || fs[1] != cfg.input_h ||
        fs[2] != cfg.input_w)
        throw std::runtime_error("encoder: frame shape " + shape_str(fs) + " != configured (" +
                                 std::to_string(cfg.input_channels) + "," +
                                 std::to_string(cfg.input_h) + "," +
                                 std::to_string(cfg.input_w) + ")");
    EncOutT<Ctx> out;
    typename Ctx::Val cur = frame;
    for (size_t b = 0; b < cfg.encoder_channels.size(); ++b) {
        for (uint32_t j = 0; j < cfg.convs_per_block[b]; ++j) {
            std::string name = "enc.b" + std::to_string(b) + ".conv" + std::to_string(j) + ".";
            cur = ctx.act(ctx.conv(cur, ctx.param(name + "w"), ctx.param(name + "b")), Act::Relu);
        }
        out.skips.push_back(cur);
        auto [pooled, idx] = ctx.pool(cur);
        out.pools.push_back(std::move(idx));
        cur = std::move(pooled);
    }
    for (uint32_t j = 0; j < cfg.bridge_convs; ++j) {
        std::string name = "enc.bridge.conv" + std::to_string(j) + ".";
        cur = ctx.act(ctx.conv(cur, ctx.param(name + "w"), ctx.param(name + "b")), Act::Relu);
    }
    out.bottleneck = std::move(cur);
    return out;
}

template <class Ctx>
typename Ctx::Val decoder_ctx(const Ctx& ctx, const NetworkConfig& cfg,
                              const typename Ctx::Val& hidden, const EncOutT<Ctx>& enc) {
    typename Ctx::Val cur = hidden;
    const int blocks = int(cfg.encoder_channels.size());
    for (int b = blocks - 1; b >= 0; --b) {
        if (cfg.variant == Variant::Unet) {
            cur = ctx.up2(cur);
            cur = ctx.cat(cur, enc.skips[size_t(b)]);
        } else {
            cur = ctx.unpool(cur, enc.pools[size_t(b)], cfg.input_h >> b, cfg.input_w >> b);
        }
        for (uint32_t j = 0; j < cfg.convs_per_block[size_t(b)]; ++j) {
            std::string name = "dec.b" + std::to_string(b) + ".conv" + std::to_string(j) + ".";
            cur = ctx.act(ctx.conv(cur, ctx.param(name + "w"), ctx.param(name + "b")), Act::Relu);
        }
    }
    return ctx.conv(cur, ctx.param("cls.w"), ctx.param("cls.b"));  // logits
}

template <class Ctx>
typename Ctx::Val model_forward_ctx(const Ctx& ctx, const NetworkConfig& cfg,
                                    const std::vector<typename Ctx::Val>& frames) {
    size_t expected = cfg.temporal == Temporal::ConvLSTM ? cfg.n_frames : 1;
    if (frames.size() != expected)
        throw std::runtime_error("model_forward: got " + std::to_string(frames.size()) +
                                 " frames, configured for " + std::to_string(expected));
    std::vector<typename Ctx::Val> bottlenecks;
    bottlenecks.reserve(frames.size());
    EncOutT<Ctx> last;
    for (size_t i = 0; i < frames.size(); ++i) {
        EncOutT<Ctx> e = encoder_ctx(ctx, cfg, frames[i]);
        bottlenecks.push_back(e.bottleneck);
        if (i + 1 == frames.size()) last = std::move(e);
    }
    typename Ctx::Val hidden{};
    if (cfg.temporal == Temporal::ConvLSTM) {
        auto l1 = cell_refs(ctx, "lstm1.", cfg.peephole_current_cell);
        auto l2 = cell_refs(ctx, "lstm2.", cfg.peephole_current_cell);
        hidden = stack_forward_ctx(ctx, l1, l2, bottlenecks);
    } else {
        hidden = bottlenecks.back();
    }
    return decoder_ctx(ctx, cfg, hidden, last);
}

}  // namespace laneseq::detail
