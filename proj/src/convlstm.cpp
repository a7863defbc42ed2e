#include "laneseq/convlstm.hpp"

#include <stdexcept>

#include "laneseq/forward_ctx.hpp"

namespace laneseq {

using detail::CellRefs;
using detail::PureCtx;
using detail::TapeCtx;

ConvLSTMParams make_convlstm_params(uint32_t input_ch, uint32_t hidden, uint32_t kernel,
                                    uint32_t h, uint32_t w) {
    ConvLSTMParams p;
    auto xk = [&] { return Tensor({hidden, input_ch, kernel, kernel}); };
    auto hk = [&] { return Tensor({hidden, hidden, kernel, kernel}); };
    auto peep = [&] { return Tensor({hidden, h, w}); };
    auto bias = [&] { return Tensor({hidden}); };
    p.w_xi = xk(); p.w_hi = hk(); p.w_ci = peep(); p.b_i = bias();
    p.w_xf = xk(); p.w_hf = hk(); p.w_cf = peep(); p.b_f = bias();
    p.w_xc = xk(); p.w_hc = hk(); p.b_c = bias();
    p.w_xo = xk(); p.w_ho = hk(); p.w_co = peep(); p.b_o = bias();
    return p;
}

ConvLSTMState make_zero_state(uint32_t hidden, uint32_t h, uint32_t w) {
    return {Tensor({hidden, h, w}), Tensor({hidden, h, w})};
}

static void check_cell_shapes(const Tensor& x, const ConvLSTMState& prev,
                              const ConvLSTMParams& p) {
    if (x.rank() != 3)
        throw std::runtime_error("cell_step: input must be rank-3, got " + shape_str(x.shape));
    if (p.w_xi.rank() != 4 || p.w_hi.rank() != 4)
        throw std::runtime_error("cell_step: gate kernels must be rank-4");
    uint32_t hidden = p.w_xi.shape[0], k = p.w_xi.shape[2];
    uint32_t h = x.shape[1], w = x.shape[2];
    const Tensor* xs[] = {&p.w_xi, &p.w_xf, &p.w_xc, &p.w_xo};
    const Tensor* hs[] = {&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho};
    for (auto* t : xs)
        if (t->shape != std::vector<uint32_t>{hidden, x.shape[0], k, k})
            throw std::runtime_error("cell_step: input kernel shape " + shape_str(t->shape) +
                                     " inconsistent with input " + shape_str(x.shape));
    for (auto* t : hs)
        if (t->shape != std::vector<uint32_t>{hidden, hidden, k, k})
            throw std::runtime_error("cell_step: hidden kernel shape " + shape_str(t->shape) +
                                     " inconsistent with hidden count " + std::to_string(hidden));
    std::vector<uint32_t> state_shape{hidden, h, w};
    for (auto* t : {&p.w_ci, &p.w_cf, &p.w_co})
        if (t->shape != state_shape)
            throw std::runtime_error("cell_step: peephole shape " + shape_str(t->shape) +
                                     " != state shape " + shape_str(state_shape));
    for (auto* t : {&p.b_i, &p.b_f, &p.b_c, &p.b_o})
        if (t->rank() != 1 || t->shape[0] != hidden)
            throw std::runtime_error("cell_step: bias shape " + shape_str(t->shape) +
                                     " != hidden count " + std::to_string(hidden));
    if (prev.c.shape != state_shape || prev.h.shape != state_shape)
        throw std::runtime_error("cell_step: prev state shape " + shape_str(prev.c.shape) +
                                 " != " + shape_str(state_shape));
}

static CellRefs<PureCtx> refs_of(const ConvLSTMParams& p) {
    return {&p.w_xi, &p.w_hi, &p.w_ci, &p.b_i, &p.w_xf, &p.w_hf, &p.w_cf, &p.b_f,
            &p.w_xc, &p.w_hc, &p.b_c,  &p.w_xo, &p.w_ho, &p.w_co, &p.b_o,
            p.peephole_current_cell};
}

CellStepDetail cell_step_detail(const Tensor& x, const ConvLSTMState& prev,
                                const ConvLSTMParams& params) {
    check_cell_shapes(x, prev, params);
    PureCtx ctx;
    auto out = cell_step_ctx(ctx, refs_of(params), x, prev.c, prev.h);
    CellStepDetail d;
    d.state = {std::move(out.c), std::move(out.h)};
    d.gate_i = std::move(out.gi);
    d.gate_f = std::move(out.gf);
    d.gate_o = std::move(out.go);
    return d;
}

ConvLSTMState cell_step(const Tensor& x, const ConvLSTMState& prev,
                        const ConvLSTMParams& params) {
    return cell_step_detail(x, prev, params).state;
}

Tensor stack_forward(const std::vector<Tensor>& inputs, const ConvLSTMParams& layer1,
                     const ConvLSTMParams& layer2) {
    if (inputs.empty()) throw std::runtime_error("stack_forward: empty input sequence");
    check_cell_shapes(inputs[0],
                      make_zero_state(layer1.w_xi.shape[0], inputs[0].shape[1],
                                      inputs[0].shape[2]),
                      layer1);
    PureCtx ctx;
    return stack_forward_ctx(ctx, refs_of(layer1), refs_of(layer2), inputs);
}

// --- retained forward + BPTT --------------------------------------------------

static const char* const kCellFields[] = {"w_xi", "w_hi", "w_ci", "b_i", "w_xf",
                                          "w_hf", "w_cf", "b_f",  "w_xc", "w_hc",
                                          "b_c",  "w_xo", "w_ho", "w_co", "b_o"};

static const Tensor* field_of(const ConvLSTMParams& p, const std::string& f) {
    if (f == "w_xi") return &p.w_xi;
    if (f == "w_hi") return &p.w_hi;
    if (f == "w_ci") return &p.w_ci;
    if (f == "b_i") return &p.b_i;
    if (f == "w_xf") return &p.w_xf;
    if (f == "w_hf") return &p.w_hf;
    if (f == "w_cf") return &p.w_cf;
    if (f == "b_f") return &p.b_f;
    if (f == "w_xc") return &p.w_xc;
    if (f == "w_hc") return &p.w_hc;
    if (f == "b_c") return &p.b_c;
    if (f == "w_xo") return &p.w_xo;
    if (f == "w_ho") return &p.w_ho;
    if (f == "w_co") return &p.w_co;
    if (f == "b_o") return &p.b_o;
    throw std::runtime_error("unknown cell field " + f);
}

static Tensor* field_of(ConvLSTMParams& p, const std::string& f) {
    return const_cast<Tensor*>(field_of(const_cast<const ConvLSTMParams&>(p), f));
}

StackRun stack_forward_retained(const std::vector<Tensor>& inputs, const ConvLSTMParams& layer1,
                                const ConvLSTMParams& layer2) {
    if (inputs.empty()) throw std::runtime_error("stack_forward: empty input sequence");
    StackRun run;
    auto push_layer = [&](const char* prefix, const ConvLSTMParams& p) {
        for (const char* f : kCellFields)
            run.param_ids[std::string(prefix) + f] = run.tape.input(*field_of(p, f));
    };
    push_layer("l1.", layer1);
    push_layer("l2.", layer2);
    std::vector<int> xs;
    for (const Tensor& t : inputs) {
        int id = run.tape.input(t);
        run.input_ids.push_back(id);
        xs.push_back(id);
    }
    TapeCtx ctx{&run.tape, &run.param_ids};
    auto l1 = detail::cell_refs(ctx, "l1.", layer1.peephole_current_cell);
    auto l2 = detail::cell_refs(ctx, "l2.", layer2.peephole_current_cell);
    run.output_id = stack_forward_ctx(ctx, l1, l2, xs);
    return run;
}

StackGrads stack_backward(StackRun& run, const Tensor& output_grad) {
    if (run.spent || run.output_id < 0)
        throw std::runtime_error("stack_backward: no retained forward state");
    run.spent = true;
    run.tape.backward_seed(run.output_id, output_grad);
    StackGrads g;
    auto pull_layer = [&](const char* prefix, ConvLSTMParams& into) {
        for (const char* f : kCellFields)
            *field_of(into, f) = run.tape.grad(run.param_ids.at(std::string(prefix) + f));
    };
    pull_layer("l1.", g.layer1);
    pull_layer("l2.", g.layer2);
    for (int id : run.input_ids) g.inputs.push_back(run.tape.grad(id));
    return g;
}

}  // namespace laneseq
