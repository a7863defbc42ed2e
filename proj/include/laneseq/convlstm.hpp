#pragma once
// ConvLSTM cell and the double-layer stack, with exact BPTT gradients.

#include <map>
#include <string>
#include <vector>

#include "laneseq/tape.hpp"
#include "laneseq/tensor.hpp"

namespace laneseq {

struct ConvLSTMParams {
    Tensor w_xi, w_hi, w_ci, b_i;  // input gate
    Tensor w_xf, w_hf, w_cf, b_f;  // forget gate
    Tensor w_xc, w_hc, b_c;        // cell candidate
    Tensor w_xo, w_ho, w_co, b_o;  // output gate
    bool peephole_current_cell = false;  // o_t peephole on C_t instead of C_{t-1}
};

struct ConvLSTMState {
    Tensor c, h;  // cell memory and hidden activation, hidden×h×w
};

// Zero-initialized parameters / state with consistent shapes.
ConvLSTMParams make_convlstm_params(uint32_t input_ch, uint32_t hidden, uint32_t kernel,
                                    uint32_t h, uint32_t w);
ConvLSTMState make_zero_state(uint32_t hidden, uint32_t h, uint32_t w);

// One recurrent step: gates from conv(x) + conv(H_prev) + peephole ∘ C_prev + bias.
ConvLSTMState cell_step(const Tensor& x, const ConvLSTMState& prev, const ConvLSTMParams& params);

struct CellStepDetail {
    ConvLSTMState state;
    Tensor gate_i, gate_f, gate_o;
};
CellStepDetail cell_step_detail(const Tensor& x, const ConvLSTMState& prev,
                                const ConvLSTMParams& params);

// Double-layer stack: layer 1 consumes the N inputs, layer 2 consumes layer 1's
// hidden sequence; returns layer 2's final hidden state. Zero initial states.
Tensor stack_forward(const std::vector<Tensor>& inputs, const ConvLSTMParams& layer1,
                     const ConvLSTMParams& layer2);

// Forward with retained intermediates for BPTT.
struct StackRun {
    Tape tape;
    std::map<std::string, int> param_ids;  // "l1.w_xi" ... "l2.b_o"
    std::vector<int> input_ids;
    int output_id = -1;
    bool spent = false;
};
StackRun stack_forward_retained(const std::vector<Tensor>& inputs, const ConvLSTMParams& layer1,
                                const ConvLSTMParams& layer2);

struct StackGrads {
    ConvLSTMParams layer1, layer2;  // gradient tensors, same field shapes as the params
    std::vector<Tensor> inputs;
};
// Exact partials of sum(H2_N ∘ output_grad); consumes the retained run.
StackGrads stack_backward(StackRun& run, const Tensor& output_grad);

}  // namespace laneseq
