#pragma once
// Adam and plain SGD with the Adam→SGD handoff (step-magnitude matching) and
// the 1/N scaling of ConvLSTM-owned gradients.

#include <cstdint>
#include <map>
#include <string>

#include "laneseq/tensor.hpp"

namespace laneseq {

enum class OptimMode { Adam, Sgd };

struct OptimizerState {
    OptimMode mode = OptimMode::Adam;
    uint64_t step = 0;  // completed steps
    double alpha = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double last_step_norm = 0.0;  // ‖Δw‖₂ of the latest applied step
    std::map<std::string, Tensor> m, v;  // Adam moment accumulators
};

using ParamMap = std::map<std::string, Tensor>;

OptimizerState make_adam(double alpha = 1e-3);

// Standard bias-corrected Adam. Rejects non-finite gradients, leaving params
// untouched. Moments are lazily created zero-shaped like each parameter.
void adam_step(ParamMap& params, const ParamMap& grads, OptimizerState& state);

// Plain gradient descent at state.alpha, no momentum.
void sgd_step(ParamMap& params, const ParamMap& grads, OptimizerState& state);

// Eq.-4 handoff: parameters are not touched; alpha becomes
// last_step_norm / ‖grads‖₂ (1e-6 if the gradient norm is zero).
void switch_to_sgd(OptimizerState& state, const ParamMap& current_grads);

// Multiplies gradients of parameters whose name starts with "lstm" by 1/n.
void scale_convlstm_grads(ParamMap& grads, uint32_t n);

double grad_norm(const ParamMap& grads);

}  // namespace laneseq
