#include "laneseq/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace laneseq {

OptimizerState make_adam(double alpha) {
    OptimizerState s;
    s.alpha = alpha;
    return s;
}

static void check_grads(const ParamMap& params, const ParamMap& grads, const char* who) {
    for (const auto& [name, p] : params) {
        auto it = grads.find(name);
        if (it == grads.end())
            throw std::runtime_error(std::string(who) + ": missing gradient for " + name);
        if (!same_shape(it->second, p))
            throw std::runtime_error(std::string(who) + ": gradient shape " +
                                     shape_str(it->second.shape) + " != parameter shape " +
                                     shape_str(p.shape) + " for " + name);
        for (double g : it->second.data)
            if (!std::isfinite(g))
                throw std::runtime_error(std::string(who) + ": non-finite gradient in " + name);
    }
}

void adam_step(ParamMap& params, const ParamMap& grads, OptimizerState& state) {
    if (state.mode != OptimMode::Adam) throw std::runtime_error("adam_step: optimizer is in sgd mode");
    check_grads(params, grads, "adam_step");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    double norm2 = 0.0;
    for (auto& [name, p] : params) {
        const Tensor& g = grads.at(name);
        Tensor& m = state.m.try_emplace(name, Tensor(p.shape)).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor(p.shape)).first->second;
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            double delta = -state.alpha * mhat / (std::sqrt(vhat) + state.eps);
            p[i] += delta;
            norm2 += delta * delta;
        }
    }
    state.last_step_norm = std::sqrt(norm2);
}

void sgd_step(ParamMap& params, const ParamMap& grads, OptimizerState& state) {
    if (state.mode != OptimMode::Sgd) throw std::runtime_error("sgd_step: optimizer is in adam mode");
    check_grads(params, grads, "sgd_step");
    state.step += 1;
    double norm2 = 0.0;
    for (auto& [name, p] : params) {
        const Tensor& g = grads.at(name);
        for (size_t i = 0; i < p.size(); ++i) {
            double delta = -state.alpha * g[i];
            p[i] += delta;
            norm2 += delta * delta;
        }
    }
    state.last_step_norm = std::sqrt(norm2);
}

double grad_norm(const ParamMap& grads) {
    double norm2 = 0.0;
    for (const auto& [name, g] : grads) {
        (void)name;
        for (double v : g.data) norm2 += v * v;
    }
    return std::sqrt(norm2);
}

void switch_to_sgd(OptimizerState& state, const ParamMap& current_grads) {
    if (state.mode == OptimMode::Sgd)
        throw std::runtime_error("switch_to_sgd: already in sgd mode");
    double gnorm = grad_norm(current_grads);
    state.alpha = gnorm > 0.0 ? state.last_step_norm / gnorm : 1e-6;
    if (state.alpha <= 0.0) state.alpha = 1e-6;
    state.mode = OptimMode::Sgd;
    state.m.clear();
    state.v.clear();
}

void scale_convlstm_grads(ParamMap& grads, uint32_t n) {
    if (n < 1) throw std::runtime_error("scale_convlstm_grads: N must be >= 1");
    if (n == 1) return;
    double inv = 1.0 / double(n);
    for (auto& [name, g] : grads)
        if (name.rfind("lstm", 0) == 0)
            for (double& v : g.data) v *= inv;
}

}  // namespace laneseq
