#pragma once
// Weighted cross-entropy objective with fused softmax gradient (w.r.t. logits).

#include <cstdint>
#include <vector>

#include "laneseq/tensor.hpp"

namespace laneseq {

struct LabelMap {
    uint32_t h = 0, w = 0;
    std::vector<uint8_t> labels;  // per-pixel class in {0..K-1}, row-major

    size_t size() const { return labels.size(); }
    uint8_t at(uint32_t y, uint32_t x) const { return labels[size_t(y) * w + x]; }
    uint8_t& at(uint32_t y, uint32_t x) { return labels[size_t(y) * w + x]; }
};

LabelMap make_label_map(uint32_t h, uint32_t w);
Tensor label_to_tensor(const LabelMap& label);            // H×W of 0/1 class ids
LabelMap label_from_tensor(const Tensor& t, uint32_t class_count);

struct ClassWeights {
    std::vector<double> w;  // per class, strictly positive
};

struct LossResult {
    double loss = 0.0;
    Tensor logit_grad;  // K×H×W, already includes the softmax jacobian and 1/|Ω|
};

// loss = -(1/|Omega|) sum_x w_{l(x)} log(clamp(p_{l(x)}, 1e-12));
// grad_k(x) = (w_{l(x)}/|Omega|) (p_k(x) - [k = l(x)]).
LossResult weighted_cross_entropy(const Tensor& probabilities, const LabelMap& labels,
                                  const ClassWeights& weights);

// w_background = 1, w_lane = total background px / total lane px.
ClassWeights class_weight(const std::vector<LabelMap>& dataset_labels);
ClassWeights class_weight_from_counts(uint64_t background_px, uint64_t lane_px);

}  // namespace laneseq
