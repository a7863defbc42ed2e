#include "laneseq/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace laneseq {

LabelMap make_label_map(uint32_t h, uint32_t w) {
    LabelMap m;
    m.h = h;
    m.w = w;
    m.labels.assign(size_t(h) * w, 0);
    return m;
}

Tensor label_to_tensor(const LabelMap& label) {
    Tensor t({label.h, label.w});
    for (size_t i = 0; i < label.size(); ++i) t[i] = double(label.labels[i]);
    return t;
}

LabelMap label_from_tensor(const Tensor& t, uint32_t class_count) {
    if (t.rank() != 2)
        throw std::runtime_error("label_from_tensor: expected rank-2, got " + shape_str(t.shape));
    LabelMap m = make_label_map(t.shape[0], t.shape[1]);
    for (size_t i = 0; i < t.size(); ++i) {
        double v = t[i];
        if (v != std::floor(v) || v < 0 || v >= double(class_count))
            throw std::runtime_error("label_from_tensor: value " + std::to_string(v) +
                                     " is not a class id below " + std::to_string(class_count));
        m.labels[i] = uint8_t(v);
    }
    return m;
}

LossResult weighted_cross_entropy(const Tensor& probabilities, const LabelMap& labels,
                                  const ClassWeights& weights) {
    if (probabilities.rank() != 3)
        throw std::runtime_error("weighted_cross_entropy: probabilities must be K×H×W, got " +
                                 shape_str(probabilities.shape));
    const uint32_t K = probabilities.shape[0];
    const uint32_t H = probabilities.shape[1], W = probabilities.shape[2];
    if (labels.h != H || labels.w != W)
        throw std::runtime_error("weighted_cross_entropy: label dims (" +
                                 std::to_string(labels.h) + "," + std::to_string(labels.w) +
                                 ") != probability dims (" + std::to_string(H) + "," +
                                 std::to_string(W) + ")");
    if (weights.w.size() != K)
        throw std::runtime_error("weighted_cross_entropy: " + std::to_string(weights.w.size()) +
                                 " class weights for K = " + std::to_string(K));
    for (double wv : weights.w)
        if (!(wv > 0))
            throw std::runtime_error("weighted_cross_entropy: non-positive class weight");
    const size_t omega = size_t(H) * W;
    const double inv_omega = 1.0 / double(omega);
    const double* p = probabilities.ptr();
    LossResult r;
    r.logit_grad = Tensor(probabilities.shape);
    double* g = r.logit_grad.ptr();
    double loss = 0.0;
    for (size_t px = 0; px < omega; ++px) {
        uint8_t truth = labels.labels[px];
        if (truth >= K)
            throw std::runtime_error("weighted_cross_entropy: label " + std::to_string(truth) +
                                     " out of range for K = " + std::to_string(K));
        double wv = weights.w[truth];
        double pt = p[size_t(truth) * omega + px];
        loss -= wv * std::log(pt < 1e-12 ? 1e-12 : pt);
        double scale = wv * inv_omega;
        for (uint32_t k = 0; k < K; ++k) {
            double pk = p[size_t(k) * omega + px];
            g[size_t(k) * omega + px] = scale * (pk - (k == truth ? 1.0 : 0.0));
        }
    }
    r.loss = loss * inv_omega;
    if (!std::isfinite(r.loss))
        throw std::runtime_error("weighted_cross_entropy: non-finite loss");
    return r;
}

ClassWeights class_weight_from_counts(uint64_t background_px, uint64_t lane_px) {
    if (lane_px == 0)
        throw std::runtime_error("class_weight: zero lane pixels in the training set");
    return {{1.0, double(background_px) / double(lane_px)}};
}

ClassWeights class_weight(const std::vector<LabelMap>& dataset_labels) {
    uint64_t background = 0, lane = 0;
    for (const LabelMap& m : dataset_labels)
        for (uint8_t v : m.labels) (v == 1 ? lane : background)++;
    return class_weight_from_counts(background, lane);
}

}  // namespace laneseq
