#pragma once
// Primitive tensor kernels (forward + exact adjoints). Pure functions; the
// same kernels back recorded training passes and plain inference.

#include <cstdint>
#include <vector>

#include "laneseq/tensor.hpp"

namespace laneseq {

enum class Act { Sigmoid, Tanh, Relu };

struct PoolIndices {
    std::vector<uint32_t> shape;  // pooled shape (C, H/2, W/2)
    uint32_t in_h = 0, in_w = 0;  // pre-pool spatial size
    std::vector<size_t> flat;     // per output element: argmax flat input coordinate
};

// Same-padded stride-1 convolution. input C×H×W, kernels O×C×k×k (k odd),
// bias length O or empty (treated as zero).
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

struct Conv2dGrads {
    Tensor input_grad, kernel_grad, bias_grad;
};
// Partials of sum(output ∘ output_grad) w.r.t. input, kernels, bias.
Conv2dGrads conv2d_grad(const Tensor& output_grad, const Tensor& input, const Tensor& kernels);

struct Pooled {
    Tensor out;
    PoolIndices indices;
};
Pooled maxpool2(const Tensor& input);                                      // H, W even
Tensor maxpool2_grad(const Tensor& output_grad, const PoolIndices& idx);   // scatter
Tensor max_unpool(const Tensor& input, const PoolIndices& idx, uint32_t target_h,
                  uint32_t target_w);
Tensor max_unpool_grad(const Tensor& output_grad, const PoolIndices& idx);  // gather

Tensor upsample_nearest2(const Tensor& input);
Tensor upsample_nearest2_grad(const Tensor& output_grad);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, uint32_t c_begin, uint32_t c_end);

Tensor pointwise(const Tensor& input, Act kind);
// Derivative expressed through the op's own output (valid for all three kinds;
// relu uses output>0, which matches relu'(0)=0).
Tensor pointwise_grad_from_output(const Tensor& output_grad, const Tensor& output, Act kind);

Tensor softmax_channel(const Tensor& logits);  // K×H×W, per-pixel, max-subtracted

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard

}  // namespace laneseq
