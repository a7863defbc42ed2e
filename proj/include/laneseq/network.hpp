#pragma once
// UNet-ConvLSTM / SegNet-ConvLSTM assembly: per-frame encoder, double-layer
// ConvLSTM over the bottleneck sequence, decoder on the final hidden state.

#include <map>
#include <string>
#include <vector>

#include "laneseq/ops.hpp"
#include "laneseq/tape.hpp"
#include "laneseq/tensor.hpp"

namespace laneseq {

enum class Variant { Unet, Segnet };
enum class Temporal { ConvLSTM, SingleFrame };

struct NetworkConfig {
    Variant variant = Variant::Unet;
    Temporal temporal = Temporal::ConvLSTM;
    uint32_t input_channels = 3;
    uint32_t input_h = 128, input_w = 256;
    // Pooled encoder blocks. A non-pooled bridge block at the last entry's
    // channel count is always appended, so the effective block sequence never
    // doubles channels at the end.
    std::vector<uint32_t> encoder_channels{64, 128, 256, 512};
    std::vector<uint32_t> convs_per_block{2, 2, 2, 2};
    uint32_t bridge_convs = 2;
    uint32_t n_frames = 5;
    uint32_t convlstm_kernel = 3;
    uint32_t class_count = 2;
    bool peephole_current_cell = false;

    uint32_t pool_blocks() const { return uint32_t(encoder_channels.size()); }
    uint32_t bottleneck_channels() const { return encoder_channels.back(); }
    uint32_t bottleneck_h() const { return input_h >> pool_blocks(); }
    uint32_t bottleneck_w() const { return input_w >> pool_blocks(); }
};

// Throws with a diagnostic if the config violates its invariants.
void validate_config(const NetworkConfig& config);

// preset ∈ {"default", "tiny"}.
NetworkConfig make_preset(const std::string& preset, Variant variant, Temporal temporal,
                          uint32_t n_frames);

struct Model {
    NetworkConfig config;
    std::map<std::string, Tensor> params;  // name-sorted registry
};

// Every conv/bias/peephole parameter with its shape, in registry order.
std::vector<std::pair<std::string, std::vector<uint32_t>>> parameter_plan(
    const NetworkConfig& config);

// Seeded init: kernels uniform ±sqrt(6/(fan_in+fan_out)), biases and peepholes zero.
Model build_model(const NetworkConfig& config, uint64_t seed);

struct EncoderResult {
    std::vector<Tensor> skips;        // pre-pool activations (unet skip data)
    std::vector<PoolIndices> pools;   // argmax indices (segnet skip data)
    Tensor bottleneck;
};

EncoderResult encoder_forward(const Model& model, const Tensor& frame);
// ConvLSTM stack over the bottleneck sequence (or pass-through of the last
// bottleneck for single_frame models).
Tensor temporal_forward(const Model& model, const std::vector<Tensor>& bottlenecks);
// Decoder on the temporal output, using the (last) frame's skip data; logits.
Tensor decoder_forward(const Model& model, const Tensor& hidden, const EncoderResult& enc);

// Full pipeline; returns the softmaxed probability map K×H×W.
Tensor model_forward(const Model& model, const std::vector<Tensor>& frames);
// Same pipeline without the final softmax.
Tensor model_forward_logits(const Model& model, const std::vector<Tensor>& frames);

// Recorded forward for training: pushes every parameter as a tape leaf
// (param_ids receives name → node id) and returns the logits node.
int model_forward_tape(const Model& model, const std::vector<Tensor>& frames, Tape& tape,
                       std::map<std::string, int>& param_ids);

// Archive: magic "LSMODEL1", u32 LE config-blob length, key=value lines, then
// repeated [u16 LE name length, name, tensor container entry].
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
// Loads and rejects an archive whose config differs from `expected`.
Model load_model_expecting(const std::string& path, const NetworkConfig& expected);

}  // namespace laneseq
