#pragma once
// Synthetic driving scenes (lanes converging to a vanishing point, ego-motion,
// occluders, shadows, illumination, noise), thin-line labels, Table-II-style
// sequence sampling, augmentation, and on-disk datasets with manifests.

#include <optional>
#include <string>
#include <vector>

#include "laneseq/loss.hpp"
#include "laneseq/tensor.hpp"

namespace laneseq {

struct Point {
    double x = 0.0, y = 0.0;
};
using Polyline = std::vector<Point>;

struct Occluder {
    uint32_t frame_begin = 0, frame_end = 0;  // inclusive frame range
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;    // pixel rectangle, inclusive-exclusive
    double intensity = 0.55;
};

struct ShadowBand {
    double y_pos = 0.0;       // top row of the band at frame 0
    double width = 8.0;       // rows
    double darkening = 0.6;   // multiplier in (0,1]
};

struct Illum {
    double gain = 1.0, bias = 0.0;
};

struct SceneSpec {
    uint64_t seed = 0;
    uint32_t h = 128, w = 256;
    uint32_t lane_count = 3;  // 2..5
    double vanish_x = 128.0, vanish_y = 16.0;  // vanish_y must lie in the top quarter
    double curvature = 0.0;   // px of lateral drift per row^2
    double speed = 2.0;       // px of forward motion per frame (>= 0)
    std::vector<Occluder> occluders;
    std::vector<ShadowBand> shadows;
    std::vector<Illum> illumination;  // per frame; last entry broadcasts; empty = identity
    double dash_period = 0.0, dash_duty = 0.5;  // period 0 = all lanes solid
    double noise_sigma = 0.0;
};

void validate_scene_spec(const SceneSpec& spec);

struct Scene {
    std::vector<Tensor> frames;                    // T × (3×H×W), values in [0,1]
    std::vector<std::vector<Polyline>> polylines;  // per frame, per lane center path
};

// Deterministic in spec.seed.
Scene generate_scene(const SceneSpec& spec, uint32_t total_frames);

// 1-px discrete segment walk; clips outside the image; lane class = 1.
LabelMap rasterize_label(const std::vector<Polyline>& polylines, uint32_t h, uint32_t w);

struct SequenceSample {
    std::vector<Tensor> frames;  // N × (3×H×W)
    LabelMap label;              // anchor frame's label
    std::vector<Polyline> label_polylines;  // anchor frame's paths (for augmentation)
    uint64_t seed = 0;
    uint32_t stride = 1;
    std::string difficulty = "clean";
};

// anchor - (N-1)*stride, ..., anchor - stride, anchor
std::vector<uint32_t> sample_indices(uint32_t anchor, uint32_t stride, uint32_t n_frames);
SequenceSample sample_sequence(const Scene& scene, uint32_t anchor, uint32_t stride,
                               uint32_t n_frames);

// difficulty ∈ {clean, shadowed, occluded, dashed_noise}
SceneSpec random_scene_spec(uint64_t seed, const std::string& difficulty, uint32_t h, uint32_t w,
                            uint32_t total_frames);
// Scene + sampling + label invariants (≥1 lane px, ≤10% lane px) with seeded retry.
SequenceSample sample_from_seed(uint64_t seed, const std::string& difficulty, uint32_t h,
                                uint32_t w, uint32_t stride, uint32_t n_frames);

enum class AugmentOp { Rotate, FlipH, CropResize, Illumination };
// Same geometric transform on every frame and on the label polylines (labels
// re-rasterized, never interpolated). Empty result: transform removed all
// lane pixels and the sample must be discarded.
std::optional<SequenceSample> augment(const SequenceSample& sample, AugmentOp op,
                                      uint64_t rng_seed);
// Fixed-parameter variant; label untouched.
SequenceSample augment_illumination(const SequenceSample& sample, double gain, double bias);

struct DifficultyMix {
    double clean = 0.5, shadowed = 0.2, occluded = 0.2, dashed_noise = 0.1;
};

struct ManifestEntry {
    std::string path;  // relative to the manifest's directory
    uint64_t seed = 0;
    uint32_t stride = 1;
    std::string difficulty;
};

// Samples stored as two container records: frames (3N×H×W) then label (H×W).
void save_sample(const std::string& path, const SequenceSample& sample);
SequenceSample load_sample(const std::string& path);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Loads every sample a manifest lists (paths resolved against its directory).
std::vector<SequenceSample> load_dataset(const std::string& manifest_path);

// In-memory batch: difficulty drawn per sample from the mix, seeds derived
// from the dataset seed.
std::vector<SequenceSample> build_samples(uint32_t count, const DifficultyMix& mix,
                                          uint64_t seed, uint32_t h, uint32_t w,
                                          uint32_t n_frames, uint32_t stride);

// Writes count samples + "manifest.tsv" under out_dir; returns the entries.
std::vector<ManifestEntry> build_dataset(uint32_t count, const DifficultyMix& mix,
                                         const std::string& out_dir, uint64_t seed, uint32_t h,
                                         uint32_t w, uint32_t n_frames, uint32_t stride);

}  // namespace laneseq
