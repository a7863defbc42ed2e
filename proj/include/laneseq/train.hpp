#pragma once
// Seeded training loop: weighted-CE over tape gradients, 1/N ConvLSTM scaling,
// Adam with an optional handoff to plain SGD, per-step CSV log, best-loss
// snapshot.

#include <string>
#include <vector>

#include "laneseq/data.hpp"
#include "laneseq/loss.hpp"
#include "laneseq/network.hpp"
#include "laneseq/optim.hpp"

namespace laneseq {

struct TrainOptions {
    uint32_t steps = 2000;
    double adam_alpha = 1e-3;
    uint32_t switch_step = 0;        // fixed handoff step index (0 = none)
    bool switch_on_plateau = false;  // 50-step loss MA improves < 0.5%
    bool scale_lstm = true;          // 1/N ConvLSTM gradient scaling
    uint64_t seed = 1;
    std::string log_path;            // per-step CSV (empty = don't write)
    std::string archive_path;        // best-loss model archive (empty = don't write)
};

struct TrainResult {
    double best_loss = 0.0, final_loss = 0.0;
    uint32_t best_step = 0;
    uint32_t switched_at = 0;  // 0 = handoff never happened
    bool diverged = false;     // non-finite forward; best archive still written
    ClassWeights weights;
    std::string log_csv;  // "step,mode,loss,alpha,grad_norm,step_norm"
};

TrainResult train_model(Model& model, const std::vector<SequenceSample>& dataset,
                        const TrainOptions& options);

}  // namespace laneseq
