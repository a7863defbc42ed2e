#pragma once
// Pixel-level evaluation: confusion counts, accuracy, precision/recall, F1,
// micro-averaged over datasets.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "laneseq/loss.hpp"
#include "laneseq/network.hpp"

namespace laneseq {

struct MetricsRecord {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    // degenerate denominator: value defined as 0 and flagged
    bool accuracy_flagged = false, precision_flagged = false;
    bool recall_flagged = false, f1_flagged = false;
};

// lane iff p_lane >= threshold (ties to lane); probabilities must be 2×H×W.
LabelMap binarize(const Tensor& probabilities, double threshold = 0.5);

// lane = positive class, background = negative.
MetricsRecord confusion(const LabelMap& pred, const LabelMap& truth);

// Fills accuracy/precision/recall/f1 from the counts.
MetricsRecord derive(MetricsRecord counts);

double f1_score(double precision, double recall);

struct EvalOutcome {
    MetricsRecord aggregate;  // micro-average: counts summed, derived once
    std::vector<std::pair<std::string, MetricsRecord>> per_sample;
    std::vector<std::string> skipped;  // wrong frame count / dims for the model
};

EvalOutcome evaluate(const Model& model, const std::string& manifest_path,
                     double threshold = 0.5);

// In-memory micro-average over already-loaded samples (frames + label pairs).
struct SequenceSample;  // data.hpp
MetricsRecord evaluate_samples(const Model& model, const std::vector<SequenceSample>& samples,
                               double threshold = 0.5);

// "sample,tp,fp,fn,tn,accuracy,precision,recall,f1", 6-decimal floats,
// one row per sample plus a "total" row.
std::string metrics_csv(const EvalOutcome& outcome);
void write_metrics_csv(const std::string& path, const EvalOutcome& outcome);

}  // namespace laneseq
