#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "laneseq/data.hpp"
#include "laneseq/metrics.hpp"

namespace laneseq {

LabelMap binarize(const Tensor& probabilities, double threshold) {
    if (probabilities.rank() != 3)
        throw std::invalid_argument("binarize needs a K x H x W map, got " +
                                    shape_str(probabilities.shape));
    if (probabilities.shape[0] != 2)
        throw std::invalid_argument("binarize needs 2 classes, got K=" +
                                    std::to_string(probabilities.shape[0]));
    uint32_t h = probabilities.shape[1], w = probabilities.shape[2];
    LabelMap lm = make_label_map(h, w);
    const double* lane = probabilities.ptr() + size_t(h) * w;  // class-1 plane
    for (size_t i = 0; i < size_t(h) * w; ++i) lm.labels[i] = lane[i] >= threshold ? 1 : 0;
    return lm;
}

MetricsRecord confusion(const LabelMap& pred, const LabelMap& truth) {
    if (pred.h != truth.h || pred.w != truth.w)
        throw std::invalid_argument("confusion: prediction is " + std::to_string(pred.h) + "x" +
                                    std::to_string(pred.w) + ", truth is " +
                                    std::to_string(truth.h) + "x" + std::to_string(truth.w));
    MetricsRecord r;
    for (size_t i = 0; i < pred.size(); ++i) {
        bool p = pred.labels[i] != 0, t = truth.labels[i] != 0;
        if (p && t)
            ++r.tp;
        else if (p && !t)
            ++r.fp;
        else if (!p && t)
            ++r.fn;
        else
            ++r.tn;
    }
    return r;
}

MetricsRecord derive(MetricsRecord c) {
    uint64_t total = c.tp + c.fp + c.fn + c.tn;
    if (total > 0)
        c.accuracy = double(c.tp + c.tn) / double(total);
    else
        c.accuracy_flagged = true, c.accuracy = 0.0;
    if (c.tp + c.fp > 0)
        c.precision = double(c.tp) / double(c.tp + c.fp);
    else
        c.precision_flagged = true, c.precision = 0.0;
    if (c.tp + c.fn > 0)
        c.recall = double(c.tp) / double(c.tp + c.fn);
    else
        c.recall_flagged = true, c.recall = 0.0;
    if (c.precision + c.recall > 0.0)
        c.f1 = f1_score(c.precision, c.recall);
    else
        c.f1_flagged = true, c.f1 = 0.0;
    return c;
}

double f1_score(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

EvalOutcome evaluate(const Model& model, const std::string& manifest_path, double threshold) {
    std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    std::string dir = std::filesystem::path(manifest_path).parent_path().string();
    if (dir.empty()) dir = ".";

    EvalOutcome out;
    MetricsRecord sum;
    for (const auto& e : entries) {
        std::string path = dir + "/" + e.path;
        SequenceSample s = load_sample(path);
        if (s.frames.size() != model.config.n_frames ||
            s.label.h != model.config.input_h || s.label.w != model.config.input_w) {
            out.skipped.push_back(e.path);
            continue;
        }
        Tensor prob = model_forward(model, s.frames);
        MetricsRecord r = confusion(binarize(prob, threshold), s.label);
        sum.tp += r.tp;
        sum.fp += r.fp;
        sum.fn += r.fn;
        sum.tn += r.tn;
        out.per_sample.emplace_back(e.path, derive(r));
    }
    out.aggregate = derive(sum);
    return out;
}

MetricsRecord evaluate_samples(const Model& model, const std::vector<SequenceSample>& samples,
                               double threshold) {
    MetricsRecord sum;
    for (const auto& s : samples) {
        Tensor prob = model_forward(model, s.frames);
        MetricsRecord r = confusion(binarize(prob, threshold), s.label);
        sum.tp += r.tp;
        sum.fp += r.fp;
        sum.fn += r.fn;
        sum.tn += r.tn;
    }
    return derive(sum);
}

namespace {
void csv_row(std::string& s, const std::string& name, const MetricsRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%llu,%llu,%.6f,%.6f,%.6f,%.6f\n", name.c_str(),
                  (unsigned long long)r.tp, (unsigned long long)r.fp, (unsigned long long)r.fn,
                  (unsigned long long)r.tn, r.accuracy, r.precision, r.recall, r.f1);
    s += buf;
}
}  // namespace

std::string metrics_csv(const EvalOutcome& outcome) {
    std::string s = "sample,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
    for (const auto& [name, r] : outcome.per_sample) csv_row(s, name, r);
    csv_row(s, "total", outcome.aggregate);
    return s;
}

void write_metrics_csv(const std::string& path, const EvalOutcome& outcome) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << metrics_csv(outcome);
    if (!f) throw std::runtime_error("failed while writing " + path);
}

}  // namespace laneseq
