#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "laneseq/rng.hpp"
#include "laneseq/train.hpp"

namespace laneseq {

namespace {

bool plateau(const std::vector<double>& losses) {
    if (losses.size() < 100) return false;
    double cur = 0.0, prev = 0.0;
    size_t n = losses.size();
    for (size_t i = n - 50; i < n; ++i) cur += losses[i];
    for (size_t i = n - 100; i < n - 50; ++i) prev += losses[i];
    cur /= 50.0;
    prev /= 50.0;
    return prev > 0.0 && (prev - cur) / prev < 0.005;
}

bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<SequenceSample>& dataset,
                        const TrainOptions& options) {
    if (dataset.empty()) throw std::invalid_argument("training needs at least one sample");
    for (const auto& s : dataset)
        if (s.frames.size() != model.config.n_frames)
            throw std::invalid_argument("sample has " + std::to_string(s.frames.size()) +
                                        " frames, model is configured for " +
                                        std::to_string(model.config.n_frames));

    std::vector<LabelMap> labels;
    for (const auto& s : dataset) labels.push_back(s.label);

    TrainResult res;
    res.weights = class_weight(labels);
    res.log_csv = "step,mode,loss,alpha,grad_norm,step_norm\n";

    OptimizerState state = make_adam(options.adam_alpha);
    SplitMix64 order = named_stream(options.seed, "train.order");

    ParamMap best_params = model.params;  // last good snapshot
    double best_loss = 0.0;
    bool have_best = false;
    std::vector<double> losses;

    char row[192];
    for (uint32_t step = 1; step <= options.steps; ++step) {
        const SequenceSample& sample = dataset[order.below(dataset.size())];

        Tape tape;
        std::map<std::string, int> ids;
        int logits_id = model_forward_tape(model, sample.frames, tape, ids);
        const Tensor& logits = tape.value(logits_id);
        if (!all_finite(logits)) {
            res.diverged = true;
            break;
        }
        Tensor prob = softmax_channel(logits);
        LossResult lr = weighted_cross_entropy(prob, sample.label, res.weights);

        tape.backward_seed(logits_id, lr.logit_grad);
        ParamMap grads;
        for (const auto& [name, id] : ids) grads[name] = tape.grad(id);
        if (options.scale_lstm && model.config.temporal == Temporal::ConvLSTM)
            scale_convlstm_grads(grads, model.config.n_frames);

        bool want_switch =
            state.mode == OptimMode::Adam &&
            ((options.switch_step > 0 && step == options.switch_step) ||
             (options.switch_on_plateau && plateau(losses)));
        if (want_switch) {
            switch_to_sgd(state, grads);
            res.switched_at = step;
        }

        if (state.mode == OptimMode::Adam)
            adam_step(model.params, grads, state);
        else
            sgd_step(model.params, grads, state);

        std::snprintf(row, sizeof row, "%u,%s,%.9f,%.9g,%.9g,%.9g\n", step,
                      state.mode == OptimMode::Adam ? "adam" : "sgd", lr.loss, state.alpha,
                      grad_norm(grads), state.last_step_norm);
        res.log_csv += row;

        losses.push_back(lr.loss);
        res.final_loss = lr.loss;
        if (!have_best || lr.loss < best_loss) {
            best_loss = lr.loss;
            best_params = model.params;
            res.best_step = step;
            have_best = true;
        }
    }
    res.best_loss = best_loss;

    if (!options.log_path.empty()) {
        std::ofstream f(options.log_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + options.log_path + " for writing");
        f << res.log_csv;
        if (!f) throw std::runtime_error("failed while writing " + options.log_path);
    }
    if (!options.archive_path.empty()) {
        Model best{model.config, best_params};
        save_model(best, options.archive_path);
    }
    return res;
}

}  // namespace laneseq
