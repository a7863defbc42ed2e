#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "laneseq/stream.hpp"

namespace laneseq {

namespace {
double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}
}  // namespace

StreamSession::StreamSession(const Model& model) : model_(&model) {
    if (model.config.temporal != Temporal::ConvLSTM)
        throw std::invalid_argument("streaming needs a convlstm model");
}

std::optional<Tensor> StreamSession::push_frame(const Tensor& frame) {
    const NetworkConfig& cfg = model_->config;
    if (frame.rank() != 3 || frame.shape[0] != cfg.input_channels ||
        frame.shape[1] != cfg.input_h || frame.shape[2] != cfg.input_w)
        throw std::invalid_argument("frame is " + shape_str(frame.shape) + ", model expects " +
                                    shape_str({cfg.input_channels, cfg.input_h, cfg.input_w}));

    StreamTiming t;
    auto t0 = std::chrono::steady_clock::now();
    EncoderResult enc = encoder_forward(*model_, frame);
    t.encoder_ms = ms_since(t0);

    ++frames_seen_;
    std::optional<Tensor> out;
    if (frames_seen_ >= cfg.n_frames) {
        std::vector<Tensor> window = buffer_;  // oldest first
        window.push_back(enc.bottleneck);
        auto t1 = std::chrono::steady_clock::now();
        Tensor hidden = temporal_forward(*model_, window);
        t.lstm_ms = ms_since(t1);
        auto t2 = std::chrono::steady_clock::now();
        Tensor logits = decoder_forward(*model_, hidden, enc);
        out = softmax_channel(logits);
        t.decoder_ms = ms_since(t2);
    }

    buffer_.push_back(std::move(enc.bottleneck));
    if (buffer_.size() >= cfg.n_frames) buffer_.erase(buffer_.begin());
    t.total_ms = ms_since(t0);
    timings_.push_back(t);
    return out;
}

std::string timing_csv(const std::vector<StreamTiming>& timings) {
    std::string s = "frame,encoder_ms,lstm_ms,decoder_ms,total_ms\n";
    char buf[160];
    StreamTiming mean;
    for (size_t i = 0; i < timings.size(); ++i) {
        const StreamTiming& t = timings[i];
        std::snprintf(buf, sizeof buf, "%zu,%.3f,%.3f,%.3f,%.3f\n", i, t.encoder_ms, t.lstm_ms,
                      t.decoder_ms, t.total_ms);
        s += buf;
        mean.encoder_ms += t.encoder_ms;
        mean.lstm_ms += t.lstm_ms;
        mean.decoder_ms += t.decoder_ms;
        mean.total_ms += t.total_ms;
    }
    double n = timings.empty() ? 1.0 : double(timings.size());
    std::snprintf(buf, sizeof buf, "mean,%.3f,%.3f,%.3f,%.3f\n", mean.encoder_ms / n,
                  mean.lstm_ms / n, mean.decoder_ms / n, mean.total_ms / n);
    s += buf;
    return s;
}

void write_timing_csv(const std::string& path, const std::vector<StreamTiming>& timings) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << timing_csv(timings);
    if (!f) throw std::runtime_error("failed while writing " + path);
}

}  // namespace laneseq
