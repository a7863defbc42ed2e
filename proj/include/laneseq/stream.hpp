#pragma once
// Online inference: one encoder pass per incoming frame, ConvLSTM re-run over
// the cached bottleneck window, decode with the current frame's skip data.

#include <optional>
#include <string>
#include <vector>

#include "laneseq/network.hpp"

namespace laneseq {

struct StreamTiming {
    double encoder_ms = 0, lstm_ms = 0, decoder_ms = 0, total_ms = 0;
};

class StreamSession {
  public:
    // Rejects single_frame models.
    explicit StreamSession(const Model& model);

    // Probability map (K×H×W) once warmed up: the first N-1 pushes return
    // nothing. Shape-mismatched frames are rejected with the session unchanged.
    std::optional<Tensor> push_frame(const Tensor& frame);

    uint32_t frames_seen() const { return frames_seen_; }
    const std::vector<StreamTiming>& timings() const { return timings_; }

  private:
    const Model* model_;
    std::vector<Tensor> buffer_;  // last <= N-1 bottlenecks, oldest first
    uint32_t frames_seen_ = 0;
    std::vector<StreamTiming> timings_;
};

// "frame,encoder_ms,lstm_ms,decoder_ms,total_ms", one row per pushed frame
// plus a "mean" summary row.
std::string timing_csv(const std::vector<StreamTiming>& timings);
void write_timing_csv(const std::string& path, const std::vector<StreamTiming>& timings);

}  // namespace laneseq
