#pragma once
// Binary PGM (P5) writer for probability maps and masks.

#include <string>

#include "laneseq/tensor.hpp"

namespace laneseq {

// values: H x W tensor in [0,1]; scaled to 0..255 (round-half-up, clamped).
void write_pgm(const std::string& path, const Tensor& values);

}  // namespace laneseq
