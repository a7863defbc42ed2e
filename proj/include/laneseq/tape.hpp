#pragma once
// Append-only reverse-mode tape over the primitive kernels. Node ids are
// SSA-style: every op's inputs must already exist, so the record list is a
// topological order by construction and backward is a reverse replay.

#include <functional>
#include <vector>

#include "laneseq/ops.hpp"

namespace laneseq {

class Tape {
  public:
    struct PoolNodes {
        int out;
        int indices;  // handle into the tape's PoolIndices store, not a node id
    };

    int input(Tensor value);  // leaf (parameter or data)

    int conv2d(int x, int w, int b = -1);  // b = -1: no bias
    PoolNodes maxpool2(int x);
    int max_unpool(int x, int indices, uint32_t target_h, uint32_t target_w);
    int upsample2(int x);
    int concat(int a, int b);
    int slice(int x, uint32_t c_begin, uint32_t c_end);
    int act(int x, Act kind);
    int add(int a, int b);
    int mul(int a, int b);

    const Tensor& value(int id) const;
    const PoolIndices& pool_indices(int handle) const;
    size_t node_count() const { return values_.size(); }

    // Seeds d(loss)/d(node) and replays all records in reverse. One shot per tape.
    void backward_seed(int id, Tensor seed);
    // Accumulated gradient of the seeded scalar w.r.t. node id (zeros if the
    // node does not influence it). Valid after backward_seed.
    const Tensor& grad(int id);

  private:
    struct Record {
        int out;
        std::function<void(Tape&)> backprop;
    };
    std::vector<Tensor> values_;
    std::vector<Record> records_;
    std::vector<Tensor> grads_;
    std::vector<PoolIndices> pools_;
    bool backward_done_ = false;

    int push(Tensor v);
    void check_id(int id) const;
    void accumulate(int id, Tensor g);
    const Tensor& gout(int id) const { return grads_[id]; }
};

}  // namespace laneseq
