#include "laneseq/tape.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace laneseq {

int Tape::push(Tensor v) {
    values_.push_back(std::move(v));
    return int(values_.size()) - 1;
}

void Tape::check_id(int id) const {
    if (id < 0 || size_t(id) >= values_.size())
        throw std::runtime_error("tape: node id " + std::to_string(id) +
                                 " does not precede its consumer (cycle or bad id)");
}

const Tensor& Tape::value(int id) const {
    check_id(id);
    return values_[size_t(id)];
}

const PoolIndices& Tape::pool_indices(int handle) const {
    if (handle < 0 || size_t(handle) >= pools_.size())
        throw std::runtime_error("tape: bad pool-indices handle " + std::to_string(handle));
    return pools_[size_t(handle)];
}

void Tape::accumulate(int id, Tensor g) {
    Tensor& slot = grads_[size_t(id)];
    if (slot.size() == 0) {
        slot = std::move(g);
        return;
    }
    for (size_t i = 0; i < slot.size(); ++i) slot[i] += g[i];
}

int Tape::input(Tensor value) { return push(std::move(value)); }

int Tape::conv2d(int x, int w, int b) {
    check_id(x);
    check_id(w);
    if (b >= 0) check_id(b);
    Tensor out = laneseq::conv2d(values_[x], values_[w], b >= 0 ? values_[b] : Tensor{});
    int id = push(std::move(out));
    records_.push_back({id, [x, w, b, id](Tape& t) {
                            Conv2dGrads g =
                                conv2d_grad(t.gout(id), t.values_[x], t.values_[w]);
                            t.accumulate(x, std::move(g.input_grad));
                            t.accumulate(w, std::move(g.kernel_grad));
                            if (b >= 0) t.accumulate(b, std::move(g.bias_grad));
                        }});
    return id;
}

Tape::PoolNodes Tape::maxpool2(int x) {
    check_id(x);
    Pooled p = laneseq::maxpool2(values_[x]);
    pools_.push_back(std::move(p.indices));
    int handle = int(pools_.size()) - 1;
    int id = push(std::move(p.out));
    records_.push_back({id, [x, id, handle](Tape& t) {
                            t.accumulate(x, maxpool2_grad(t.gout(id), t.pools_[handle]));
                        }});
    return {id, handle};
}

int Tape::max_unpool(int x, int indices, uint32_t target_h, uint32_t target_w) {
    check_id(x);
    const PoolIndices& idx = pool_indices(indices);
    int id = push(laneseq::max_unpool(values_[x], idx, target_h, target_w));
    records_.push_back({id, [x, id, indices](Tape& t) {
                            t.accumulate(x, max_unpool_grad(t.gout(id), t.pools_[indices]));
                        }});
    return id;
}

int Tape::upsample2(int x) {
    check_id(x);
    int id = push(upsample_nearest2(values_[x]));
    records_.push_back(
        {id, [x, id](Tape& t) { t.accumulate(x, upsample_nearest2_grad(t.gout(id))); }});
    return id;
}

int Tape::concat(int a, int b) {
    check_id(a);
    check_id(b);
    uint32_t ca = values_[a].shape[0];
    uint32_t cb = values_[b].shape[0];
    int id = push(concat_channels(values_[a], values_[b]));
    records_.push_back({id, [a, b, ca, cb, id](Tape& t) {
                            const Tensor& g = t.gout(id);
                            t.accumulate(a, slice_channels(g, 0, ca));
                            if (cb > 0) t.accumulate(b, slice_channels(g, ca, ca + cb));
                        }});
    return id;
}

int Tape::slice(int x, uint32_t c_begin, uint32_t c_end) {
    check_id(x);
    int id = push(slice_channels(values_[x], c_begin, c_end));
    records_.push_back({id, [x, c_begin, id](Tape& t) {
                            const Tensor& g = t.gout(id);
                            Tensor gx(t.values_[x].shape);
                            size_t hw = size_t(gx.shape[1]) * gx.shape[2];
                            std::memcpy(gx.ptr() + size_t(c_begin) * hw, g.ptr(),
                                        g.size() * sizeof(double));
                            t.accumulate(x, std::move(gx));
                        }});
    return id;
}

int Tape::act(int x, Act kind) {
    check_id(x);
    int id = push(pointwise(values_[x], kind));
    records_.push_back({id, [x, id, kind](Tape& t) {
                            t.accumulate(
                                x, pointwise_grad_from_output(t.gout(id), t.values_[id], kind));
                        }});
    return id;
}

int Tape::add(int a, int b) {
    check_id(a);
    check_id(b);
    int id = push(laneseq::add(values_[a], values_[b]));
    records_.push_back({id, [a, b, id](Tape& t) {
                            t.accumulate(a, t.gout(id));
                            t.accumulate(b, t.gout(id));
                        }});
    return id;
}

int Tape::mul(int a, int b) {
    check_id(a);
    check_id(b);
    int id = push(laneseq::mul(values_[a], values_[b]));
    records_.push_back({id, [a, b, id](Tape& t) {
                            t.accumulate(a, laneseq::mul(t.gout(id), t.values_[b]));
                            t.accumulate(b, laneseq::mul(t.gout(id), t.values_[a]));
                        }});
    return id;
}

void Tape::backward_seed(int id, Tensor seed) {
    check_id(id);
    if (backward_done_)
        throw std::runtime_error("tape: backward already ran; build a fresh tape to re-seed");
    if (!same_shape(seed, values_[id]))
        throw std::runtime_error("tape: seed shape " + shape_str(seed.shape) +
                                 " != node shape " + shape_str(values_[id].shape));
    grads_.assign(values_.size(), Tensor{});
    grads_[size_t(id)] = std::move(seed);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (grads_[size_t(it->out)].size() == 0) continue;  // node not on the loss path
        it->backprop(*this);
    }
    backward_done_ = true;
}

const Tensor& Tape::grad(int id) {
    check_id(id);
    if (!backward_done_) throw std::runtime_error("tape: grad() before backward_seed()");
    Tensor& slot = grads_[size_t(id)];
    if (slot.size() == 0) slot = Tensor(values_[id].shape);  // zeros: not on the loss path
    return slot;
}

}  // namespace laneseq
