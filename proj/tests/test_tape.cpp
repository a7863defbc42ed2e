#include "doctest.h"

#include <stdexcept>

#include "laneseq/rng.hpp"
#include "laneseq/tape.hpp"
#include "oracles.hpp"

using namespace laneseq;

namespace {

Tensor ones_like(const Tensor& t) { return Tensor(t.shape, 1.0); }

}  // namespace

TEST_CASE("tape values match the primitive kernels node by node") {
    SplitMix64 rng(21);
    Tensor x = oracle::random_tensor({2, 4, 4}, rng);
    Tensor w = oracle::random_tensor({3, 2, 3, 3}, rng);
    Tensor b = oracle::random_tensor({3}, rng);

    Tape tape;
    int xi = tape.input(x);
    int wi = tape.input(w);
    int bi = tape.input(b);
    int c = tape.conv2d(xi, wi, bi);
    Tensor want = conv2d(x, w, b);
    for (size_t i = 0; i < want.size(); ++i) CHECK(tape.value(c).data[i] == want.data[i]);

    auto p = tape.maxpool2(c);
    Pooled pw = maxpool2(want);
    for (size_t i = 0; i < pw.out.size(); ++i) CHECK(tape.value(p.out).data[i] == pw.out.data[i]);

    int u = tape.max_unpool(p.out, p.indices, 4, 4);
    Tensor uw = max_unpool(pw.out, pw.indices, 4, 4);
    for (size_t i = 0; i < uw.size(); ++i) CHECK(tape.value(u).data[i] == uw.data[i]);

    int up = tape.upsample2(p.out);
    Tensor upw = upsample_nearest2(pw.out);
    for (size_t i = 0; i < upw.size(); ++i) CHECK(tape.value(up).data[i] == upw.data[i]);

    int s = tape.act(c, Act::Sigmoid);
    Tensor sw = pointwise(want, Act::Sigmoid);
    for (size_t i = 0; i < sw.size(); ++i) CHECK(tape.value(s).data[i] == sw.data[i]);
}

TEST_CASE("tape ids are SSA-ordered and bad ids are rejected") {
    Tape tape;
    int a = tape.input(Tensor({1, 2, 2}, 1.0));
    int b = tape.input(Tensor({1, 2, 2}, 2.0));
    CHECK(a == 0);
    CHECK(b == 1);
    int c = tape.add(a, b);
    CHECK(c == 2);
    CHECK(tape.node_count() == 3);
    CHECK_THROWS_AS(tape.add(a, 7), std::runtime_error);
    CHECK_THROWS_AS(tape.add(-2, b), std::runtime_error);
}

TEST_CASE("grad before backward_seed throws; backward is one-shot") {
    Tape tape;
    int a = tape.input(Tensor({1, 1, 1}, 2.0));
    int b = tape.mul(a, a);
    CHECK_THROWS_WITH_AS(tape.grad(a), doctest::Contains("before backward_seed"),
                         std::runtime_error);
    tape.backward_seed(b, Tensor({1, 1, 1}, 1.0));
    CHECK(tape.grad(a).data[0] == doctest::Approx(4.0));  // d(a*a)/da = 2a
    CHECK_THROWS_WITH_AS(tape.backward_seed(b, Tensor({1, 1, 1}, 1.0)),
                         doctest::Contains("already ran"), std::runtime_error);
}

TEST_CASE("backward_seed rejects a seed with the wrong shape") {
    Tape tape;
    int a = tape.input(Tensor({1, 2, 2}, 1.0));
    CHECK_THROWS_AS(tape.backward_seed(a, Tensor({1, 3, 3}, 1.0)), std::runtime_error);
}

TEST_CASE("fan-out accumulates gradients: y = x + x") {
    Tape tape;
    int x = tape.input(Tensor({1, 2, 2}, 3.0));
    int y = tape.add(x, x);
    tape.backward_seed(y, ones_like(tape.value(y)));
    for (double v : tape.grad(x).data) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("gradient of an unused node is all zeros") {
    Tape tape;
    int x = tape.input(Tensor({1, 2, 2}, 3.0));
    int unused = tape.input(Tensor({1, 2, 2}, 5.0));
    int y = tape.mul(x, x);
    tape.backward_seed(y, ones_like(tape.value(y)));
    for (double v : tape.grad(unused).data) CHECK(v == 0.0);
}

TEST_CASE("tape conv2d gradients match finite differences") {
    SplitMix64 rng(22);
    Tensor x = oracle::random_tensor({2, 4, 4}, rng);
    Tensor w = oracle::random_tensor({2, 2, 3, 3}, rng);
    Tensor b = oracle::random_tensor({2}, rng);
    Tensor og = oracle::random_tensor({2, 4, 4}, rng);

    auto run = [&](Tensor* gx, Tensor* gw, Tensor* gb) {
        Tape tape;
        int xi = tape.input(x), wi = tape.input(w), bi = tape.input(b);
        int y = tape.conv2d(xi, wi, bi);
        double s = 0;
        for (size_t i = 0; i < tape.value(y).size(); ++i) s += tape.value(y).data[i] * og.data[i];
        if (gx) {
            tape.backward_seed(y, og);
            *gx = tape.grad(xi);
            *gw = tape.grad(wi);
            *gb = tape.grad(bi);
        }
        return s;
    };
    Tensor gx, gw, gb;
    run(&gx, &gw, &gb);
    auto loss = [&]() { return run(nullptr, nullptr, nullptr); };
    CHECK(oracle::max_grad_rel_err(x, gx, loss) < 1e-6);
    CHECK(oracle::max_grad_rel_err(w, gw, loss) < 1e-6);
    CHECK(oracle::max_grad_rel_err(b, gb, loss) < 1e-6);
}

TEST_CASE("tape pool/unpool/upsample/act gradients match finite differences") {
    SplitMix64 rng(23);
    Tensor x = oracle::random_tensor({1, 4, 4}, rng);
    Tensor og = oracle::random_tensor({1, 4, 4}, rng);

    auto run = [&](Tensor* gx) {
        Tape tape;
        int xi = tape.input(x);
        auto p = tape.maxpool2(xi);                        // 1x2x2
        int u = tape.upsample2(p.out);                     // 1x4x4
        int t = tape.act(u, Act::Tanh);
        int un = tape.max_unpool(p.out, p.indices, 4, 4);  // 1x4x4
        int y = tape.add(t, un);
        double s = 0;
        for (size_t i = 0; i < tape.value(y).size(); ++i) s += tape.value(y).data[i] * og.data[i];
        if (gx) {
            tape.backward_seed(y, og);
            *gx = tape.grad(xi);
        }
        return s;
    };
    Tensor gx;
    run(&gx);
    auto loss = [&]() { return run(nullptr); };
    // pool argmax switching is non-differentiable at ties; random input avoids them
    CHECK(oracle::max_grad_rel_err(x, gx, loss) < 1e-6);
}

TEST_CASE("tape concat/slice gradients match finite differences") {
    SplitMix64 rng(24);
    Tensor a = oracle::random_tensor({2, 3, 3}, rng);
    Tensor b = oracle::random_tensor({1, 3, 3}, rng);
    Tensor og = oracle::random_tensor({2, 3, 3}, rng);

    auto run = [&](Tensor* ga, Tensor* gb) {
        Tape tape;
        int ai = tape.input(a), bi = tape.input(b);
        int c = tape.concat(ai, bi);             // 3x3x3
        int s0 = tape.slice(c, 0, 1);            // 1x3x3
        int s1 = tape.slice(c, 1, 3);            // 2x3x3
        int y = tape.mul(s1, tape.concat(s0, s0));
        double s = 0;
        for (size_t i = 0; i < tape.value(y).size(); ++i) s += tape.value(y).data[i] * og.data[i];
        if (ga) {
            tape.backward_seed(y, og);
            *ga = tape.grad(ai);
            *gb = tape.grad(bi);
        }
        return s;
    };
    Tensor ga, gb;
    run(&ga, &gb);
    auto loss = [&]() { return run(nullptr, nullptr); };
    CHECK(oracle::max_grad_rel_err(a, ga, loss) < 1e-6);
    CHECK(oracle::max_grad_rel_err(b, gb, loss) < 1e-6);
}

TEST_CASE("tape mul/add/act chain matches a hand-derived gradient") {
    // y = sigmoid(a) * tanh(b) + a; dy/da = sigmoid'(a)*tanh(b) + 1, dy/db = sigmoid(a)*tanh'(b)
    double av = 0.3, bv = -0.7;
    Tape tape;
    int a = tape.input(Tensor({1, 1, 1}, av));
    int b = tape.input(Tensor({1, 1, 1}, bv));
    int y = tape.add(tape.mul(tape.act(a, Act::Sigmoid), tape.act(b, Act::Tanh)), a);
    tape.backward_seed(y, Tensor({1, 1, 1}, 1.0));
    double sa = oracle::sigmoid(av), tb = std::tanh(bv);
    CHECK(tape.grad(a).data[0] == doctest::Approx(sa * (1 - sa) * tb + 1).epsilon(1e-12));
    CHECK(tape.grad(b).data[0] == doctest::Approx(sa * (1 - tb * tb)).epsilon(1e-12));
}

TEST_CASE("relu gradient is the forward mask") {
    Tensor x({1, 1, 4});
    x.data = {-2.0, -0.5, 0.5, 3.0};
    Tape tape;
    int xi = tape.input(x);
    int y = tape.act(xi, Act::Relu);
    tape.backward_seed(y, Tensor({1, 1, 4}, 1.0));
    const Tensor& g = tape.grad(xi);
    CHECK(g.data[0] == 0.0);
    CHECK(g.data[1] == 0.0);
    CHECK(g.data[2] == 1.0);
    CHECK(g.data[3] == 1.0);
}

TEST_CASE("deep composite tape gradient survives a finite-difference sweep") {
    // conv -> relu -> pool -> conv -> sigmoid -> upsample -> unpool-add: the
    // whole primitive vocabulary in one graph.
    SplitMix64 rng(25);
    Tensor x = oracle::random_tensor({1, 8, 8}, rng);
    Tensor w1 = oracle::random_tensor({2, 1, 3, 3}, rng, -0.5, 0.5);
    Tensor b1 = oracle::random_tensor({2}, rng, -0.1, 0.1);
    Tensor w2 = oracle::random_tensor({2, 2, 3, 3}, rng, -0.5, 0.5);
    Tensor og = oracle::random_tensor({2, 8, 8}, rng);

    auto run = [&](Tensor* gw1, Tensor* gb1, Tensor* gw2) {
        Tape tape;
        int xi = tape.input(x);
        int w1i = tape.input(w1), b1i = tape.input(b1), w2i = tape.input(w2);
        int c1 = tape.act(tape.conv2d(xi, w1i, b1i), Act::Relu);
        auto p = tape.maxpool2(c1);
        int c2 = tape.act(tape.conv2d(p.out, w2i), Act::Sigmoid);
        int up = tape.upsample2(c2);
        int un = tape.max_unpool(c2, p.indices, 8, 8);
        int y = tape.add(up, un);
        double s = 0;
        for (size_t i = 0; i < tape.value(y).size(); ++i) s += tape.value(y).data[i] * og.data[i];
        if (gw1) {
            tape.backward_seed(y, og);
            *gw1 = tape.grad(w1i);
            *gb1 = tape.grad(b1i);
            *gw2 = tape.grad(w2i);
        }
        return s;
    };
    Tensor gw1, gb1, gw2;
    run(&gw1, &gb1, &gw2);
    auto loss = [&]() { return run(nullptr, nullptr, nullptr); };
    CHECK(oracle::max_grad_rel_err(w1, gw1, loss) < 1e-4);
    CHECK(oracle::max_grad_rel_err(b1, gb1, loss) < 1e-4);
    CHECK(oracle::max_grad_rel_err(w2, gw2, loss) < 1e-4);
}
