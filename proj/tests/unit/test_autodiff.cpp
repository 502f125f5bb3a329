#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <stdexcept>

#include "support/gradient_suite.hpp"
#include "xdhs/nn/gradcheck.hpp"
#include "xdhs/nn/ops.hpp"
#include "xdhs/nn/rng.hpp"

using namespace xdhs::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
    Tensor<T> t(shape);
    for (auto& v : t.data()) v = static_cast<T>(scale * rng.uniform(-1.0, 1.0));
    return t;
}

// sum(y * r) for a fixed random r, turning tensor-valued ops into scalars.
template <typename T>
Var project(Tape<T>& tape, Var y, std::uint64_t seed) {
    Rng rng(seed);
    return sum(tape, mul(tape, y, tape.constant(random_tensor<T>(tape.value(y).shape(), rng))));
}

} // namespace

TEST_CASE("backward: sum gives ones, x + x gives twos") {
    Tape<float> tape;
    const auto x = tape.input(Tensor<float>::full({2, 3}, 0.5f));
    const auto g = tape.backward(sum(tape, x)).of(x);
    for (float v : g.data()) CHECK(v == 1.0f);

    Tape<float> t2;
    const auto y = t2.input(Tensor<float>::full({4}, -1.0f));
    const auto g2 = t2.backward(sum(t2, add(t2, y, y))).of(y);
    for (float v : g2.data()) CHECK(v == 2.0f);
}

TEST_CASE("backward rejects non-scalar losses") {
    Tape<float> tape;
    const auto x = tape.input(Tensor<float>({3}));
    CHECK_THROWS_WITH_AS(tape.backward(x), doctest::Contains("scalar"), std::invalid_argument);
}

TEST_CASE("parameters reached by several paths sum, unreached ones get zeros") {
    Parameter<double> used{"used", Tensor<double>({2}, {1.0, 2.0})};
    Parameter<double> idle{"idle", Tensor<double>({3}, {1.0, 1.0, 1.0})};
    Tape<double> tape;
    const auto a = tape.parameter(used);
    const auto again = tape.parameter(used);
    CHECK(a.id == again.id);
    tape.parameter(idle);
    const auto grads = tape.backward(sum(tape, add(tape, mul(tape, a, a), again)));
    CHECK(grads.of(used)[0] == 3.0);  // 2x + 1
    CHECK(grads.of(used)[1] == 5.0);
    for (double v : grads.of(idle).data()) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_check reference functions") {
    SUBCASE("sum of squares at [1,2]") {
        const ScalarGraph<double> f = [](Tape<double>& t, Var x) { return sum(t, mul(t, x, x)); };
        Tape<double> tape;
        const auto x = tape.input(Tensor<double>({2}, {1.0, 2.0}));
        const auto g = tape.backward(f(tape, x)).of(x);
        CHECK(g[0] == 2.0);
        CHECK(g[1] == 4.0);
        CHECK(finite_diff_check(f, Tensor<double>({2}, {1.0, 2.0}), 1e-5).max_rel_error < 1e-6);
    }
    SUBCASE("linear function") {
        const ScalarGraph<double> f = [](Tape<double>& t, Var x) { return sum(t, scale(t, x, 3.0)); };
        CHECK(finite_diff_check(f, Tensor<double>({3}, {0.1, -0.7, 2.0}), 1e-4).max_rel_error < 1e-10);
    }
    SUBCASE("conv2d + relu composite on 1x4x4") {
        Rng rng(77);
        auto x = random_tensor<double>({1, 4, 4}, rng);
        const auto w = random_tensor<double>({2, 1, 3, 3}, rng);
        const ScalarGraph<double> f = [&](Tape<double>& t, Var in) {
            return project(t, relu(t, conv2d(t, in, t.constant(w), 1)), 5);
        };
        // Keep the conv outputs off the ReLU kink.
        for (int attempt = 0; attempt < 20; ++attempt) {
            Tape<double> probe;
            const auto y = probe.value(conv2d(probe, probe.constant(x), probe.constant(w), 1));
            bool clear = true;
            for (double v : y.data()) clear = clear && std::abs(v) > 1e-3;
            if (clear) break;
            x = random_tensor<double>({1, 4, 4}, rng);
        }
        CHECK(finite_diff_check(f, x, 1e-6).max_rel_error < 1e-4);
    }
}

namespace {

void check_records(const std::vector<suite::GradRecord>& records) {
    CHECK(!records.empty());
    for (const auto& r : records) {
        CAPTURE(r.what);
        CAPTURE(r.seed);
        CHECK(r.error <= r.tolerance);
    }
}

} // namespace

TEST_CASE("gradient fidelity of every primitive, 64-bit") { check_records(suite::primitive_sweep_64()); }

TEST_CASE("gradient fidelity of every primitive, 32-bit") { check_records(suite::primitive_sweep_32()); }

TEST_CASE("gradient fidelity of the full toy backbone, 64-bit") { check_records(suite::backbone_sweep_64()); }

TEST_CASE("gradient fidelity of the full toy backbone, 32-bit") { check_records(suite::backbone_sweep_32()); }

TEST_CASE("gradient of mean(batchnorm(x)) on a 2x4x4 input") {
    Rng rng(9);
    const auto x = random_tensor<double>({2, 4, 4}, rng);
    auto bn = BatchNorm<double>::make(2, "bn");
    // In train mode mean(bn(x)) equals mean(beta), so both gradients vanish.
    const ScalarGraph<double> plain = [&](Tape<double>& t, Var in) { return mean(t, batchnorm(t, in, bn, Mode::train)); };
    const auto r = finite_diff_check(plain, x, 1e-6);
    CHECK(std::abs(r.analytic) < 1e-9);
    CHECK(std::abs(r.numeric) < 1e-9);
    // A weighted mean exercises the non-trivial part of the backward pass.
    const ScalarGraph<double> weighted = [&](Tape<double>& t, Var in) {
        return scale(t, project(t, batchnorm(t, in, bn, Mode::train), 3), 1.0 / 32.0);
    };
    CHECK(finite_diff_check(weighted, x, 1e-6).max_rel_error < 1e-3);
}

TEST_CASE("backward is bitwise deterministic") {
    Rng rng(3);
    const auto x = random_tensor<float>({3, 6, 6}, rng);
    Parameter<float> w{"w", random_tensor<float>({4, 3, 5, 5}, rng)};
    auto run = [&] {
        Tape<float> tape;
        auto bn = BatchNorm<float>::make(4, "bn");
        const auto y = relu(tape, batchnorm(tape, conv2d(tape, tape.constant(x), tape.parameter(w), 2), bn, Mode::train));
        return tape.backward(project(tape, y, 8)).of(w);
    };
    CHECK(bitwise_equal(run(), run()));
}
