#include "xdhs/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace xdhs::nn {

namespace {

template <typename T>
GradCheckResult compare(const Tensor<T>& analytic, const std::function<T(std::size_t, T)>& eval_at, T eps) {
    GradCheckResult result;
    for (std::size_t i = 0; i < analytic.numel(); ++i) {
        const double plus = eval_at(i, eps);
        const double minus = eval_at(i, -eps);
        const double cd = (plus - minus) / (2.0 * static_cast<double>(eps));
        const double a = analytic[i];
        const double err = std::abs(a - cd) / std::max({std::abs(a), std::abs(cd), 1e-8});
        if (i == 0 || err > result.max_rel_error) result = {err, i, a, cd};
    }
    return result;
}

} // namespace

template <typename T>
GradCheckResult finite_diff_check(const ScalarGraph<T>& f, const Tensor<T>& x, T eps) {
    Tape<T> tape;
    const Var leaf = tape.input(x);
    const Gradients<T> grads = tape.backward(f(tape, leaf));
    const Tensor<T> analytic = grads.of(leaf);

    Tensor<T> probe = x;
    auto eval_at = [&](std::size_t i, T delta) {
        const T saved = probe[i];
        probe[i] = saved + delta;
        Tape<T> t;
        const T v = t.value(f(t, t.input(probe))).item();
        probe[i] = saved;
        return v;
    };
    return compare<T>(analytic, eval_at, eps);
}

template <typename T>
GradCheckResult finite_diff_check(const ParameterGraph<T>& f, Parameter<T>& param, T eps) {
    Tape<T> tape;
    const Var loss = f(tape);
    const Gradients<T> grads = tape.backward(loss);
    const Tensor<T> analytic = grads.contains(param) ? grads.of(param) : Tensor<T>(param.value.shape());

    auto eval_at = [&](std::size_t i, T delta) {
        const T saved = param.value[i];
        param.value[i] = saved + delta;
        Tape<T> t;
        const T v = t.value(f(t)).item();
        param.value[i] = saved;
        return v;
    };
    return compare<T>(analytic, eval_at, eps);
}

template GradCheckResult finite_diff_check(const ScalarGraph<float>&, const Tensor<float>&, float);
template GradCheckResult finite_diff_check(const ScalarGraph<double>&, const Tensor<double>&, double);
template GradCheckResult finite_diff_check(const ParameterGraph<float>&, Parameter<float>&, float);
template GradCheckResult finite_diff_check(const ParameterGraph<double>&, Parameter<double>&, double);

} // namespace xdhs::nn
