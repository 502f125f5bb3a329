#pragma once

#include <functional>

#include "xdhs/nn/tape.hpp"

namespace xdhs::nn {

// Builds a scalar on the tape from the checked input.
template <typename T>
using ScalarGraph = std::function<Var(Tape<T>&, Var)>;

// Builds a scalar on the tape; the checked parameter is read from wherever the graph binds it.
template <typename T>
using ParameterGraph = std::function<Var(Tape<T>&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;   // at worst_index
    double numeric = 0.0;
};

// Compares the tape gradient of f at x against central differences:
// max over coordinates of |analytic - cd| / max(|analytic|, |cd|, 1e-8).
template <typename T>
GradCheckResult finite_diff_check(const ScalarGraph<T>& f, const Tensor<T>& x, T eps);

// Same, perturbing the parameter's values in place (restored afterwards).
template <typename T>
GradCheckResult finite_diff_check(const ParameterGraph<T>& f, Parameter<T>& param, T eps);

} // namespace xdhs::nn
