#pragma once

#include "xdhs/nn/rng.hpp"
#include "xdhs/nn/tensor.hpp"

namespace xdhs::nn {

// I.i.d. N(0, stddev^2) samples in flat order; the result requires gradients.
template <typename T>
Tensor<T> gaussian_init(const Shape& shape, double stddev, Rng& rng);

} // namespace xdhs::nn
