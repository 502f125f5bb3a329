#include "xdhs/nn/init.hpp"

#include <cmath>
#include <stdexcept>

namespace xdhs::nn {

template <typename T>
Tensor<T> gaussian_init(const Shape& shape, double stddev, Rng& rng) {
    if (!(stddev > 0.0) || !std::isfinite(stddev))
        throw std::invalid_argument("gaussian_init: stddev must be positive, got " + std::to_string(stddev));
    Tensor<T> t(shape);
    for (auto& v : t.data()) v = static_cast<T>(stddev * rng.normal());
    t.set_requires_grad(true);
    return t;
}

template Tensor<float> gaussian_init(const Shape&, double, Rng&);
template Tensor<double> gaussian_init(const Shape&, double, Rng&);

} // namespace xdhs::nn
