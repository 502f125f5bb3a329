#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>

#include "xdhs/model/network.hpp"
#include "xdhs/nn/tape.hpp"

namespace xdhs::train {

// base_lr * gamma^floor(iter / step_iters), or base_lr when step_iters is absent.
struct Schedule {
    double base_lr = 0.01;
    double gamma = 0.1;
    std::optional<std::size_t> step_iters;
    std::size_t total_iters = 2000;

    void validate() const;
};

double lr_at(const Schedule& schedule, std::size_t iter);

// Momentum SGD state. Velocities are created at zero the first time a
// parameter is stepped and keyed by parameter address.
template <typename T>
class SgdState {
public:
    double momentum = 0.9;
    double weight_decay = 0.0005;

    // Null if the parameter was never stepped.
    const nn::Tensor<T>* velocity(const nn::Parameter<T>& p) const;
    nn::Tensor<T>& velocity_for(nn::Parameter<T>& p);
    std::size_t size() const { return velocities_.size(); }

private:
    std::unordered_map<const nn::Parameter<T>*, nn::Tensor<T>> velocities_;
};

// One update of every parameter that has a gradient in `grads`, with
// lr_effective = lr * group multiplier:
//   g = grad + weight_decay * w   (groups with weight decay only)
//   v = momentum * v - lr_effective * g
//   w = w + v
// Parameters absent from `grads` (not on the tape) are left alone, velocity included.
// A non-finite gradient aborts before anything is modified.
template <typename T>
void sgd_step(std::span<const model::ParamGroup<T>> groups, const nn::Gradients<T>& grads, SgdState<T>& state,
              double lr);

} // namespace xdhs::train
