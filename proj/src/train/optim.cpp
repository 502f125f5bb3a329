#include "xdhs/train/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xdhs::train {

void Schedule::validate() const {
    if (!(base_lr > 0.0) || !std::isfinite(base_lr))
        throw std::invalid_argument("schedule: base_lr must be positive, got " + std::to_string(base_lr));
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("schedule: gamma must be in (0, 1], got " + std::to_string(gamma));
    if (step_iters && *step_iters == 0) throw std::invalid_argument("schedule: step_iters must be positive");
    if (total_iters == 0) throw std::invalid_argument("schedule: total_iters must be positive");
}

double lr_at(const Schedule& schedule, std::size_t iter) {
    if (iter >= schedule.total_iters)
        throw std::out_of_range("lr_at: iteration " + std::to_string(iter) + " outside schedule of " +
                                std::to_string(schedule.total_iters));
    if (!schedule.step_iters) return schedule.base_lr;
    const auto decays = iter / *schedule.step_iters;
    double lr = schedule.base_lr;
    for (std::size_t i = 0; i < decays; ++i) lr *= schedule.gamma;
    return lr;
}

template <typename T>
const nn::Tensor<T>* SgdState<T>::velocity(const nn::Parameter<T>& p) const {
    const auto it = velocities_.find(&p);
    return it == velocities_.end() ? nullptr : &it->second;
}

template <typename T>
nn::Tensor<T>& SgdState<T>::velocity_for(nn::Parameter<T>& p) {
    auto it = velocities_.find(&p);
    if (it == velocities_.end()) it = velocities_.emplace(&p, nn::Tensor<T>(p.value.shape())).first;
    if (it->second.shape() != p.value.shape())
        throw std::logic_error("velocity of '" + p.name + "' has shape " + nn::shape_str(it->second.shape()) +
                               ", parameter has " + nn::shape_str(p.value.shape()));
    return it->second;
}

template <typename T>
void sgd_step(std::span<const model::ParamGroup<T>> groups, const nn::Gradients<T>& grads, SgdState<T>& state,
              double lr) {
    for (const auto& g : groups)
        for (const auto* p : g.params)
            if (grads.contains(*p) && !grads.of(*p).all_finite())
                throw std::runtime_error("non-finite gradient for parameter '" + p->name + "'");

    const T momentum = static_cast<T>(state.momentum);
    for (const auto& g : groups) {
        const T step = static_cast<T>(lr * g.lr_multiplier);
        const T decay = g.weight_decay ? static_cast<T>(state.weight_decay) : T(0);
        for (auto* p : g.params) {
            if (!grads.contains(*p)) continue;
            const auto grad = grads.of(*p).data();
            auto w = p->value.data();
            auto v = state.velocity_for(*p).data();
            for (std::size_t i = 0; i < w.size(); ++i) {
                const T gi = decay != T(0) ? grad[i] + decay * w[i] : grad[i];
                v[i] = momentum * v[i] - step * gi;
                w[i] = w[i] + v[i];
            }
        }
    }
}

template class SgdState<float>;
template class SgdState<double>;
template void sgd_step(std::span<const model::ParamGroup<float>>, const nn::Gradients<float>&, SgdState<float>&,
                       double);
template void sgd_step(std::span<const model::ParamGroup<double>>, const nn::Gradients<double>&, SgdState<double>&,
                       double);

} // namespace xdhs::train
