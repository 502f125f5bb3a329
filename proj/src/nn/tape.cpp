#include "xdhs/nn/tape.hpp"

#include <stdexcept>

namespace xdhs::nn {

template <typename T>
const Tensor<T>& Gradients<T>::of(const Parameter<T>& p) const {
    auto it = params_.find(&p);
    if (it == params_.end()) throw std::out_of_range("no gradient recorded for parameter '" + p.name + "'");
    return it->second;
}

template <typename T>
const Tensor<T>& Gradients<T>::of(Var leaf) const {
    auto it = leaves_.find(leaf.id);
    if (it == leaves_.end()) throw std::out_of_range("no gradient recorded for input leaf");
    return it->second;
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false, false, nullptr});
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, true, true, nullptr});
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
    nodes_.push_back(Node{p.value, {}, {}, true, false, &p});
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::vector<Var> inputs, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    node.inputs.reserve(inputs.size());
    for (auto v : inputs) {
        if (v.id >= nodes_.size()) throw std::invalid_argument("tape input refers to an unrecorded value");
        node.inputs.push_back(v.id);
        node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
Gradients<T> Tape<T>::backward(Var loss) const {
    if (loss.id >= nodes_.size()) throw std::invalid_argument("backward: loss is not on this tape");
    if (nodes_[loss.id].value.numel() != 1)
        throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                    shape_str(nodes_[loss.id].value.shape()));

    std::vector<std::optional<Tensor<T>>> grads(nodes_.size());
    grads[loss.id] = Tensor<T>::full(nodes_[loss.id].value.shape(), T(1));

    Gradients<T> out;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        const Node& node = nodes_[i];
        if (!node.requires_grad) continue;
        if (node.param != nullptr || node.is_input_leaf) {
            Tensor<T> g = grads[i] ? std::move(*grads[i]) : Tensor<T>(node.value.shape());
            if (node.param != nullptr)
                out.params_.emplace(node.param, std::move(g));
            else
                out.leaves_.emplace(i, std::move(g));
            continue;
        }
        if (!grads[i]) continue;

        std::vector<const Tensor<T>*> input_values(node.inputs.size());
        std::vector<Tensor<T>*> input_grads(node.inputs.size(), nullptr);
        for (std::size_t j = 0; j < node.inputs.size(); ++j) {
            const std::size_t in = node.inputs[j];
            input_values[j] = &nodes_[in].value;
            if (!nodes_[in].requires_grad) continue;
            if (!grads[in]) grads[in] = Tensor<T>(nodes_[in].value.shape());
            input_grads[j] = &*grads[in];
        }
        node.backward(BackwardArgs{input_values, node.value, *grads[i], input_grads});
        grads[i].reset();
    }
    // Parameters recorded after the loss cannot be reached by it.
    for (std::size_t i = loss.id + 1; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        if (node.param != nullptr) out.params_.emplace(node.param, Tensor<T>(node.value.shape()));
        if (node.is_input_leaf) out.leaves_.emplace(i, Tensor<T>(node.value.shape()));
    }
    return out;
}

template class Tape<float>;
template class Tape<double>;
template class Gradients<float>;
template class Gradients<double>;

} // namespace xdhs::nn
