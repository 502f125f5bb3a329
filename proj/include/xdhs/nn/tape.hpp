#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xdhs/nn/tensor.hpp"

namespace xdhs::nn {

// A trainable tensor. Its address is its identity on a tape and in gradient maps,
// so parameters must not be relocated while a tape or Gradients refers to them.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
};

// Handle to a value recorded on a tape.
struct Var {
    std::size_t id = 0;
};

template <typename T>
class Gradients {
public:
    const Tensor<T>& of(const Parameter<T>& p) const;
    const Tensor<T>& of(Var leaf) const;
    bool contains(const Parameter<T>& p) const { return params_.contains(&p); }
    std::size_t parameter_count() const { return params_.size(); }

private:
    template <typename>
    friend class Tape;
    std::unordered_map<const Parameter<T>*, Tensor<T>> params_;
    std::unordered_map<std::size_t, Tensor<T>> leaves_;
};

// Records operations in execution order; backward() walks them in reverse.
// One tape per forward/backward pass, owned by one training loop.
template <typename T>
class Tape {
public:
    struct BackwardArgs {
        std::span<const Tensor<T>* const> inputs;
        const Tensor<T>& output;
        const Tensor<T>& grad_output;
        // Accumulate (+=) into these. Entries of inputs that need no gradient are null.
        std::span<Tensor<T>* const> grad_inputs;
    };
    using BackwardFn = std::function<void(const BackwardArgs&)>;

    Var constant(Tensor<T> value);
    // Leaf whose gradient is reported by Gradients::of(Var).
    Var input(Tensor<T> value);
    // Leaf bound to a parameter; registering the same parameter twice returns the same Var.
    Var parameter(Parameter<T>& p);

    Var record(Tensor<T> value, std::vector<Var> inputs, BackwardFn backward);

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Reverse-mode accumulation from a scalar. Every parameter registered on the
    // tape gets an entry; parameters the loss does not reach get zeros.
    Gradients<T> backward(Var loss) const;

private:
    struct Node {
        Tensor<T> value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
        bool is_input_leaf = false;
        Parameter<T>* param = nullptr;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Gradients<float>;
extern template class Gradients<double>;

} // namespace xdhs::nn
