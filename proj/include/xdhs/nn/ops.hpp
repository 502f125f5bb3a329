#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "xdhs/data/types.hpp"
#include "xdhs/nn/tape.hpp"

namespace xdhs::nn {

enum class Mode { train, eval };

template <typename T>
struct BatchNorm {
    Parameter<T> gamma;
    Parameter<T> beta;
    Tensor<T> running_mean;
    Tensor<T> running_var;
    T momentum = T(0.1);
    T epsilon = T(1e-5);

    // gamma = 1, beta = 0, running mean 0, running var 1.
    static BatchNorm make(std::size_t channels, const std::string& name);
    std::size_t channels() const { return gamma.value.numel(); }
};

// Stride-1 zero-padded convolution without bias.
// input [Cin,H,W], weight [Cout,Cin,k,k] with k odd and pad = (k-1)/2.
template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, std::size_t pad);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

template <typename T>
Var sum(Tape<T>& tape, Var x);

template <typename T>
Var mean(Tape<T>& tape, Var x);

// Per-channel normalization over all H*W positions of one image. Train mode
// normalizes with the image statistics and folds them into the running
// statistics; eval mode uses the running statistics.
template <typename T>
Var batchnorm(Tape<T>& tape, Var input, BatchNorm<T>& state, Mode mode);

// Mean over `mask` of -log softmax(logits[:, row, col])[label - 1].
template <typename T>
Var softmax_ce_loss(Tape<T>& tape, Var logits, const data::LabelMap& labels, std::span<const data::Pixel> mask);

struct FocalParams {
    double gamma = 5.0;
    double alpha = 0.25;
    std::optional<std::uint16_t> background_class;

    void validate() const;
};

// Mean over `mask` of -alpha_t (1 - p_t)^gamma log p_t. alpha_t is alpha for
// foreground pixels and 1 - alpha for the background class, if one is named.
template <typename T>
Var focal_loss(Tape<T>& tape, Var logits, const data::LabelMap& labels, std::span<const data::Pixel> mask,
               const FocalParams& params);

// Index of the largest logit per pixel as a class id 1..C; ties go to the lowest class.
template <typename T>
data::LabelMap argmax_classes(const Tensor<T>& logits);

} // namespace xdhs::nn
