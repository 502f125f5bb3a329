#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "xdhs/data/types.hpp"
#include "xdhs/model/spec.hpp"
#include "xdhs/nn/ops.hpp"
#include "xdhs/nn/rng.hpp"

namespace xdhs::model {

inline constexpr double kInitStd = 0.001;

template <typename T>
struct ConvLayer {
    nn::Parameter<T> weight;
    std::size_t kernel = 1;

    std::size_t pad() const { return (kernel - 1) / 2; }
    nn::Var forward(nn::Tape<T>& tape, nn::Var x) { return nn::conv2d(tape, x, tape.parameter(weight), pad()); }
};

// Per-domain inlet: 5x5 conv B->w, BN, ReLU, 1x1 conv w->w, BN, ReLU.
template <typename T>
struct DataLayers {
    ConvLayer<T> conv1;
    nn::BatchNorm<T> bn1;
    ConvLayer<T> conv2;
    nn::BatchNorm<T> bn2;
};

// conv-BN-ReLU-conv-BN, skip-add, ReLU.
template <typename T>
struct ResidualModule {
    ConvLayer<T> conv_a;
    nn::BatchNorm<T> bn_a;
    ConvLayer<T> conv_b;
    nn::BatchNorm<T> bn_b;
};

template <typename T>
struct SharedLayers {
    std::vector<ResidualModule<T>> modules;
};

template <typename T>
struct TaskLayer {
    ConvLayer<T> conv;
};

struct DomainShape {
    std::string name;
    std::size_t bands = 0;
    std::size_t classes = 0;
};

// K inlets and K heads around one shared trunk. A plain backbone is the K = 1 case.
// Parameters are identified by address, so a model must stay put while a tape
// or optimizer state refers to it.
template <typename T>
class CrossDomainModel {
public:
    std::vector<DomainShape> domains;
    std::vector<DataLayers<T>> inlets;
    SharedLayers<T> trunk;
    std::vector<TaskLayer<T>> heads;
    std::size_t width = kHiddenWidth;

    std::size_t domain_count() const { return domains.size(); }
    std::size_t k() const { return trunk.modules.size(); }
    std::size_t depth() const { return 2 + 2 * k() + 1; }
    std::vector<LayerSpec> spec(std::size_t domain) const;

    nn::Var forward(nn::Tape<T>& tape, std::size_t domain, nn::Var image, nn::Mode mode);
    nn::Var inlet_forward(nn::Tape<T>& tape, std::size_t domain, nn::Var image, nn::Mode mode);
    nn::Var trunk_forward(nn::Tape<T>& tape, nn::Var features, nn::Mode mode);

    // Visits every stored tensor with its checkpoint name, in a fixed order:
    // inlets, trunk, heads. `trainable` is false for BN running statistics.
    void visit(const std::function<void(const std::string& name, nn::Tensor<T>& tensor, bool trainable)>& fn);
    std::vector<nn::Parameter<T>*> parameters();
};

// Random weights drawn in the order inlets, trunk, heads, so one domain
// consumes the rng exactly as build_backbone does.
template <typename T>
CrossDomainModel<T> build_cross_domain(const std::vector<DomainShape>& domains, std::size_t k, nn::Rng& rng,
                                       std::size_t width = kHiddenWidth);

template <typename T>
CrossDomainModel<T> build_backbone(std::size_t bands, std::size_t classes, std::size_t k, nn::Rng& rng,
                                   std::size_t width = kHiddenWidth);

// Cube as a [B,H,W] tensor.
template <typename T>
nn::Tensor<T> image_tensor(const data::HyperCube& cube);

// One-shot forward of a cube through domain `domain`. Rejects a band mismatch.
template <typename T>
nn::Tensor<T> forward_domain(CrossDomainModel<T>& model, std::size_t domain, const data::HyperCube& cube,
                             nn::Mode mode);

// Copies trunk conv weights, BN affine parameters and running statistics
// from `pretrained` into `target`. Inlets and heads are untouched.
template <typename T>
void transplant_shared(const CrossDomainModel<T>& pretrained, CrossDomainModel<T>& target);

enum class Phase { pretrain, finetune, scratch };

Phase parse_phase(const std::string& text);
std::string to_string(Phase phase);

template <typename T>
struct ParamGroup {
    std::string name;
    std::vector<nn::Parameter<T>*> params;
    double lr_multiplier = 1.0;
    bool weight_decay = true;
};

// data.conv, data.bn, shared.conv, shared.bn, task.conv. Pretrain scales the
// shared groups by 1/n_domains; finetune gives the data groups 10x.
template <typename T>
std::vector<ParamGroup<T>> param_groups(CrossDomainModel<T>& model, Phase phase, std::size_t n_domains);

} // namespace xdhs::model
