#include "xdhs/model/network.hpp"

#include <stdexcept>

#include "xdhs/nn/init.hpp"

namespace xdhs::model {

using nn::Mode;
using nn::Tape;
using nn::Var;

namespace {

template <typename T>
ConvLayer<T> make_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel, nn::Rng& rng) {
    return {nn::Parameter<T>{name, nn::gaussian_init<T>({out, in, kernel, kernel}, kInitStd, rng)}, kernel};
}

template <typename T>
Var conv_bn(Tape<T>& tape, ConvLayer<T>& conv, nn::BatchNorm<T>& bn, Var x, Mode mode) {
    return nn::batchnorm(tape, conv.forward(tape, x), bn, mode);
}

template <typename T>
void visit_bn(const std::string& prefix, nn::BatchNorm<T>& bn,
              const std::function<void(const std::string&, nn::Tensor<T>&, bool)>& fn) {
    fn(prefix + ".gamma", bn.gamma.value, true);
    fn(prefix + ".beta", bn.beta.value, true);
    fn(prefix + ".running_mean", bn.running_mean, false);
    fn(prefix + ".running_var", bn.running_var, false);
}

template <typename T>
void copy_bn(const nn::BatchNorm<T>& from, nn::BatchNorm<T>& to) {
    to.gamma.value = from.gamma.value;
    to.beta.value = from.beta.value;
    to.running_mean = from.running_mean;
    to.running_var = from.running_var;
    to.momentum = from.momentum;
    to.epsilon = from.epsilon;
}

} // namespace

template <typename T>
std::vector<LayerSpec> CrossDomainModel<T>::spec(std::size_t domain) const {
    const auto& d = domains.at(domain);
    return backbone_spec(d.bands, d.classes, k(), width);
}

template <typename T>
Var CrossDomainModel<T>::inlet_forward(Tape<T>& tape, std::size_t domain, Var image, Mode mode) {
    auto& in = inlets.at(domain);
    Var x = nn::relu(tape, conv_bn(tape, in.conv1, in.bn1, image, mode));
    return nn::relu(tape, conv_bn(tape, in.conv2, in.bn2, x, mode));
}

template <typename T>
Var CrossDomainModel<T>::trunk_forward(Tape<T>& tape, Var x, Mode mode) {
    for (auto& m : trunk.modules) {
        Var y = nn::relu(tape, conv_bn(tape, m.conv_a, m.bn_a, x, mode));
        y = conv_bn(tape, m.conv_b, m.bn_b, y, mode);
        x = nn::relu(tape, nn::add(tape, y, x));
    }
    return x;
}

template <typename T>
Var CrossDomainModel<T>::forward(Tape<T>& tape, std::size_t domain, Var image, Mode mode) {
    const auto& shape = tape.value(image).shape();
    const auto& d = domains.at(domain);
    if (shape.size() != 3 || shape[0] != d.bands)
        throw std::invalid_argument("domain '" + d.name + "' expects " + std::to_string(d.bands) +
                                    " bands, got input of shape " + nn::shape_str(shape));
    Var x = inlet_forward(tape, domain, image, mode);
    x = trunk_forward(tape, x, mode);
    return heads.at(domain).conv.forward(tape, x);
}

template <typename T>
void CrossDomainModel<T>::visit(const std::function<void(const std::string&, nn::Tensor<T>&, bool)>& fn) {
    for (std::size_t d = 0; d < inlets.size(); ++d) {
        const std::string p = "data/" + std::to_string(d) + "/";
        fn(p + "conv1.weight", inlets[d].conv1.weight.value, true);
        visit_bn(p + "bn1", inlets[d].bn1, fn);
        fn(p + "conv2.weight", inlets[d].conv2.weight.value, true);
        visit_bn(p + "bn2", inlets[d].bn2, fn);
    }
    for (std::size_t i = 0; i < trunk.modules.size(); ++i) {
        const std::string p = "shared/" + std::to_string(i) + "/";
        auto& m = trunk.modules[i];
        fn(p + "conv_a.weight", m.conv_a.weight.value, true);
        visit_bn(p + "bn_a", m.bn_a, fn);
        fn(p + "conv_b.weight", m.conv_b.weight.value, true);
        visit_bn(p + "bn_b", m.bn_b, fn);
    }
    for (std::size_t d = 0; d < heads.size(); ++d)
        fn("task/" + std::to_string(d) + "/conv.weight", heads[d].conv.weight.value, true);
}

template <typename T>
std::vector<nn::Parameter<T>*> CrossDomainModel<T>::parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto& g : param_groups(*this, Phase::scratch, 1))
        out.insert(out.end(), g.params.begin(), g.params.end());
    return out;
}

template <typename T>
CrossDomainModel<T> build_cross_domain(const std::vector<DomainShape>& domains, std::size_t k, nn::Rng& rng,
                                       std::size_t width) {
    if (domains.empty()) throw std::invalid_argument("cross-domain model needs at least one domain");
    for (const auto& d : domains) backbone_spec(d.bands, d.classes, k, width);  // validates

    CrossDomainModel<T> m;
    m.domains = domains;
    m.width = width;
    for (std::size_t d = 0; d < domains.size(); ++d) {
        const std::string p = "data/" + std::to_string(d) + "/";
        DataLayers<T> in;
        in.conv1 = make_conv<T>(p + "conv1.weight", domains[d].bands, width, 5, rng);
        in.bn1 = nn::BatchNorm<T>::make(width, p + "bn1");
        in.conv2 = make_conv<T>(p + "conv2.weight", width, width, 1, rng);
        in.bn2 = nn::BatchNorm<T>::make(width, p + "bn2");
        m.inlets.push_back(std::move(in));
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::string p = "shared/" + std::to_string(i) + "/";
        ResidualModule<T> r;
        r.conv_a = make_conv<T>(p + "conv_a.weight", width, width, 1, rng);
        r.bn_a = nn::BatchNorm<T>::make(width, p + "bn_a");
        r.conv_b = make_conv<T>(p + "conv_b.weight", width, width, 1, rng);
        r.bn_b = nn::BatchNorm<T>::make(width, p + "bn_b");
        m.trunk.modules.push_back(std::move(r));
    }
    for (std::size_t d = 0; d < domains.size(); ++d)
        m.heads.push_back({make_conv<T>("task/" + std::to_string(d) + "/conv.weight", width, domains[d].classes, 1, rng)});
    return m;
}

template <typename T>
CrossDomainModel<T> build_backbone(std::size_t bands, std::size_t classes, std::size_t k, nn::Rng& rng,
                                   std::size_t width) {
    return build_cross_domain<T>({DomainShape{"target", bands, classes}}, k, rng, width);
}

template <typename T>
nn::Tensor<T> image_tensor(const data::HyperCube& cube) {
    const std::size_t h = cube.height, w = cube.width, b = cube.bands;
    nn::Tensor<T> t({b, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < b; ++c) t.at(c, y, x) = static_cast<T>(cube.at(y, x, c));
    return t;
}

template <typename T>
nn::Tensor<T> forward_domain(CrossDomainModel<T>& model, std::size_t domain, const data::HyperCube& cube,
                             Mode mode) {
    const auto& d = model.domains.at(domain);
    if (cube.bands != d.bands)
        throw std::invalid_argument("band mismatch for domain '" + d.name + "': expected " + std::to_string(d.bands) +
                                    ", got " + std::to_string(cube.bands));
    Tape<T> tape;
    return tape.value(model.forward(tape, domain, tape.constant(image_tensor<T>(cube)), mode));
}

template <typename T>
void transplant_shared(const CrossDomainModel<T>& pretrained, CrossDomainModel<T>& target) {
    if (pretrained.k() != target.k())
        throw std::invalid_argument("transplant needs equal residual counts: pretrained k = " +
                                    std::to_string(pretrained.k()) + ", target k = " + std::to_string(target.k()));
    if (pretrained.width != target.width)
        throw std::invalid_argument("transplant needs equal hidden widths: " + std::to_string(pretrained.width) +
                                    " vs " + std::to_string(target.width));
    for (std::size_t i = 0; i < target.k(); ++i) {
        const auto& from = pretrained.trunk.modules[i];
        auto& to = target.trunk.modules[i];
        to.conv_a.weight.value = from.conv_a.weight.value;
        to.conv_b.weight.value = from.conv_b.weight.value;
        copy_bn(from.bn_a, to.bn_a);
        copy_bn(from.bn_b, to.bn_b);
    }
}

Phase parse_phase(const std::string& text) {
    if (text == "pretrain") return Phase::pretrain;
    if (text == "finetune") return Phase::finetune;
    if (text == "scratch") return Phase::scratch;
    throw std::invalid_argument("unknown phase '" + text + "' (expected pretrain, finetune or scratch)");
}

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::pretrain: return "pretrain";
        case Phase::finetune: return "finetune";
        case Phase::scratch: return "scratch";
    }
    return "?";
}

template <typename T>
std::vector<ParamGroup<T>> param_groups(CrossDomainModel<T>& model, Phase phase, std::size_t n_domains) {
    if (n_domains < 1) throw std::invalid_argument("param_groups needs N >= 1");
    double data_m = 1.0, shared_m = 1.0, task_m = 1.0;
    switch (phase) {
        case Phase::pretrain: shared_m = 1.0 / static_cast<double>(n_domains); break;
        case Phase::finetune: data_m = 10.0; break;
        case Phase::scratch: break;
    }
    ParamGroup<T> data_conv{"data.conv", {}, data_m, true};
    ParamGroup<T> data_bn{"data.bn", {}, data_m, false};
    ParamGroup<T> shared_conv{"shared.conv", {}, shared_m, true};
    ParamGroup<T> shared_bn{"shared.bn", {}, shared_m, false};
    ParamGroup<T> task_conv{"task.conv", {}, task_m, true};
    for (auto& in : model.inlets) {
        data_conv.params.push_back(&in.conv1.weight);
        data_conv.params.push_back(&in.conv2.weight);
        for (auto* bn : {&in.bn1, &in.bn2}) {
            data_bn.params.push_back(&bn->gamma);
            data_bn.params.push_back(&bn->beta);
        }
    }
    for (auto& m : model.trunk.modules) {
        shared_conv.params.push_back(&m.conv_a.weight);
        shared_conv.params.push_back(&m.conv_b.weight);
        for (auto* bn : {&m.bn_a, &m.bn_b}) {
            shared_bn.params.push_back(&bn->gamma);
            shared_bn.params.push_back(&bn->beta);
        }
    }
    for (auto& h : model.heads) task_conv.params.push_back(&h.conv.weight);
    return {data_conv, data_bn, shared_conv, shared_bn, task_conv};
}

#define XDHS_INSTANTIATE_MODEL(T)                                                                                \
    template class CrossDomainModel<T>;                                                                          \
    template CrossDomainModel<T> build_cross_domain(const std::vector<DomainShape>&, std::size_t, nn::Rng&,      \
                                                    std::size_t);                                                \
    template CrossDomainModel<T> build_backbone(std::size_t, std::size_t, std::size_t, nn::Rng&, std::size_t); \
    template nn::Tensor<T> image_tensor(const data::HyperCube&);                                                 \
    template nn::Tensor<T> forward_domain(CrossDomainModel<T>&, std::size_t, const data::HyperCube&, Mode);     \
    template void transplant_shared(const CrossDomainModel<T>&, CrossDomainModel<T>&);                           \
    template std::vector<ParamGroup<T>> param_groups(CrossDomainModel<T>&, Phase, std::size_t);

XDHS_INSTANTIATE_MODEL(float)
XDHS_INSTANTIATE_MODEL(double)

} // namespace xdhs::model
