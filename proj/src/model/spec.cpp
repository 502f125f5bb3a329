#include "xdhs/model/spec.hpp"

#include <stdexcept>

namespace xdhs::model {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::bn: return "bn";
        case LayerKind::relu: return "relu";
        case LayerKind::residual_begin: return "residual_begin";
        case LayerKind::residual_end: return "residual_end";
        case LayerKind::concat: return "concat";
        case LayerKind::maxpool: return "maxpool";
    }
    return "?";
}

namespace {

void append_residual(std::vector<LayerSpec>& out, std::size_t width, bool with_bn) {
    out.push_back(LayerSpec::plain(LayerKind::residual_begin, width));
    out.push_back(LayerSpec::conv(1, width, width));
    if (with_bn) out.push_back(LayerSpec::plain(LayerKind::bn, width));
    out.push_back(LayerSpec::plain(LayerKind::relu, width));
    out.push_back(LayerSpec::conv(1, width, width));
    if (with_bn) out.push_back(LayerSpec::plain(LayerKind::bn, width));
    out.push_back(LayerSpec::plain(LayerKind::residual_end, width));
    out.push_back(LayerSpec::plain(LayerKind::relu, width));
}

} // namespace

std::vector<LayerSpec> backbone_spec(std::size_t bands, std::size_t classes, std::size_t k, std::size_t width) {
    if (k < 1) throw std::invalid_argument("backbone needs at least one residual module (k >= 1), got k = 0");
    if (bands < 1) throw std::invalid_argument("backbone needs at least one band");
    if (classes < 2) throw std::invalid_argument("backbone needs at least two classes");
    std::vector<LayerSpec> out;
    out.push_back(LayerSpec::conv(5, bands, width));
    out.push_back(LayerSpec::plain(LayerKind::bn, width));
    out.push_back(LayerSpec::plain(LayerKind::relu, width));
    out.push_back(LayerSpec::conv(1, width, width));
    out.push_back(LayerSpec::plain(LayerKind::bn, width));
    out.push_back(LayerSpec::plain(LayerKind::relu, width));
    for (std::size_t i = 0; i < k; ++i) append_residual(out, width, true);
    out.push_back(LayerSpec::conv(1, width, classes));
    return out;
}

std::vector<LayerSpec> contextual_spec(std::size_t bands, std::size_t classes, std::size_t k) {
    constexpr std::size_t w = kHiddenWidth;
    std::vector<LayerSpec> out;
    out.push_back(LayerSpec::conv(1, bands, w));
    out.push_back(LayerSpec::conv(3, bands, w));
    out.push_back(LayerSpec::plain(LayerKind::maxpool, w));
    out.push_back(LayerSpec::conv(5, bands, w));
    out.push_back(LayerSpec::plain(LayerKind::maxpool, w));
    out.push_back(LayerSpec::plain(LayerKind::concat, 3 * w));
    out.push_back(LayerSpec::plain(LayerKind::relu, 3 * w));
    out.push_back(LayerSpec::conv(1, 3 * w, w));
    out.push_back(LayerSpec::plain(LayerKind::relu, w));
    for (std::size_t i = 0; i < k; ++i) append_residual(out, w, false);
    out.push_back(LayerSpec::conv(1, w, w));
    out.push_back(LayerSpec::plain(LayerKind::relu, w));
    out.push_back(LayerSpec::conv(1, w, w));
    out.push_back(LayerSpec::plain(LayerKind::relu, w));
    out.push_back(LayerSpec::conv(1, w, classes));
    return out;
}

std::uint64_t flops(std::span<const LayerSpec> specs, std::size_t height, std::size_t width) {
    std::uint64_t total = 0;
    const std::uint64_t hw = static_cast<std::uint64_t>(height) * width;
    for (const auto& s : specs) {
        if (s.kind != LayerKind::conv) continue;
        total += 2 * hw * s.out_channels * s.kernel * s.kernel * s.in_channels;
    }
    return total;
}

std::size_t conv_depth(std::span<const LayerSpec> specs) {
    std::size_t n = 0;
    for (const auto& s : specs) n += s.kind == LayerKind::conv;
    return n;
}

} // namespace xdhs::model
