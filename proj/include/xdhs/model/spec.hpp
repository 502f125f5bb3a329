#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xdhs::model {

inline constexpr std::size_t kHiddenWidth = 128;

enum class LayerKind { conv, bn, relu, residual_begin, residual_end, concat, maxpool };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    std::size_t kernel = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t pad = 0;

    static LayerSpec conv(std::size_t kernel, std::size_t in, std::size_t out) {
        return {LayerKind::conv, kernel, in, out, (kernel - 1) / 2};
    }
    static LayerSpec plain(LayerKind kind, std::size_t channels) { return {kind, 0, channels, channels, 0}; }
};

std::string to_string(LayerKind kind);

// Conv 5x5 B->w + BN + ReLU, conv 1x1 w->w + BN + ReLU, k residual modules,
// then a 1x1 w->C classifier. Rejects k < 1.
std::vector<LayerSpec> backbone_spec(std::size_t bands, std::size_t classes, std::size_t k,
                                     std::size_t width = kHiddenWidth);

// Multi-scale contextual network: parallel 1/3/5 convs from the input
// (128/128/128 channels, the 3x3 and 5x5 branches pooled), concatenated to
// 384, 1x1 to 128, k residual modules and three 1x1 classifier convs.
// Only meaningful to the FLOPs analyzer.
std::vector<LayerSpec> contextual_spec(std::size_t bands, std::size_t classes, std::size_t k);

// Sum over conv layers of 2 * H * W * Cout * kernel^2 * Cin. Other layers cost nothing.
std::uint64_t flops(std::span<const LayerSpec> specs, std::size_t height, std::size_t width);

// Number of conv layers, i.e. 2 + 2k + 1 for a backbone.
std::size_t conv_depth(std::span<const LayerSpec> specs);

} // namespace xdhs::model
