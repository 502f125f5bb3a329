#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xdhs/data/types.hpp"
#include "xdhs/nn/rng.hpp"

namespace xdhs::data {

// Disjoint train/test pixel sets, each in raster order.
struct Split {
    std::vector<Pixel> train;
    std::vector<Pixel> test;
    std::uint64_t seed = 0;

    // Throws unless train and test are disjoint, labeled and inside `labels`.
    void validate(const LabelMap& labels) const;
};

// `per_class` training pixels per class drawn without replacement; every other
// labeled pixel is a test pixel. Each class needs at least per_class + 1 pixels.
Split make_split(const LabelMap& labels, std::size_t per_class, std::uint64_t seed);

// Uniform sample of `batch_size` pixels from `pool` without replacement, in
// raster order.
std::vector<Pixel> sample_loss_mask(std::span<const Pixel> pool, std::size_t batch_size, nn::Rng& rng);

} // namespace xdhs::data
