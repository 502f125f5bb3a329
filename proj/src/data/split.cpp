#include "xdhs/data/split.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace xdhs::data {

namespace {

// First n entries of a partial Fisher-Yates shuffle of `items`.
template <typename U>
void partial_shuffle(std::vector<U>& items, std::size_t n, nn::Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(items.size() - i));
        std::swap(items[i], items[j]);
    }
}

} // namespace

void Split::validate(const LabelMap& labels) const {
    std::set<Pixel> seen;
    for (const auto* set : {&train, &test})
        for (const auto& p : *set) {
            if (p.row >= labels.height || p.col >= labels.width)
                throw std::invalid_argument("split pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                            ") is outside the " + std::to_string(labels.height) + "x" +
                                            std::to_string(labels.width) + " label map");
            if (labels.at(p.row, p.col) == 0)
                throw std::invalid_argument("split pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                            ") is unlabeled");
            if (!seen.insert(p).second)
                throw std::invalid_argument("split pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                            ") appears twice");
        }
}

Split make_split(const LabelMap& labels, std::size_t per_class, std::uint64_t seed) {
    labels.validate();
    if (per_class == 0) throw std::invalid_argument("per-class training count must be positive");
    std::vector<std::vector<Pixel>> by_class(static_cast<std::size_t>(labels.classes) + 1);
    for (const auto& p : labeled_pixels(labels)) by_class[labels.at(p.row, p.col)].push_back(p);
    for (std::size_t c = 1; c < by_class.size(); ++c)
        if (by_class[c].size() < per_class + 1)
            throw std::invalid_argument("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                        " labeled pixels, needs at least " + std::to_string(per_class + 1) +
                                        " for " + std::to_string(per_class) + " training pixels");

    nn::Rng rng(seed);
    Split split;
    split.seed = seed;
    for (std::size_t c = 1; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        partial_shuffle(pool, per_class, rng);
        split.train.insert(split.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    std::sort(split.train.begin(), split.train.end());
    for (const auto& p : labeled_pixels(labels))
        if (!std::binary_search(split.train.begin(), split.train.end(), p)) split.test.push_back(p);
    return split;
}

std::vector<Pixel> sample_loss_mask(std::span<const Pixel> pool, std::size_t batch_size, nn::Rng& rng) {
    if (batch_size == 0) throw std::invalid_argument("mini-batch size must be positive");
    if (batch_size > pool.size())
        throw std::invalid_argument("mini-batch size " + std::to_string(batch_size) + " exceeds the " +
                                    std::to_string(pool.size()) + " available training pixels");
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    partial_shuffle(idx, batch_size, rng);
    std::vector<Pixel> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.push_back(pool[idx[i]]);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace xdhs::data
