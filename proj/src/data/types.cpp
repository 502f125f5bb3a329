#include "xdhs/data/types.hpp"

#include <cmath>
#include <stdexcept>

namespace xdhs::data {

HyperCube::HyperCube(std::size_t h, std::size_t w, std::size_t b)
    : height(h), width(w), bands(b), values(h * w * b, 0.0f) {}

void HyperCube::validate() const {
    if (height == 0 || width == 0 || bands == 0)
        throw std::invalid_argument("hyperspectral cube dimensions must be positive");
    if (values.size() != height * width * bands)
        throw std::invalid_argument("hyperspectral cube holds " + std::to_string(values.size()) +
                                    " values, expected " + std::to_string(height * width * bands));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw std::invalid_argument("hyperspectral cube has a non-finite value at index " + std::to_string(i));
}

LabelMap::LabelMap(std::size_t h, std::size_t w, std::uint16_t c)
    : height(h), width(w), classes(c), labels(h * w, 0) {}

void LabelMap::validate() const {
    if (height == 0 || width == 0) throw std::invalid_argument("label map dimensions must be positive");
    if (labels.size() != height * width)
        throw std::invalid_argument("label map holds " + std::to_string(labels.size()) + " labels, expected " +
                                    std::to_string(height * width));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] > classes)
            throw std::invalid_argument("label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) +
                                        " exceeds class count " + std::to_string(classes));
}

std::vector<std::size_t> LabelMap::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes) + 1, 0);
    for (auto l : labels) ++counts.at(l);
    return counts;
}

std::size_t LabelMap::labeled_count() const {
    std::size_t n = 0;
    for (auto l : labels) n += (l != 0);
    return n;
}

std::vector<Pixel> labeled_pixels(const LabelMap& labels) {
    std::vector<Pixel> out;
    for (std::size_t r = 0; r < labels.height; ++r)
        for (std::size_t c = 0; c < labels.width; ++c)
            if (labels.at(r, c) != 0) out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
    return out;
}

void DomainDescriptor::validate() const {
    if (bands < 1) throw std::invalid_argument("domain '" + name + "': bands must be >= 1");
    if (classes < 2) throw std::invalid_argument("domain '" + name + "': classes must be >= 2");
    if (!(spectral_high > spectral_low))
        throw std::invalid_argument("domain '" + name + "': spectral range must be increasing");
}

} // namespace xdhs::data
