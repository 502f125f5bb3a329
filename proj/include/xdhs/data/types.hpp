#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace xdhs::data {

// H x W x B image, band-fastest: index = (row * W + col) * B + band.
struct HyperCube {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t bands = 0;
    std::vector<float> values;

    HyperCube() = default;
    HyperCube(std::size_t h, std::size_t w, std::size_t b);

    float& at(std::size_t row, std::size_t col, std::size_t band) {
        return values[(row * width + col) * bands + band];
    }
    float at(std::size_t row, std::size_t col, std::size_t band) const {
        return values[(row * width + col) * bands + band];
    }

    // Throws std::invalid_argument if dimensions and storage disagree or a value is not finite.
    void validate() const;
};

// H x W class map. 0 = unlabeled, 1..classes are classes.
struct LabelMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::uint16_t classes = 0;
    std::vector<std::uint16_t> labels;

    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, std::uint16_t c);

    std::uint16_t& at(std::size_t row, std::size_t col) { return labels[row * width + col]; }
    std::uint16_t at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }

    void validate() const;

    // Labeled pixel count per class; index 0 holds the unlabeled count.
    std::vector<std::size_t> class_counts() const;
    std::size_t labeled_count() const;
};

struct Pixel {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    auto operator<=>(const Pixel&) const = default;
};

// Every labeled pixel in raster order.
std::vector<Pixel> labeled_pixels(const LabelMap& labels);

struct DomainDescriptor {
    std::string name;
    std::size_t bands = 0;
    std::size_t classes = 0;
    double spectral_low = 0.4;   // micrometres
    double spectral_high = 2.5;
    std::size_t example_count = 0;

    void validate() const;
};

} // namespace xdhs::data
