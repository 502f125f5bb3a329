#include "xdhs/data/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "xdhs/util/log.hpp"

namespace xdhs::data {

Mirror Mirror::inverse() const {
    // (T F)^-1 = F T = T F' where F' swaps which axis is flipped.
    if (!transpose) return *this;
    return {flip_cols, flip_rows, true};
}

Pixel Mirror::apply(Pixel p, std::size_t height, std::size_t width) const {
    std::uint32_t r = flip_rows ? static_cast<std::uint32_t>(height - 1 - p.row) : p.row;
    std::uint32_t c = flip_cols ? static_cast<std::uint32_t>(width - 1 - p.col) : p.col;
    if (transpose) std::swap(r, c);
    return {r, c};
}

Mirror Mirror::after(const Mirror& first, std::size_t height, std::size_t width) const {
    // Identify the composite by where it sends two asymmetric probe pixels.
    const std::size_t h2 = first.transpose ? width : height, w2 = first.transpose ? height : width;
    for (int bits = 0; bits < 8; ++bits) {
        const Mirror cand{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
        bool same = cand.transpose == (first.transpose != transpose);
        for (Pixel probe : {Pixel{0, 0}, Pixel{0, static_cast<std::uint32_t>(width - 1)},
                            Pixel{static_cast<std::uint32_t>(height - 1), 0}})
            same = same && cand.apply(probe, height, width) == apply(first.apply(probe, height, width), h2, w2);
        if (same) return cand;
    }
    throw std::logic_error("mirror composition left the group");
}

std::string Mirror::name() const {
    std::string s;
    if (flip_rows) s += "flip_rows+";
    if (flip_cols) s += "flip_cols+";
    if (transpose) s += "transpose+";
    if (s.empty()) return "identity";
    s.pop_back();
    return s;
}

HyperCube apply(const Mirror& m, const HyperCube& cube) {
    const std::size_t h = m.transpose ? cube.width : cube.height, w = m.transpose ? cube.height : cube.width;
    HyperCube out(h, w, cube.bands);
    for (std::uint32_t r = 0; r < cube.height; ++r)
        for (std::uint32_t c = 0; c < cube.width; ++c) {
            const Pixel q = m.apply({r, c}, cube.height, cube.width);
            for (std::size_t b = 0; b < cube.bands; ++b) out.at(q.row, q.col, b) = cube.at(r, c, b);
        }
    return out;
}

LabelMap apply(const Mirror& m, const LabelMap& labels) {
    const std::size_t h = m.transpose ? labels.width : labels.height, w = m.transpose ? labels.height : labels.width;
    LabelMap out(h, w, labels.classes);
    for (std::uint32_t r = 0; r < labels.height; ++r)
        for (std::uint32_t c = 0; c < labels.width; ++c) {
            const Pixel q = m.apply({r, c}, labels.height, labels.width);
            out.at(q.row, q.col) = labels.at(r, c);
        }
    return out;
}

std::vector<Pixel> apply(const Mirror& m, const std::vector<Pixel>& pixels, std::size_t height, std::size_t width) {
    std::vector<Pixel> out;
    out.reserve(pixels.size());
    for (const auto& p : pixels) out.push_back(m.apply(p, height, width));
    return out;
}

std::vector<Mirror> mirror_group(std::size_t height, std::size_t width) {
    std::vector<Mirror> out;
    const bool square = height == width;
    for (int t = 0; t < (square ? 2 : 1); ++t)
        for (int bits = 0; bits < 4; ++bits) out.push_back({(bits & 1) != 0, (bits & 2) != 0, t == 1});
    if (!square)
        log::warn("image is " + std::to_string(height) + "x" + std::to_string(width) +
                  "; diagonal mirrors need a square image, using the 4 axis-aligned variants");
    return out;
}

std::vector<Mirrored> mirror8(const HyperCube& cube, const LabelMap& labels) {
    if (cube.height != labels.height || cube.width != labels.width)
        throw std::invalid_argument("cube and label map sizes differ");
    std::vector<Mirrored> out;
    for (const auto& m : mirror_group(cube.height, cube.width)) out.push_back({m, apply(m, cube), apply(m, labels)});
    return out;
}

BandStats band_stats(const HyperCube& cube) {
    cube.validate();
    const std::size_t n = cube.height * cube.width;
    BandStats s{std::vector<double>(cube.bands, 0.0), std::vector<double>(cube.bands, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < cube.bands; ++b) s.mean[b] += cube.values[i * cube.bands + b];
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < cube.bands; ++b) {
            const double d = cube.values[i * cube.bands + b] - s.mean[b];
            s.stddev[b] += d * d;
        }
    for (auto& v : s.stddev) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v == 0.0) v = 1.0;
    }
    return s;
}

HyperCube standardize(const HyperCube& cube, const BandStats& stats) {
    if (stats.mean.size() != cube.bands || stats.stddev.size() != cube.bands)
        throw std::invalid_argument("band statistics cover " + std::to_string(stats.mean.size()) + " bands, cube has " +
                                    std::to_string(cube.bands));
    HyperCube out = cube;
    for (std::size_t i = 0; i < cube.height * cube.width; ++i)
        for (std::size_t b = 0; b < cube.bands; ++b) {
            float& v = out.values[i * cube.bands + b];
            v = static_cast<float>((v - stats.mean[b]) / stats.stddev[b]);
        }
    return out;
}

HyperCube standardize(const HyperCube& cube, BandStats* stats_out) {
    BandStats s = band_stats(cube);
    HyperCube out = standardize(cube, s);
    if (stats_out) *stats_out = std::move(s);
    return out;
}

} // namespace xdhs::data
