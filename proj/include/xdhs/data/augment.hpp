#pragma once

#include <string>
#include <vector>

#include "xdhs/data/types.hpp"

namespace xdhs::data {

// One element of the dihedral group of the square: optional row flip, optional
// column flip, then optional transpose (swaps H and W).
struct Mirror {
    bool flip_rows = false;
    bool flip_cols = false;
    bool transpose = false;

    auto operator<=>(const Mirror&) const = default;

    Mirror inverse() const;
    // Applies `first`, then this.
    Mirror after(const Mirror& first, std::size_t height, std::size_t width) const;
    Pixel apply(Pixel p, std::size_t height, std::size_t width) const;
    std::string name() const;
};

HyperCube apply(const Mirror& m, const HyperCube& cube);
LabelMap apply(const Mirror& m, const LabelMap& labels);
std::vector<Pixel> apply(const Mirror& m, const std::vector<Pixel>& pixels, std::size_t height, std::size_t width);

// The 8 mirrors of a square image, or the 4 axis-aligned ones (identity first)
// with a warning when height != width.
std::vector<Mirror> mirror_group(std::size_t height, std::size_t width);

struct Mirrored {
    Mirror mirror;
    HyperCube cube;
    LabelMap labels;
};

std::vector<Mirrored> mirror8(const HyperCube& cube, const LabelMap& labels);

struct BandStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population std; 1 for constant bands
};

BandStats band_stats(const HyperCube& cube);
HyperCube standardize(const HyperCube& cube, const BandStats& stats);
// Standardizes with the cube's own statistics.
HyperCube standardize(const HyperCube& cube, BandStats* stats_out = nullptr);

} // namespace xdhs::data
