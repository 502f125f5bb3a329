#pragma once

#include <cstdint>
#include <vector>

#include "xdhs/data/types.hpp"

namespace xdhs::data {

// A synthetic domain: a "sensor" (band count, spectral range) observing a
// Voronoi scene of materials.
struct SyntheticSpec {
    DomainDescriptor descriptor;
    std::size_t height = 24;
    std::size_t width = 24;
    std::size_t blob_count = 0;        // 0 means 4 * classes
    double unlabeled_fraction = 0.1;   // share of non-site pixels set to 0
    double noise_std = 0.0;
    std::uint64_t seed = 0;            // layout, labels and noise
    std::uint64_t signature_seed = 0;  // material spectra
    // Material id of each class (size == classes); empty means class c is material c - 1.
    std::vector<std::uint64_t> materials;
};

// Continuous spectrum of a material: the sum of three Gaussian bumps whose
// centers lie in [low, high]. Independent of any band count.
struct Signature {
    double center[3];
    double width[3];
    double amplitude[3];

    double at(double wavelength) const;
};

Signature material_signature(std::uint64_t signature_seed, std::uint64_t material, double low, double high);

// Band b of B sits at low + (high - low) * b / (B - 1).
std::vector<double> band_wavelengths(const DomainDescriptor& d);

struct SyntheticDomain {
    HyperCube cube;
    LabelMap labels;
    std::vector<Pixel> sites;
    std::vector<Signature> signatures;  // per class, index c - 1
};

// cube = signature(class at pixel) + N(0, noise_std^2). Deterministic in the seeds.
SyntheticDomain gen_synthetic(const SyntheticSpec& spec);

} // namespace xdhs::data
