#include "xdhs/data/synthetic.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "xdhs/nn/rng.hpp"

namespace xdhs::data {

double Signature::at(double wavelength) const {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double z = (wavelength - center[i]) / width[i];
        v += amplitude[i] * std::exp(-0.5 * z * z);
    }
    return v;
}

Signature material_signature(std::uint64_t signature_seed, std::uint64_t material, double low, double high) {
    nn::Rng rng = nn::Rng::stream(signature_seed, material);
    const double span = high - low;
    Signature s{};
    for (int i = 0; i < 3; ++i) {
        s.center[i] = rng.uniform(low, high);
        s.width[i] = span * rng.uniform(0.04, 0.2);
        s.amplitude[i] = rng.uniform(0.2, 1.0);
    }
    return s;
}

std::vector<double> band_wavelengths(const DomainDescriptor& d) {
    std::vector<double> out(d.bands);
    for (std::size_t b = 0; b < d.bands; ++b)
        out[b] = d.bands == 1 ? d.spectral_low
                              : d.spectral_low + (d.spectral_high - d.spectral_low) * static_cast<double>(b) /
                                                     static_cast<double>(d.bands - 1);
    return out;
}

SyntheticDomain gen_synthetic(const SyntheticSpec& spec) {
    const auto& d = spec.descriptor;
    d.validate();
    if (d.bands < 2) throw std::invalid_argument("synthetic domain '" + d.name + "' needs at least 2 bands");
    if (d.classes > 65535) throw std::invalid_argument("too many classes");
    if (spec.height == 0 || spec.width == 0) throw std::invalid_argument("synthetic image must be non-empty");
    if (!(spec.noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
    if (!(spec.unlabeled_fraction >= 0.0 && spec.unlabeled_fraction < 1.0))
        throw std::invalid_argument("unlabeled_fraction must be in [0, 1)");
    if (!spec.materials.empty() && spec.materials.size() != d.classes)
        throw std::invalid_argument("materials list has " + std::to_string(spec.materials.size()) +
                                    " entries for " + std::to_string(d.classes) + " classes");
    const std::size_t pixels = spec.height * spec.width;
    const std::size_t blobs = spec.blob_count == 0 ? 4 * d.classes : spec.blob_count;
    if (blobs < d.classes || blobs > pixels)
        throw std::invalid_argument("blob_count must lie in [classes, H*W], got " + std::to_string(blobs));

    SyntheticDomain out{HyperCube(spec.height, spec.width, d.bands),
                        LabelMap(spec.height, spec.width, static_cast<std::uint16_t>(d.classes)),
                        {},
                        {}};
    for (std::size_t c = 0; c < d.classes; ++c)
        out.signatures.push_back(material_signature(spec.signature_seed, spec.materials.empty() ? c : spec.materials[c],
                                                    d.spectral_low, d.spectral_high));

    // Distinct Voronoi sites; site i belongs to class (i mod C) + 1.
    nn::Rng layout = nn::Rng::stream(spec.seed, 0);
    std::set<Pixel> taken;
    while (out.sites.size() < blobs) {
        const Pixel p{static_cast<std::uint32_t>(layout.below(spec.height)),
                      static_cast<std::uint32_t>(layout.below(spec.width))};
        if (taken.insert(p).second) out.sites.push_back(p);
    }
    std::vector<std::uint16_t> cls(pixels);
    for (std::uint32_t r = 0; r < spec.height; ++r)
        for (std::uint32_t c = 0; c < spec.width; ++c) {
            std::size_t best = 0;
            long best_d = -1;
            for (std::size_t i = 0; i < out.sites.size(); ++i) {
                const long dr = static_cast<long>(r) - out.sites[i].row, dc = static_cast<long>(c) - out.sites[i].col;
                const long dist = dr * dr + dc * dc;
                if (best_d < 0 || dist < best_d) best_d = dist, best = i;
            }
            cls[r * spec.width + c] = static_cast<std::uint16_t>(best % d.classes + 1);
        }

    // Unlabeled pixels, never a site.
    nn::Rng holes = nn::Rng::stream(spec.seed, 1);
    out.labels.labels = cls;
    for (std::uint32_t r = 0; r < spec.height; ++r)
        for (std::uint32_t c = 0; c < spec.width; ++c)
            if (holes.uniform() < spec.unlabeled_fraction && !taken.contains(Pixel{r, c}))
                out.labels.at(r, c) = 0;

    const auto wl = band_wavelengths(d);
    std::vector<std::vector<double>> spectra(d.classes, std::vector<double>(d.bands));
    for (std::size_t c = 0; c < d.classes; ++c)
        for (std::size_t b = 0; b < d.bands; ++b) spectra[c][b] = out.signatures[c].at(wl[b]);

    nn::Rng noise = nn::Rng::stream(spec.seed, 2);
    for (std::size_t i = 0; i < pixels; ++i)
        for (std::size_t b = 0; b < d.bands; ++b) {
            double v = spectra[cls[i] - 1][b];
            if (spec.noise_std > 0.0) v += spec.noise_std * noise.normal();
            out.cube.values[i * d.bands + b] = static_cast<float>(v);
        }
    return out;
}

} // namespace xdhs::data
