#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xdhs/data/types.hpp"
#include "xdhs/model/network.hpp"

namespace xdhs::metrics {

// C x C counts, rows = true class, columns = predicted class (both 0-based here).
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const { return classes_; }
    std::uint64_t n() const { return n_; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
    std::uint64_t row_total(std::size_t truth) const;
    std::uint64_t col_total(std::size_t pred) const;

    // Class ids are 1-based, as in a LabelMap.
    void add(std::uint16_t truth, std::uint16_t pred, std::uint64_t count = 1);

private:
    std::size_t classes_;
    std::uint64_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

// Counts (truth, pred) over the masked pixels. Rejects unlabeled truth, pred = 0
// and mismatched map sizes.
ConfusionMatrix accumulate(const data::LabelMap& pred, const data::LabelMap& truth, std::span<const data::Pixel> mask);

double oa(const ConfusionMatrix& cm);
// Classes with no true pixels are skipped with a warning, or rejected when strict.
double aa(const ConfusionMatrix& cm, bool strict = false);
double kappa(const ConfusionMatrix& cm);

struct MetricsReport {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    std::vector<double> per_class_recall;  // NaN for classes with no true pixels
    std::uint64_t n = 0;
};

MetricsReport report(const ConfusionMatrix& cm, bool strict = false);

// Single eval-mode forward of the whole image, per-pixel argmax, metrics over `pixels`.
template <typename T>
MetricsReport evaluate(model::CrossDomainModel<T>& model, std::size_t domain, const data::HyperCube& cube,
                       const data::LabelMap& labels, std::span<const data::Pixel> pixels, bool strict = false);

// `key = value` lines: oa, aa, kappa, n, per_class_recall (comma list).
std::string to_text(const MetricsReport& r);
MetricsReport parse_report(const std::string& text);

// "98.9" style, for human-readable summaries only.
std::string percent(double fraction);

} // namespace xdhs::metrics
