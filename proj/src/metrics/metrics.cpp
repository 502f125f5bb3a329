#include "xdhs/metrics/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "xdhs/nn/ops.hpp"
#include "xdhs/util/log.hpp"

namespace xdhs::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
    return s;
}

std::uint64_t ConfusionMatrix::col_total(std::size_t pred) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += at(t, pred);
    return s;
}

void ConfusionMatrix::add(std::uint16_t truth, std::uint16_t pred, std::uint64_t count) {
    if (truth == 0 || truth > classes_)
        throw std::invalid_argument("true class " + std::to_string(truth) + " outside 1.." + std::to_string(classes_));
    if (pred == 0 || pred > classes_)
        throw std::invalid_argument("predicted class " + std::to_string(pred) + " outside 1.." +
                                    std::to_string(classes_));
    counts_[(truth - 1u) * classes_ + (pred - 1u)] += count;
    n_ += count;
}

ConfusionMatrix accumulate(const data::LabelMap& pred, const data::LabelMap& truth,
                           std::span<const data::Pixel> mask) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw std::invalid_argument("prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                                    ", labels are " + std::to_string(truth.height) + "x" +
                                    std::to_string(truth.width));
    ConfusionMatrix cm(truth.classes);
    for (const auto& p : mask) {
        if (p.row >= truth.height || p.col >= truth.width)
            throw std::invalid_argument("mask pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                        ") outside the image");
        const auto t = truth.at(p.row, p.col);
        if (t == 0)
            throw std::invalid_argument("mask pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                                        ") is unlabeled");
        cm.add(t, pred.at(p.row, p.col));
    }
    return cm;
}

namespace {

void require_nonempty(const ConfusionMatrix& cm, const char* what) {
    if (cm.n() == 0) throw std::invalid_argument(std::string(what) + " of an empty confusion matrix is undefined");
}

} // namespace

double oa(const ConfusionMatrix& cm) {
    require_nonempty(cm, "oa");
    std::uint64_t hit = 0;
    for (std::size_t c = 0; c < cm.classes(); ++c) hit += cm.at(c, c);
    return static_cast<double>(hit) / static_cast<double>(cm.n());
}

double aa(const ConfusionMatrix& cm, bool strict) {
    require_nonempty(cm, "aa");
    double sum = 0.0;
    std::size_t present = 0;
    std::string missing;
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const auto row = cm.row_total(c);
        if (row == 0) {
            missing += (missing.empty() ? "" : ", ") + std::to_string(c + 1);
            continue;
        }
        sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
        ++present;
    }
    if (!missing.empty()) {
        if (strict) throw std::invalid_argument("aa: classes without true pixels: " + missing);
        log::warn("aa: excluding classes without true pixels: " + missing);
    }
    return sum / static_cast<double>(present);
}

double kappa(const ConfusionMatrix& cm) {
    const double p_o = oa(cm);
    const double n = static_cast<double>(cm.n());
    double p_e = 0.0;
    for (std::size_t c = 0; c < cm.classes(); ++c)
        p_e += static_cast<double>(cm.row_total(c)) * static_cast<double>(cm.col_total(c));
    p_e /= n * n;
    if (p_e >= 1.0) throw std::invalid_argument("kappa undefined: chance agreement is 1");
    return (p_o - p_e) / (1.0 - p_e);
}

MetricsReport report(const ConfusionMatrix& cm, bool strict) {
    MetricsReport r;
    r.n = cm.n();
    r.oa = oa(cm);
    r.aa = aa(cm, strict);
    r.kappa = kappa(cm);
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const auto row = cm.row_total(c);
        r.per_class_recall.push_back(row ? static_cast<double>(cm.at(c, c)) / static_cast<double>(row)
                                         : std::numeric_limits<double>::quiet_NaN());
    }
    return r;
}

template <typename T>
MetricsReport evaluate(model::CrossDomainModel<T>& model, std::size_t domain, const data::HyperCube& cube,
                       const data::LabelMap& labels, std::span<const data::Pixel> pixels, bool strict) {
    if (labels.classes != model.domains.at(domain).classes)
        throw std::invalid_argument("label map has " + std::to_string(labels.classes) + " classes, model head has " +
                                    std::to_string(model.domains.at(domain).classes));
    const auto logits = model::forward_domain(model, domain, cube, nn::Mode::eval);
    return report(accumulate(nn::argmax_classes(logits), labels, pixels), strict);
}

template MetricsReport evaluate(model::CrossDomainModel<float>&, std::size_t, const data::HyperCube&,
                                const data::LabelMap&, std::span<const data::Pixel>, bool);
template MetricsReport evaluate(model::CrossDomainModel<double>&, std::size_t, const data::HyperCube&,
                                const data::LabelMap&, std::span<const data::Pixel>, bool);

namespace {

std::string number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& s, const std::string& key) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw std::runtime_error("metrics: bad number '" + s + "' for " + key);
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

std::string to_text(const MetricsReport& r) {
    std::string out = "oa = " + number(r.oa) + "\naa = " + number(r.aa) + "\nkappa = " + number(r.kappa) +
                      "\nn = " + std::to_string(r.n) + "\nper_class_recall = ";
    for (std::size_t i = 0; i < r.per_class_recall.size(); ++i)
        out += (i ? "," : "") + number(r.per_class_recall[i]);
    return out + "\n";
}

MetricsReport parse_report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("metrics: expected 'key = value', got '" + line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& k) -> const std::string& {
        const auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("metrics: missing key " + k);
        return it->second;
    };
    MetricsReport r;
    r.oa = parse_number(need("oa"), "oa");
    r.aa = parse_number(need("aa"), "aa");
    r.kappa = parse_number(need("kappa"), "kappa");
    r.n = static_cast<std::uint64_t>(parse_number(need("n"), "n"));
    std::istringstream list(need("per_class_recall"));
    for (std::string item; std::getline(list, item, ',');) r.per_class_recall.push_back(parse_number(trim(item), "recall"));
    return r;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

} // namespace xdhs::metrics
