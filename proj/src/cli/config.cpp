#include "xdhs/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xdhs/util/binary.hpp"

namespace xdhs::cli {

namespace {

const std::set<std::string>& fixed_keys() {
    static const std::set<std::string> keys{
        "seed",           "sources",          "target",          "model.k",
        "model.width",    "pretrain.iters",   "pretrain.base_lr", "pretrain.gamma",
        "pretrain.step_iters", "pretrain.batch", "pretrain.loss",  "pretrain.augment",
        "cascade.mode",   "cascade.first",    "cascade.iters",   "cascade.base_lr",
        "train.iters",    "train.base_lr",    "train.gamma",     "train.step_iters",
        "train.batch",    "train.augment",    "train.log_eval",  "optim.momentum",
        "optim.weight_decay", "loss.kind",    "loss.gamma",      "loss.alpha",
        "loss.background", "experiment.kind", "experiment.seeds", "experiment.k_values",
        "experiment.source_sets", "experiment.domains",
    };
    return keys;
}

const std::set<std::string>& domain_fields() {
    static const std::set<std::string> fields{"bands",  "classes", "low",       "high",           "height",
                                              "width",  "blobs",   "noise",     "unlabeled",      "seed",
                                              "signature_seed", "materials", "per_class"};
    return fields;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

void check_key(const std::string& key) {
    if (fixed_keys().contains(key)) return;
    if (key.starts_with("domain.")) {
        const auto dot = key.rfind('.');
        const auto name = key.substr(7, dot == std::string::npos ? 0 : dot - 7);
        if (dot > 7 && name.find('.') == std::string::npos && domain_fields().contains(key.substr(dot + 1))) return;
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

Config Config::parse(const std::string& text, const std::string& what) {
    Config c;
    c.what_ = what;
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(what + ":" + std::to_string(n) + ": expected 'key = value', got '" + line + "'");
        const auto key = trim(line.substr(0, eq));
        try {
            check_key(key);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(what + ":" + std::to_string(n) + ": " + e.what());
        }
        if (!c.values_.emplace(key, trim(line.substr(eq + 1))).second)
            throw std::invalid_argument(what + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    return parse(io::read_file(path), path.string());
}

void Config::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    check_key(key);
    values_[key] = value;
}

void Config::fail(const std::string& key, const std::string& message) const {
    throw std::invalid_argument(what_ + ": " + key + ": " + message);
}

std::string Config::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(key, "missing required key");
    return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

std::uint64_t Config::integer(const std::string& key) const {
    const auto s = text(key);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
        fail(key, "expected a non-negative integer, got '" + s + "'");
    return v;
}

std::uint64_t Config::integer(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

double Config::real(const std::string& key) const {
    const auto s = text(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) fail(key, "expected a number, got '" + s + "'");
    return v;
}

double Config::real(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto s = text(key);
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    fail(key, "expected on/off, got '" + s + "'");
}

std::vector<std::string> Config::list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(text(key));
    for (std::string item; std::getline(in, item, ',');) {
        item = trim(item);
        if (item.empty()) fail(key, "empty list item");
        out.push_back(item);
    }
    if (out.empty()) fail(key, "empty list");
    return out;
}

std::vector<std::uint64_t> Config::integers(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : list(key)) {
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || end != item.data() + item.size()) fail(key, "'" + item + "' is not an integer");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::domain_names() const {
    std::set<std::string> names;
    for (const auto& [k, v] : values_)
        if (k.starts_with("domain.")) names.insert(k.substr(7, k.rfind('.') - 7));
    return {names.begin(), names.end()};
}

} // namespace xdhs::cli
