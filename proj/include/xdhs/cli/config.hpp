#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xdhs::cli {

// Flat `key = value` settings. `#` starts a comment; blank lines are ignored.
// Keys are checked against a fixed vocabulary so typos fail loudly.
class Config {
public:
    static Config parse(const std::string& text, const std::string& what = "config");
    static Config load(const std::filesystem::path& path);

    // Applies a `key=value` override (command-line --set).
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.contains(key); }
    std::string text(const std::string& key) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::uint64_t integer(const std::string& key) const;
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const;
    double real(const std::string& key) const;
    double real(const std::string& key, double fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    // Comma-separated, whitespace trimmed, empty items rejected.
    std::vector<std::string> list(const std::string& key) const;
    std::vector<std::uint64_t> integers(const std::string& key) const;

    // Names N with at least one `domain.N.*` key, sorted.
    std::vector<std::string> domain_names() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    std::string what_ = "config";
    std::map<std::string, std::string> values_;
};

// Throws std::invalid_argument unless `key` is part of the vocabulary.
void check_key(const std::string& key);

} // namespace xdhs::cli
