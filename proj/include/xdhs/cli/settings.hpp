#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xdhs/cli/config.hpp"
#include "xdhs/data/synthetic.hpp"
#include "xdhs/train/runs.hpp"

namespace xdhs::cli {

// A synthetic domain as described by `domain.<name>.*` keys.
struct DomainSetup {
    data::SyntheticSpec spec;
    std::optional<std::size_t> per_class;  // absent ("all"): every labeled pixel trains, no test set
    std::uint64_t split_seed = 0;
};

// Generation and split seeds come from the run seed, the domain name and
// `domain.<name>.seed`, so one config yields fresh scenes per run seed.
DomainSetup domain_setup(const Config& config, const std::string& name, std::uint64_t run_seed);

// Descriptor only (name, bands, classes, spectral range).
data::DomainDescriptor domain_descriptor(const Config& config, const std::string& name);

// Split of `labels` following `setup.per_class`.
data::Split setup_split(const DomainSetup& setup, const data::LabelMap& labels);

// Generates the scene, standardizes it and splits it, exactly as
// gen-synthetic followed by load_domain would.
train::DomainData build_domain(const DomainSetup& setup);

train::TrainConfig pretrain_config(const Config& config, std::uint64_t seed);
train::TrainConfig target_config(const Config& config, model::Phase phase, std::uint64_t seed);

// Index of `cascade.first` within `sources`, if set.
std::optional<std::size_t> cascade_first_index(const Config& config, const std::vector<std::string>& sources);

std::filesystem::path cube_path(const std::filesystem::path& dir, const std::string& name);
std::filesystem::path labels_path(const std::filesystem::path& dir, const std::string& name);
std::filesystem::path split_path(const std::filesystem::path& dir, const std::string& name);

// load_domain on <dir>/<name>.{hsc,hsl,split} with the configured descriptor.
train::DomainData load_configured(const Config& config, const std::filesystem::path& dir, const std::string& name);

} // namespace xdhs::cli
