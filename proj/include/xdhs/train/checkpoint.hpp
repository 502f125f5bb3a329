#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xdhs/model/network.hpp"

namespace xdhs::train {

using Model = model::CrossDomainModel<float>;

// Everything needed to rebuild a model besides its tensors.
struct CheckpointMeta {
    std::string phase;
    std::size_t k = 0;
    std::size_t width = model::kHiddenWidth;
    std::vector<model::DomainShape> domains;
    std::size_t iteration = 0;
    std::uint64_t seed = 0;
};

struct Checkpoint {
    CheckpointMeta meta;
    Model model;
};

// k, width and domains are taken from the model; phase, iteration and seed from `meta`.
std::string encode_checkpoint(Model& model, const CheckpointMeta& meta);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& what = "checkpoint");

void save_checkpoint(Model& model, const CheckpointMeta& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace xdhs::train
