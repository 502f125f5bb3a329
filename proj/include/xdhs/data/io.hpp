#pragma once

#include <filesystem>
#include <string>

#include "xdhs/data/split.hpp"
#include "xdhs/data/types.hpp"

namespace xdhs::data {

// "HSC1" | u32 version=1 | u32 H | u32 W | u32 B | H*W*B f32, little-endian.
std::string encode_hsc(const HyperCube& cube);
HyperCube decode_hsc(std::string bytes, const std::string& what = "cube");
void write_hsc(const HyperCube& cube, const std::filesystem::path& path);
HyperCube read_hsc(const std::filesystem::path& path);

// "HSL1" | u32 version=1 | u32 H | u32 W | u16 C | H*W u16 labels.
std::string encode_hsl(const LabelMap& labels);
LabelMap decode_hsl(std::string bytes, const std::string& what = "labels");
void write_hsl(const LabelMap& labels, const std::filesystem::path& path);
LabelMap read_hsl(const std::filesystem::path& path);

// "# split v1 seed=<u64>" then one "<train|test> <row> <col>" line per pixel.
std::string encode_split(const Split& split);
Split decode_split(const std::string& text, const std::string& what = "split");
void write_split(const Split& split, const std::filesystem::path& path);
Split read_split(const std::filesystem::path& path);

} // namespace xdhs::data
