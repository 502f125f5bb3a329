#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xdhs::io {

// Little-endian encoder into a byte buffer.
class ByteWriter {
public:
    void bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void f32(float v);
    void f32s(std::span<const float> values);

    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

// Little-endian decoder. Every read past the end throws std::runtime_error
// naming `what` (usually the file path).
class ByteReader {
public:
    ByteReader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    std::string bytes(std::size_t n);
    std::uint16_t u16();
    std::uint32_t u32();
    float f32();
    void f32s(std::span<float> out);

    std::size_t remaining() const { return data_.size() - pos_; }
    // Throws unless every byte was consumed.
    void expect_end() const;
    [[noreturn]] void fail(const std::string& message) const;

private:
    void need(std::size_t n);
    std::string data_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary and renames, so a failed write never
// leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Checked narrowing for header fields.
std::uint32_t to_u32(std::size_t v, const char* field);

} // namespace xdhs::io
