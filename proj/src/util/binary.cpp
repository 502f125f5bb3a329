#include "xdhs/util/binary.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace xdhs::io {

void ByteWriter::u16(std::uint16_t v) {
    buf_.push_back(static_cast<char>(v & 0xff));
    buf_.push_back(static_cast<char>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) buf_.push_back(static_cast<char>((v >> shift) & 0xff));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f32s(std::span<const float> values) {
    buf_.reserve(buf_.size() + 4 * values.size());
    for (float v : values) f32(v);
}

void ByteReader::need(std::size_t n) {
    if (remaining() < n)
        fail("truncated: needed " + std::to_string(n) + " more bytes at offset " + std::to_string(pos_) + ", " +
             std::to_string(remaining()) + " left");
}

void ByteReader::fail(const std::string& message) const { throw std::runtime_error(what_ + ": " + message); }

std::string ByteReader::bytes(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint16_t ByteReader::u16() {
    need(2);
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ByteReader::u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

void ByteReader::f32s(std::span<float> out) {
    need(4 * out.size());
    for (auto& v : out) v = f32();
}

void ByteReader::expect_end() const {
    if (remaining() != 0) fail(std::to_string(remaining()) + " unexpected trailing bytes");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw std::runtime_error(path.string() + ": read error");
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error(path.string() + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error(path.string() + ": cannot move temporary into place");
    }
}

std::uint32_t to_u32(std::size_t v, const char* field) {
    if (v > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument(std::string(field) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

} // namespace xdhs::io
