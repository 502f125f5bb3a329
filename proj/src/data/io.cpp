#include "xdhs/data/io.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "xdhs/util/binary.hpp"

namespace xdhs::data {

namespace {

constexpr std::uint32_t kVersion = 1;

void expect_header(io::ByteReader& in, const char* magic) {
    const std::string got = in.bytes(4);
    if (got != magic) in.fail(std::string("bad magic, expected \"") + magic + "\"");
    const std::uint32_t version = in.u32();
    if (version != kVersion) in.fail("unsupported version " + std::to_string(version) + " (expected 1)");
}

} // namespace

std::string encode_hsc(const HyperCube& cube) {
    cube.validate();
    io::ByteWriter out;
    out.bytes("HSC1");
    out.u32(kVersion);
    out.u32(io::to_u32(cube.height, "height"));
    out.u32(io::to_u32(cube.width, "width"));
    out.u32(io::to_u32(cube.bands, "bands"));
    out.f32s(cube.values);
    return out.buffer();
}

HyperCube decode_hsc(std::string bytes, const std::string& what) {
    io::ByteReader in(std::move(bytes), what);
    expect_header(in, "HSC1");
    const std::size_t h = in.u32(), w = in.u32(), b = in.u32();
    if (h == 0 || w == 0 || b == 0) in.fail("zero dimension in header");
    const unsigned __int128 expected = static_cast<unsigned __int128>(4) * h * w * b;
    if (expected != in.remaining())
        in.fail("payload is " + std::to_string(in.remaining()) + " bytes, header implies 4*" + std::to_string(h) +
                "*" + std::to_string(w) + "*" + std::to_string(b));
    HyperCube cube(h, w, b);
    in.f32s(cube.values);
    in.expect_end();
    try {
        cube.validate();
    } catch (const std::exception& e) {
        in.fail(e.what());
    }
    return cube;
}

void write_hsc(const HyperCube& cube, const std::filesystem::path& path) { io::write_file_atomic(path, encode_hsc(cube)); }

HyperCube read_hsc(const std::filesystem::path& path) { return decode_hsc(io::read_file(path), path.string()); }

std::string encode_hsl(const LabelMap& labels) {
    labels.validate();
    io::ByteWriter out;
    out.bytes("HSL1");
    out.u32(kVersion);
    out.u32(io::to_u32(labels.height, "height"));
    out.u32(io::to_u32(labels.width, "width"));
    out.u16(labels.classes);
    for (auto l : labels.labels) out.u16(l);
    return out.buffer();
}

LabelMap decode_hsl(std::string bytes, const std::string& what) {
    io::ByteReader in(std::move(bytes), what);
    expect_header(in, "HSL1");
    const std::size_t h = in.u32(), w = in.u32();
    const std::uint16_t c = in.u16();
    if (h == 0 || w == 0) in.fail("zero dimension in header");
    if (static_cast<unsigned __int128>(2) * h * w != in.remaining())
        in.fail("payload is " + std::to_string(in.remaining()) + " bytes, header implies 2*" + std::to_string(h) +
                "*" + std::to_string(w));
    LabelMap labels(h, w, c);
    for (auto& l : labels.labels) {
        l = in.u16();
        if (l > c) in.fail("label " + std::to_string(l) + " exceeds class count " + std::to_string(c));
    }
    in.expect_end();
    return labels;
}

void write_hsl(const LabelMap& labels, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_hsl(labels));
}

LabelMap read_hsl(const std::filesystem::path& path) { return decode_hsl(io::read_file(path), path.string()); }

std::string encode_split(const Split& split) {
    std::string out = "# split v1 seed=" + std::to_string(split.seed) + "\n";
    for (const auto& p : split.train) out += "train " + std::to_string(p.row) + " " + std::to_string(p.col) + "\n";
    for (const auto& p : split.test) out += "test " + std::to_string(p.row) + " " + std::to_string(p.col) + "\n";
    return out;
}

namespace {

template <typename U>
bool parse_uint(std::string_view text, U& out) {
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

} // namespace

Split decode_split(const std::string& text, const std::string& what) {
    Split split;
    std::size_t pos = 0, line_no = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw std::runtime_error(what + ":" + std::to_string(line_no) + ": " + msg);
    };
    bool header = false;
    while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) {
            ++line_no;
            fail("missing final newline");
        }
        const std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!header) {
            constexpr std::string_view prefix = "# split v1 seed=";
            if (!line.starts_with(prefix) || !parse_uint(line.substr(prefix.size()), split.seed))
                fail("expected header '# split v1 seed=<u64>'");
            header = true;
            continue;
        }
        const auto s1 = line.find(' ');
        const auto s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
        if (s2 == std::string_view::npos) fail("expected '<train|test> <row> <col>'");
        const auto kind = line.substr(0, s1);
        Pixel p;
        if (!parse_uint(line.substr(s1 + 1, s2 - s1 - 1), p.row) || !parse_uint(line.substr(s2 + 1), p.col))
            fail("bad row/col in '" + std::string(line) + "'");
        if (kind == "train")
            split.train.push_back(p);
        else if (kind == "test")
            split.test.push_back(p);
        else
            fail("unknown record kind '" + std::string(kind) + "'");
    }
    if (!header) fail("empty split file");
    return split;
}

void write_split(const Split& split, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_split(split));
}

Split read_split(const std::filesystem::path& path) { return decode_split(io::read_file(path), path.string()); }

} // namespace xdhs::data
