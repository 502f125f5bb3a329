#include "xdhs/train/checkpoint.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xdhs/nn/rng.hpp"
#include "xdhs/util/binary.hpp"

namespace xdhs::train {

namespace {

constexpr std::string_view kMagic("XDHSCK1\0", 8);
constexpr std::uint32_t kVersion = 1;

void check_text(const std::string& s, const char* field) {
    if (s.empty() || s.find_first_of("\n\r=") != std::string::npos || s.front() == ' ' || s.back() == ' ')
        throw std::invalid_argument(std::string("checkpoint ") + field + " '" + s +
                                    "' must be non-empty, single-line, without '=' or edge spaces");
}

std::string meta_text(const Model& model, const CheckpointMeta& meta) {
    check_text(meta.phase, "phase");
    std::ostringstream out;
    out << "phase = " << meta.phase << "\n"
        << "k = " << model.k() << "\n"
        << "width = " << model.width << "\n"
        << "iteration = " << meta.iteration << "\n"
        << "seed = " << meta.seed << "\n"
        << "domains = " << model.domains.size() << "\n";
    for (std::size_t d = 0; d < model.domains.size(); ++d) {
        const auto& s = model.domains[d];
        check_text(s.name, "domain name");
        out << "domain." << d << ".name = " << s.name << "\n"
            << "domain." << d << ".bands = " << s.bands << "\n"
            << "domain." << d << ".classes = " << s.classes << "\n";
    }
    return out.str();
}

class MetaReader {
public:
    MetaReader(const std::string& text, const std::string& what) : what_(what) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) fail("bad meta line '" + line + "'");
            if (!kv_.emplace(line.substr(0, eq), line.substr(eq + 3)).second)
                fail("duplicate meta key '" + line.substr(0, eq) + "'");
        }
    }

    const std::string& text(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) fail("meta lacks key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::uint64_t number(const std::string& key) const {
        const auto& s = text(key);
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size()) fail("meta key '" + key + "' is not an integer: " + s);
        return v;
    }

    void expect_all_used() const {
        for (const auto& [k, v] : kv_)
            if (!used_.contains(k)) fail("unknown meta key '" + k + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw std::runtime_error(what_ + ": " + msg); }

private:
    std::string what_;
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

} // namespace

std::string encode_checkpoint(Model& model, const CheckpointMeta& meta) {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kVersion);
    const auto text = meta_text(model, meta);
    w.u32(io::to_u32(text.size(), "meta length"));
    w.bytes(text);

    std::vector<std::pair<std::string, const nn::Tensor<float>*>> tensors;
    model.visit([&](const std::string& name, nn::Tensor<float>& t, bool) { tensors.emplace_back(name, &t); });
    w.u32(io::to_u32(tensors.size(), "tensor count"));
    for (const auto& [name, t] : tensors) {
        w.u32(io::to_u32(name.size(), "name length"));
        w.bytes(name);
        w.u32(io::to_u32(t->rank(), "rank"));
        for (auto d : t->shape()) w.u32(io::to_u32(d, "dimension"));
        w.f32s(t->data());
    }
    return w.buffer();
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& what) {
    io::ByteReader r(bytes, what);
    if (r.bytes(kMagic.size()) != kMagic) r.fail("bad magic (not an xdhs checkpoint)");
    if (const auto v = r.u32(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
    const auto meta_len = r.u32();
    const MetaReader mr(r.bytes(meta_len), what);

    Checkpoint ck;
    auto& m = ck.meta;
    m.phase = mr.text("phase");
    m.k = mr.number("k");
    m.width = mr.number("width");
    m.iteration = mr.number("iteration");
    m.seed = mr.number("seed");
    const auto count = mr.number("domains");
    if (count == 0 || count > 4096) mr.fail("implausible domain count " + std::to_string(count));
    for (std::size_t d = 0; d < count; ++d) {
        const auto p = "domain." + std::to_string(d) + ".";
        m.domains.push_back({mr.text(p + "name"), mr.number(p + "bands"), mr.number(p + "classes")});
    }
    mr.expect_all_used();
    if (m.width == 0 || m.width > 65536) mr.fail("implausible width " + std::to_string(m.width));
    if (m.k > 4096) mr.fail("implausible k " + std::to_string(m.k));

    // Shapes come from the architecture; the tensor section must match it exactly.
    nn::Rng rng(0);
    try {
        ck.model = model::build_cross_domain<float>(m.domains, m.k, rng, m.width);
    } catch (const std::invalid_argument& e) {
        mr.fail(std::string("meta describes an invalid model: ") + e.what());
    }
    std::map<std::string, nn::Tensor<float>*> slots;
    ck.model.visit([&](const std::string& name, nn::Tensor<float>& t, bool) { slots.emplace(name, &t); });

    const auto n = r.u32();
    if (n != slots.size())
        r.fail("holds " + std::to_string(n) + " tensors, model needs " + std::to_string(slots.size()));
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto name = r.bytes(r.u32());
        const auto it = slots.find(name);
        if (it == slots.end()) r.fail("unexpected tensor '" + name + "'");
        if (!seen.insert(name).second) r.fail("duplicate tensor '" + name + "'");
        const auto rank = r.u32();
        nn::Shape shape;
        for (std::uint32_t j = 0; j < rank && j < 8; ++j) shape.push_back(r.u32());
        if (shape != it->second->shape())
            r.fail("tensor '" + name + "' has shape " + nn::shape_str(shape) + ", expected " +
                   nn::shape_str(it->second->shape()));
        r.f32s(it->second->data());
    }
    r.expect_end();
    return ck;
}

void save_checkpoint(Model& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_checkpoint(model, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file(path), path.string());
}

} // namespace xdhs::train
