#include "xdhs/cli/settings.hpp"

#include <stdexcept>

#include "xdhs/data/augment.hpp"
#include "xdhs/data/io.hpp"
#include "xdhs/nn/rng.hpp"

namespace xdhs::cli {

namespace {

std::string key(const std::string& name, const char* field) { return "domain." + name + "." + field; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::optional<std::size_t> batch_value(const Config& c, const std::string& k, std::optional<std::size_t> fallback) {
    if (!c.has(k)) return fallback;
    if (c.text(k) == "full") return std::nullopt;
    return c.integer(k);
}

train::Schedule schedule(const Config& c, const std::string& prefix, train::Schedule s) {
    s.base_lr = c.real(prefix + ".base_lr", s.base_lr);
    s.gamma = c.real(prefix + ".gamma", s.gamma);
    if (c.has(prefix + ".step_iters")) {
        if (c.text(prefix + ".step_iters") == "none")
            s.step_iters.reset();
        else
            s.step_iters = c.integer(prefix + ".step_iters");
    }
    s.total_iters = c.integer(prefix + ".iters", s.total_iters);
    return s;
}

train::LossConfig::Kind loss_kind(const std::string& s, const std::string& k) {
    if (s == "softmax") return train::LossConfig::Kind::softmax;
    if (s == "focal") return train::LossConfig::Kind::focal;
    throw std::invalid_argument(k + ": expected softmax or focal, got '" + s + "'");
}

nn::FocalParams focal(const Config& c, nn::FocalParams f) {
    f.gamma = c.real("loss.gamma", f.gamma);
    f.alpha = c.real("loss.alpha", f.alpha);
    if (c.has("loss.background")) {
        if (c.text("loss.background") == "none") {
            f.background_class.reset();
        } else {
            const auto v = c.integer("loss.background");
            if (v > 0xFFFF) throw std::invalid_argument("loss.background: out of range");
            f.background_class = static_cast<std::uint16_t>(v);
        }
    }
    return f;
}

void common(const Config& c, train::TrainConfig& t, std::uint64_t seed) {
    t.k = c.integer("model.k", t.k);
    t.width = c.integer("model.width", t.width);
    t.momentum = c.real("optim.momentum", t.momentum);
    t.weight_decay = c.real("optim.weight_decay", t.weight_decay);
    t.seed = seed;
}

} // namespace

data::DomainDescriptor domain_descriptor(const Config& c, const std::string& name) {
    data::DomainDescriptor d;
    d.name = name;
    d.bands = c.integer(key(name, "bands"));
    d.classes = c.integer(key(name, "classes"));
    d.spectral_low = c.real(key(name, "low"), d.spectral_low);
    d.spectral_high = c.real(key(name, "high"), d.spectral_high);
    d.validate();
    return d;
}

DomainSetup domain_setup(const Config& c, const std::string& name, std::uint64_t run_seed) {
    DomainSetup s;
    auto& spec = s.spec;
    spec.descriptor = domain_descriptor(c, name);
    spec.height = c.integer(key(name, "height"), spec.height);
    spec.width = c.integer(key(name, "width"), spec.width);
    spec.blob_count = c.integer(key(name, "blobs"), spec.blob_count);
    spec.noise_std = c.real(key(name, "noise"), spec.noise_std);
    spec.unlabeled_fraction = c.real(key(name, "unlabeled"), spec.unlabeled_fraction);
    spec.signature_seed = c.integer(key(name, "signature_seed"), spec.signature_seed);
    if (c.has(key(name, "materials"))) spec.materials = c.integers(key(name, "materials"));

    auto rng = nn::Rng::stream(run_seed, fnv1a(name) ^ c.integer(key(name, "seed"), 0));
    spec.seed = rng.next_u64();
    s.split_seed = rng.next_u64();

    const auto pc = c.text(key(name, "per_class"), "all");
    if (pc != "all") s.per_class = c.integer(key(name, "per_class"));
    return s;
}

data::Split setup_split(const DomainSetup& setup, const data::LabelMap& labels) {
    if (setup.per_class) return data::make_split(labels, *setup.per_class, setup.split_seed);
    data::Split split;
    split.train = data::labeled_pixels(labels);
    split.seed = setup.split_seed;
    return split;
}

train::DomainData build_domain(const DomainSetup& setup) {
    auto g = data::gen_synthetic(setup.spec);
    train::DomainData d;
    d.descriptor = setup.spec.descriptor;
    d.cube = data::standardize(g.cube);
    d.split = setup_split(setup, g.labels);
    d.labels = std::move(g.labels);
    d.validate();
    return d;
}

train::TrainConfig pretrain_config(const Config& c, std::uint64_t seed) {
    auto t = train::TrainConfig::pretrain_defaults();
    common(c, t, seed);
    t.schedule = schedule(c, "pretrain", t.schedule);
    t.batch = batch_value(c, "pretrain.batch", t.batch);
    t.augment = c.flag("pretrain.augment", t.augment);
    t.loss.kind = loss_kind(c.text("pretrain.loss", "softmax"), "pretrain.loss");
    t.loss.focal = focal(c, t.loss.focal);

    const auto mode = c.text("cascade.mode", "auto");
    if (mode == "auto")
        t.cascade = train::Cascade::automatic;
    else if (mode == "on")
        t.cascade = train::Cascade::on;
    else if (mode == "off")
        t.cascade = train::Cascade::off;
    else
        throw std::invalid_argument("cascade.mode: expected auto, on or off, got '" + mode + "'");
    t.cascade_schedule.total_iters = c.integer("cascade.iters", t.cascade_schedule.total_iters);
    t.cascade_schedule.base_lr = c.real("cascade.base_lr", t.cascade_schedule.base_lr);
    if (c.has("sources")) t.cascade_first = cascade_first_index(c, c.list("sources"));
    t.validate();
    return t;
}

train::TrainConfig target_config(const Config& c, model::Phase phase, std::uint64_t seed) {
    if (phase == model::Phase::pretrain) throw std::invalid_argument("target_config needs finetune or scratch");
    auto t = train::TrainConfig::target_defaults(phase);
    common(c, t, seed);
    t.schedule = schedule(c, "train", t.schedule);
    t.batch = batch_value(c, "train.batch", t.batch);
    t.augment = c.flag("train.augment", t.augment);
    t.log_eval = c.flag("train.log_eval", t.log_eval);
    t.loss.kind = loss_kind(c.text("loss.kind", "focal"), "loss.kind");
    t.loss.focal = focal(c, t.loss.focal);
    t.validate();
    return t;
}

std::optional<std::size_t> cascade_first_index(const Config& c, const std::vector<std::string>& sources) {
    if (!c.has("cascade.first")) return std::nullopt;
    const auto name = c.text("cascade.first");
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i] == name) return i;
    throw std::invalid_argument("cascade.first: '" + name + "' is not one of the sources");
}

std::filesystem::path cube_path(const std::filesystem::path& dir, const std::string& name) {
    return dir / (name + ".hsc");
}
std::filesystem::path labels_path(const std::filesystem::path& dir, const std::string& name) {
    return dir / (name + ".hsl");
}
std::filesystem::path split_path(const std::filesystem::path& dir, const std::string& name) {
    return dir / (name + ".split");
}

train::DomainData load_configured(const Config& c, const std::filesystem::path& dir, const std::string& name) {
    return train::load_domain(domain_descriptor(c, name), cube_path(dir, name), labels_path(dir, name),
                              split_path(dir, name));
}

} // namespace xdhs::cli
