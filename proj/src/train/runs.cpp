#include "xdhs/train/runs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "xdhs/data/augment.hpp"
#include "xdhs/data/io.hpp"
#include "xdhs/metrics/metrics.hpp"
#include "xdhs/util/log.hpp"

namespace xdhs::train {

using model::Phase;

void DomainData::validate() const {
    descriptor.validate();
    cube.validate();
    labels.validate();
    const auto& n = descriptor.name;
    if (cube.bands != descriptor.bands)
        throw std::invalid_argument("domain '" + n + "': cube has " + std::to_string(cube.bands) +
                                    " bands, descriptor says " + std::to_string(descriptor.bands));
    if (labels.classes != descriptor.classes)
        throw std::invalid_argument("domain '" + n + "': labels have " + std::to_string(labels.classes) +
                                    " classes, descriptor says " + std::to_string(descriptor.classes));
    if (cube.height != labels.height || cube.width != labels.width)
        throw std::invalid_argument("domain '" + n + "': cube is " + std::to_string(cube.height) + "x" +
                                    std::to_string(cube.width) + ", labels are " + std::to_string(labels.height) +
                                    "x" + std::to_string(labels.width));
    split.validate(labels);
    if (split.train.empty()) throw std::invalid_argument("domain '" + n + "': empty training split");
}

DomainData load_domain(const data::DomainDescriptor& descriptor, const std::filesystem::path& cube,
                       const std::filesystem::path& labels, const std::filesystem::path& split) {
    DomainData d;
    d.descriptor = descriptor;
    d.cube = data::standardize(data::read_hsc(cube));
    d.labels = data::read_hsl(labels);
    d.split = data::read_split(split);
    d.validate();
    return d;
}

TrainConfig TrainConfig::pretrain_defaults() {
    TrainConfig c;
    c.phase = Phase::pretrain;
    c.schedule = {0.01, 0.1, std::nullopt, 2000};
    c.batch = 256;
    c.loss.kind = LossConfig::Kind::softmax;
    return c;
}

TrainConfig TrainConfig::target_defaults(Phase phase) {
    TrainConfig c;
    c.phase = phase;
    c.schedule = {0.001, 0.1, std::nullopt, 100};
    c.batch.reset();
    c.loss.kind = LossConfig::Kind::focal;
    c.loss.focal = {5.0, 0.25, std::nullopt};
    c.cascade = Cascade::off;
    return c;
}

void TrainConfig::validate() const {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (width < 1) throw std::invalid_argument("width must be at least 1");
    schedule.validate();
    if (batch && *batch == 0) throw std::invalid_argument("batch size must be positive");
    if (loss.kind == LossConfig::Kind::focal) loss.focal.validate();
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
    if (phase == Phase::pretrain && cascade != Cascade::off) cascade_schedule.validate();
    if (cascade_first && cascade != Cascade::on)
        throw std::invalid_argument("a cascade first domain needs cascade = on");
}

std::optional<std::size_t> cascade_choice(const std::vector<DomainData>& domains) {
    if (domains.size() < 2) return std::nullopt;
    std::vector<std::size_t> order(domains.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto count = [&](std::size_t i) { return domains[i].labels.labeled_count(); };
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return count(a) > count(b); });
    if (count(order[0]) >= 2 * count(order[1])) return order[0];
    return std::nullopt;
}

namespace {

// One mirrored copy of a domain, ready for the tape.
struct Variant {
    data::Mirror mirror;
    nn::Tensor<float> image;
    data::LabelMap labels;
};

std::vector<Variant> variants_of(const DomainData& d, bool augment) {
    std::vector<Variant> out;
    if (!augment) {
        out.push_back({data::Mirror{}, model::image_tensor<float>(d.cube), d.labels});
        return out;
    }
    for (auto& m : data::mirror8(d.cube, d.labels))
        out.push_back({m.mirror, model::image_tensor<float>(m.cube), std::move(m.labels)});
    return out;
}

nn::Var loss_of(nn::Tape<float>& tape, nn::Var logits, const data::LabelMap& labels,
                std::span<const data::Pixel> mask, const LossConfig& loss) {
    if (loss.kind == LossConfig::Kind::focal) return nn::focal_loss(tape, logits, labels, mask, loss.focal);
    return nn::softmax_ce_loss(tape, logits, labels, mask);
}

// Loss-mask pixels for one domain at one iteration, in the coordinates of `v`.
std::vector<data::Pixel> draw_mask(const DomainData& d, const Variant& v, std::optional<std::size_t> batch,
                                   nn::Rng& rng) {
    const auto& pool = d.split.train;
    std::vector<data::Pixel> mask = batch ? data::sample_loss_mask(pool, std::min(*batch, pool.size()), rng) : pool;
    return data::apply(v.mirror, mask, d.cube.height, d.cube.width);
}

void check_loss(double loss, std::size_t iter) {
    if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: loss is " + std::to_string(loss) + " at iteration " +
                                 std::to_string(iter));
}

void check_shapes(const Model& m, const DomainData& d, std::size_t index) {
    const auto& s = m.domains.at(index);
    if (s.bands != d.descriptor.bands || s.classes != d.descriptor.classes)
        throw std::invalid_argument("domain '" + d.descriptor.name + "' has " + std::to_string(d.descriptor.bands) +
                                    " bands / " + std::to_string(d.descriptor.classes) + " classes, model expects " +
                                    std::to_string(s.bands) + " / " + std::to_string(s.classes));
}

TargetResult train_target(Model&& built, Phase phase, const DomainData& target, const TrainConfig& cfg,
                          const Observer& observer) {
    TargetResult result;
    result.model = std::move(built);
    auto& m = result.model;
    check_shapes(m, target, 0);
    if (cfg.log_eval && target.split.test.empty())
        throw std::invalid_argument("domain '" + target.descriptor.name + "': empty test split, cannot log metrics");

    const auto variants = variants_of(target, cfg.augment);
    auto order = nn::Rng::stream(cfg.seed, 1);
    const auto groups = model::param_groups(m, phase, 1);
    SgdState<float> state;
    state.momentum = cfg.momentum;
    state.weight_decay = cfg.weight_decay;

    if (observer.stage_begin) observer.stage_begin(0, m, state);
    for (std::size_t it = 0; it < cfg.schedule.total_iters; ++it) {
        const double lr = lr_at(cfg.schedule, it);
        const auto& v = variants[variants.size() == 1 ? 0 : order.below(variants.size())];
        const auto mask = draw_mask(target, v, cfg.batch, order);

        nn::Tape<float> tape;
        const auto logits = m.forward(tape, 0, tape.constant(v.image), nn::Mode::train);
        const auto loss = loss_of(tape, logits, v.labels, mask, cfg.loss);
        CurveRow row{it, lr, static_cast<double>(tape.value(loss).item()), NAN, NAN, NAN};
        check_loss(row.loss, it);
        sgd_step<float>(groups, tape.backward(loss), state, lr);

        if (cfg.log_eval) {
            const auto r = metrics::evaluate(m, 0, target.cube, target.labels, target.split.test);
            row.oa = r.oa;
            row.aa = r.aa;
            row.kappa = r.kappa;
        }
        result.rows.push_back(row);
        if (observer.after_update) observer.after_update(0, it, m, state);
    }
    result.iterations = cfg.schedule.total_iters;
    return result;
}

void require_phase(const TrainConfig& cfg, Phase phase) {
    if (cfg.phase != phase)
        throw std::invalid_argument("config phase is " + model::to_string(cfg.phase) + ", run needs " +
                                    model::to_string(phase));
}

} // namespace

PretrainResult run_pretrain(const std::vector<DomainData>& domains, const TrainConfig& cfg,
                            const Observer& observer) {
    require_phase(cfg, Phase::pretrain);
    cfg.validate();
    if (domains.empty()) throw std::invalid_argument("pretraining needs at least one domain");
    std::vector<model::DomainShape> shapes;
    for (const auto& d : domains) {
        d.validate();
        shapes.push_back(d.shape());
    }

    std::optional<std::size_t> first;
    if (cfg.cascade == Cascade::automatic) first = cascade_choice(domains);
    if (cfg.cascade == Cascade::on) {
        if (cfg.cascade_first) {
            if (*cfg.cascade_first >= domains.size())
                throw std::invalid_argument("cascade first domain " + std::to_string(*cfg.cascade_first) +
                                            " out of range");
            first = cfg.cascade_first;
        } else {
            std::size_t best = 0;
            for (std::size_t i = 1; i < domains.size(); ++i)
                if (domains[i].labels.labeled_count() > domains[best].labels.labeled_count()) best = i;
            first = best;
        }
    }

    PretrainResult result;
    auto init = nn::Rng::stream(cfg.seed, 0);
    result.model = model::build_cross_domain<float>(shapes, cfg.k, init, cfg.width);
    result.cascade_domain = first;
    auto& m = result.model;

    std::vector<std::vector<Variant>> variants;
    for (const auto& d : domains) {
        variants.push_back(variants_of(d, cfg.augment));
        if (cfg.batch && *cfg.batch > d.split.train.size())
            log::warn("domain '" + d.descriptor.name + "' has " + std::to_string(d.split.train.size()) +
                      " training pixels, fewer than the batch of " + std::to_string(*cfg.batch) +
                      "; using all of them each iteration");
    }

    auto order = nn::Rng::stream(cfg.seed, 1);
    SgdState<float> state;
    state.momentum = cfg.momentum;
    state.weight_decay = cfg.weight_decay;
    std::size_t global = 0;

    auto stage = [&](int step, const std::vector<std::size_t>& active, const Schedule& schedule) {
        const auto groups = model::param_groups(m, Phase::pretrain, active.size());
        if (observer.stage_begin) observer.stage_begin(step, m, state);
        for (std::size_t it = 0; it < schedule.total_iters; ++it, ++global) {
            const double lr = lr_at(schedule, it);
            nn::Tape<float> tape;
            std::optional<nn::Var> total;
            for (auto d : active) {
                const auto& vs = variants[d];
                const auto& v = vs[vs.size() == 1 ? 0 : order.below(vs.size())];
                const auto mask = draw_mask(domains[d], v, cfg.batch, order);
                const auto logits = m.forward(tape, d, tape.constant(v.image), nn::Mode::train);
                const auto loss = loss_of(tape, logits, v.labels, mask, cfg.loss);
                total = total ? nn::add(tape, *total, loss) : loss;
            }
            PretrainRow row{global, step, lr, static_cast<double>(tape.value(*total).item())};
            check_loss(row.loss, global);
            sgd_step<float>(groups, tape.backward(*total), state, lr);
            result.rows.push_back(row);
            if (observer.after_update) observer.after_update(step, global, m, state);
        }
    };

    if (first) stage(1, {*first}, cfg.cascade_schedule);
    std::vector<std::size_t> all(domains.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    stage(2, all, cfg.schedule);
    result.iterations = global;
    return result;
}

TargetResult run_finetune(const Model& pretrained, const DomainData& target, const TrainConfig& cfg,
                          const Observer& observer) {
    require_phase(cfg, Phase::finetune);
    cfg.validate();
    target.validate();
    if (pretrained.k() != cfg.k)
        throw std::invalid_argument("checkpoint has k = " + std::to_string(pretrained.k()) + ", config has k = " +
                                    std::to_string(cfg.k));
    auto init = nn::Rng::stream(cfg.seed, 0);
    auto m = model::build_backbone<float>(target.descriptor.bands, target.descriptor.classes, cfg.k, init, cfg.width);
    m.domains[0].name = target.descriptor.name;
    model::transplant_shared(pretrained, m);
    return train_target(std::move(m), Phase::finetune, target, cfg, observer);
}

TargetResult run_scratch(const DomainData& target, const TrainConfig& cfg, const Observer& observer) {
    require_phase(cfg, Phase::scratch);
    cfg.validate();
    target.validate();
    auto init = nn::Rng::stream(cfg.seed, 0);
    auto m = model::build_backbone<float>(target.descriptor.bands, target.descriptor.classes, cfg.k, init, cfg.width);
    m.domains[0].name = target.descriptor.name;
    return train_target(std::move(m), Phase::scratch, target, cfg, observer);
}

std::string format_g6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string pretrain_csv(const std::vector<PretrainRow>& rows) {
    std::string out = "iter,step,lr,loss\n";
    for (const auto& r : rows)
        out += std::to_string(r.iter) + "," + std::to_string(r.step) + "," + format_g6(r.lr) + "," +
               format_g6(r.loss) + "\n";
    return out;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
    std::string out = "iter,lr,loss,oa,aa,kappa\n";
    for (const auto& r : rows)
        out += std::to_string(r.iter) + "," + format_g6(r.lr) + "," + format_g6(r.loss) + "," + format_g6(r.oa) +
               "," + format_g6(r.aa) + "," + format_g6(r.kappa) + "\n";
    return out;
}

} // namespace xdhs::train
