#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "xdhs/data/augment.hpp"
#include "xdhs/data/synthetic.hpp"
#include "xdhs/train/runs.hpp"
#include "xdhs/util/log.hpp"

using namespace xdhs;
using namespace xdhs::train;
using model::Phase;

namespace {

// Gradients of loss = sum(factor * w) are `factor` everywhere.
template <typename T>
nn::Gradients<T> constant_grads(std::vector<nn::Parameter<T>*> params, T factor) {
    nn::Tape<T> tape;
    std::optional<nn::Var> total;
    for (auto* p : params) {
        const auto s = nn::sum(tape, nn::scale(tape, tape.parameter(*p), factor));
        total = total ? nn::add(tape, *total, s) : s;
    }
    return tape.backward(*total);
}

nn::Parameter<double> scalar_param(const std::string& name, double w) {
    return {name, nn::Tensor<double>({1}, {w})};
}

model::ParamGroup<double> group_of(nn::Parameter<double>& p, bool decay = true, double multiplier = 1.0) {
    return {"g", {&p}, multiplier, decay};
}

DomainData tiny_domain(const std::string& name, std::size_t bands, std::size_t classes, std::uint64_t seed,
                       std::size_t side = 8, std::size_t per_class = 2) {
    data::SyntheticSpec s;
    s.descriptor = {name, bands, classes};
    s.height = side;
    s.width = side;
    s.noise_std = 0.1;
    s.seed = seed;
    s.signature_seed = 5;
    s.unlabeled_fraction = 0.0;
    const auto g = data::gen_synthetic(s);
    DomainData d;
    d.descriptor = s.descriptor;
    d.cube = data::standardize(g.cube);
    d.labels = g.labels;
    d.split = data::make_split(g.labels, per_class, seed);
    return d;
}

TrainConfig tiny_pretrain(std::size_t iters) {
    auto c = TrainConfig::pretrain_defaults();
    c.k = 1;
    c.width = 4;
    c.schedule.total_iters = iters;
    c.batch = 4;
    c.seed = 3;
    return c;
}

TrainConfig tiny_target(Phase phase, std::size_t iters) {
    auto c = TrainConfig::target_defaults(phase);
    c.k = 1;
    c.width = 4;
    c.schedule.total_iters = iters;
    c.seed = 4;
    return c;
}

std::vector<std::pair<std::string, nn::Tensor<float>>> snapshot(const Model& m) {
    std::vector<std::pair<std::string, nn::Tensor<float>>> out;
    const_cast<Model&>(m).visit([&](const std::string& n, nn::Tensor<float>& t, bool) { out.emplace_back(n, t); });
    return out;
}

bool same_snapshot(const std::vector<std::pair<std::string, nn::Tensor<float>>>& a,
                   const std::vector<std::pair<std::string, nn::Tensor<float>>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].first != b[i].first || !nn::bitwise_equal(a[i].second, b[i].second)) return false;
    return true;
}

} // namespace

TEST_CASE("lr_at") {
    Schedule constant{0.01, 0.1, std::nullopt, 2000};
    CHECK(lr_at(constant, 0) == 0.01);
    CHECK(lr_at(constant, 1999) == 0.01);
    Schedule step{0.01, 0.1, 1000, 2000};
    CHECK(lr_at(step, 0) == 0.01);
    CHECK(lr_at(step, 999) == 0.01);
    CHECK(std::abs(lr_at(step, 1500) - 0.001) < 1e-15);
    CHECK_THROWS_AS(lr_at(step, 2000), std::out_of_range);
    CHECK_THROWS_AS((Schedule{0.0, 0.1, std::nullopt, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((Schedule{0.1, 1.5, std::nullopt, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((Schedule{0.1, 0.1, 0, 10}.validate()), std::invalid_argument);
}

TEST_CASE("sgd_step hand examples") {
    SUBCASE("plain step") {
        auto p = scalar_param("w", 1.0);
        SgdState<double> s;
        s.momentum = 0.0;
        s.weight_decay = 0.0;
        const std::vector groups{group_of(p)};
        sgd_step<double>(groups, constant_grads<double>({&p}, 2.0), s, 0.1);
        CHECK(p.value[0] == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("two momentum steps") {
        auto p = scalar_param("w", 0.0);
        SgdState<double> s;
        s.momentum = 0.9;
        s.weight_decay = 0.0;
        const std::vector groups{group_of(p)};
        sgd_step<double>(groups, constant_grads<double>({&p}, 1.0), s, 0.1);
        CHECK(p.value[0] == doctest::Approx(-0.1).epsilon(1e-15));
        CHECK((*s.velocity(p))[0] == doctest::Approx(-0.1).epsilon(1e-15));
        sgd_step<double>(groups, constant_grads<double>({&p}, 1.0), s, 0.1);
        CHECK((*s.velocity(p))[0] == doctest::Approx(-0.19).epsilon(1e-15));
        CHECK(p.value[0] == doctest::Approx(-0.29).epsilon(1e-15));
    }
    SUBCASE("pure decay") {
        auto p = scalar_param("w", 1.0);
        auto q = scalar_param("bn", 1.0);
        SgdState<double> s;
        s.momentum = 0.0;
        s.weight_decay = 0.0005;
        const std::vector groups{group_of(p), group_of(q, false)};
        sgd_step<double>(groups, constant_grads<double>({&p, &q}, 0.0), s, 0.01);
        CHECK(p.value[0] == doctest::Approx(0.999995).epsilon(1e-15));
        CHECK(q.value[0] == 1.0);
    }
}

TEST_CASE("sgd_step leaves parameters without gradients alone") {
    auto p = scalar_param("on_tape", 1.0);
    auto q = scalar_param("off_tape", 1.0);
    SgdState<double> s;
    const std::vector groups{group_of(p), group_of(q)};
    sgd_step<double>(groups, constant_grads<double>({&p}, 1.0), s, 0.1);
    CHECK(p.value[0] != 1.0);
    CHECK(q.value[0] == 1.0);
    CHECK(s.velocity(q) == nullptr);
}

TEST_CASE("non-finite gradient aborts the step and names the parameter") {
    auto p = scalar_param("fine", 1.0);
    auto q = scalar_param("shared/0/conv_a.weight", 1.0);
    nn::Tape<double> tape;
    const auto a = nn::sum(tape, tape.parameter(p));
    const auto b = nn::sum(tape, nn::scale(tape, tape.parameter(q), std::nan("")));
    const auto grads = tape.backward(nn::add(tape, a, b));
    SgdState<double> s;
    const std::vector groups{group_of(p), group_of(q)};
    CHECK_THROWS_WITH_AS(sgd_step<double>(groups, grads, s, 0.1), doctest::Contains("shared/0/conv_a.weight"),
                         std::runtime_error);
    CHECK(p.value[0] == 1.0);
    CHECK(s.size() == 0);
}

namespace {

// Trains `steps` iterations on one image with explicit groups; returns the snapshot.
template <typename Adjust>
std::vector<std::pair<std::string, nn::Tensor<float>>> step_model(Phase phase, std::size_t n, Adjust adjust,
                                                                  std::size_t steps = 3) {
    const auto d = tiny_domain("t", 5, 3, 1);
    nn::Rng rng(9);
    auto m = model::build_backbone<float>(5, 3, 1, rng, 4);
    SgdState<float> s;
    for (std::size_t i = 0; i < steps; ++i) {
        nn::Tape<float> tape;
        const auto logits = m.forward(tape, 0, tape.constant(model::image_tensor<float>(d.cube)), nn::Mode::train);
        const auto grads = tape.backward(nn::softmax_ce_loss(tape, logits, d.labels, d.split.train));
        auto groups = model::param_groups(m, phase, n);
        adjust(groups, grads, s);
    }
    return snapshot(m);
}

} // namespace

TEST_CASE("a group multiplier equals multiplier 1 at the scaled learning rate, exactly") {
    const double lr = 0.001;
    for (auto [phase, n] : {std::pair{Phase::finetune, std::size_t{1}}, std::pair{Phase::pretrain, std::size_t{4}}}) {
        CAPTURE(model::to_string(phase));
        const auto with_multiplier = step_model(phase, n, [&](auto& groups, auto& grads, auto& s) {
            sgd_step<float>(groups, grads, s, lr);
        });
        const auto with_lr = step_model(phase, n, [&](auto& groups, auto& grads, auto& s) {
            for (auto& g : groups) {
                const double m = g.lr_multiplier;
                g.lr_multiplier = 1.0;
                sgd_step<float>(std::span(&g, 1), grads, s, lr * m);
            }
        });
        CHECK(same_snapshot(with_multiplier, with_lr));
    }
    nn::Rng rng(1);
    auto m = model::build_backbone<float>(5, 3, 1, rng, 4);
    for (const auto& g : model::param_groups(m, Phase::finetune, 1))
        CHECK(g.lr_multiplier == (g.name.starts_with("data.") ? 10.0 : 1.0));
}

namespace {

struct TrunkGap {
    double update_relative;  // |w_K - w_1| / |accumulated update of w_1|
    double weight_relative;  // |w_K - w_1| / |w_1|
};

// Trains one model on one source and another on K identical copies of it,
// starting from identical weights, and compares the trunks after each iteration.
std::vector<TrunkGap> trunk_gaps(std::size_t K, double weight_decay, int iterations) {
    const auto d = tiny_domain("t", 5, 3, 2);
    const auto image = model::image_tensor<float>(d.cube);
    nn::Rng rng(6);
    auto single = model::build_backbone<float>(5, 3, 2, rng, 4);
    nn::Rng rng2(6);
    auto copies = model::build_cross_domain<float>(std::vector<model::DomainShape>(K, {"t", 5, 3}), 2, rng2, 4);
    copies.trunk = single.trunk;
    for (std::size_t i = 0; i < K; ++i) {
        copies.inlets[i] = single.inlets[0];
        copies.heads[i] = single.heads[0];
    }
    const auto start = single.trunk;
    SgdState<float> s1, sk;
    s1.weight_decay = sk.weight_decay = weight_decay;
    std::vector<TrunkGap> out;
    for (int it = 0; it < iterations; ++it) {
        {
            nn::Tape<float> tape;
            const auto logits = single.forward(tape, 0, tape.constant(image), nn::Mode::train);
            const auto grads = tape.backward(nn::softmax_ce_loss(tape, logits, d.labels, d.split.train));
            sgd_step<float>(model::param_groups(single, Phase::pretrain, 1), grads, s1, 0.01);
        }
        {
            nn::Tape<float> tape;
            std::optional<nn::Var> total;
            for (std::size_t i = 0; i < K; ++i) {
                const auto logits = copies.forward(tape, i, tape.constant(image), nn::Mode::train);
                const auto l = nn::softmax_ce_loss(tape, logits, d.labels, d.split.train);
                total = total ? nn::add(tape, *total, l) : l;
            }
            sgd_step<float>(model::param_groups(copies, Phase::pretrain, K), tape.backward(*total), sk, 0.01);
        }
        double diff = 0.0, norm = 0.0, moved = 0.0;
        for (std::size_t m = 0; m < single.k(); ++m)
            for (auto sel : {&model::ResidualModule<float>::conv_a, &model::ResidualModule<float>::conv_b}) {
                const auto a = (single.trunk.modules[m].*sel).weight.value.data();
                const auto b = (copies.trunk.modules[m].*sel).weight.value.data();
                const auto w0 = (start.modules[m].*sel).weight.value.data();
                for (std::size_t i = 0; i < a.size(); ++i) {
                    diff += std::pow(double(a[i]) - double(b[i]), 2);
                    norm += std::pow(double(a[i]), 2);
                    moved += std::pow(double(a[i]) - double(w0[i]), 2);
                }
            }
        out.push_back({std::sqrt(diff / moved), std::sqrt(diff / norm)});
    }
    return out;
}

} // namespace

TEST_CASE("K identical source copies move the trunk like one source") {
    // Without weight decay the 1/K multiplier cancels the K-fold gradient sum.
    for (std::size_t K : {2u, 3u, 5u})
        for (const auto& gap : trunk_gaps(K, 0.0, 5)) {
            CAPTURE(K);
            CHECK(gap.update_relative <= 1e-5);
        }
    // Decay is scaled by 1/K as well, so with it the trunks agree to 1e-5 of the weights only.
    for (const auto& gap : trunk_gaps(3, 0.0005, 5)) CHECK(gap.weight_relative <= 1e-5);
}

TEST_CASE("cascade selection") {
    auto with_labels = [](std::size_t labeled) {
        DomainData d;
        d.labels = data::LabelMap(1, labeled + 1, 2);
        for (std::size_t i = 0; i < labeled; ++i) d.labels.labels[i] = 1;
        return d;
    };
    CHECK(cascade_choice({with_labels(54129), with_labels(5211), with_labels(10249)}) == std::size_t{0});
    CHECK(cascade_choice({with_labels(300), with_labels(700), with_labels(100)}) == std::size_t{1});
    CHECK(cascade_choice({with_labels(300), with_labels(599)}) == std::nullopt);
    CHECK(cascade_choice({with_labels(300)}) == std::nullopt);
}

TEST_CASE("cascade runs step I on the largest domain and carries weights and momentum over") {
    const std::vector<DomainData> domains{tiny_domain("a", 4, 3, 1, 8), tiny_domain("b", 6, 2, 2, 14),
                                          tiny_domain("c", 5, 3, 3, 8)};
    auto cfg = tiny_pretrain(4);
    cfg.cascade = Cascade::on;
    cfg.cascade_schedule.total_iters = 3;

    std::vector<std::pair<std::string, nn::Tensor<float>>> init, end_of_one, begin_of_two;
    std::vector<std::vector<float>> velocity_end, velocity_begin;
    std::vector<bool> inlet_a_velocity;
    Observer obs;
    auto trunk_velocities = [](const Model& m, const SgdState<float>& s) {
        std::vector<std::vector<float>> out;
        for (const auto& mod : m.trunk.modules) {
            const auto* v = s.velocity(mod.conv_a.weight);
            out.emplace_back(v ? std::vector<float>(v->data().begin(), v->data().end()) : std::vector<float>{});
        }
        return out;
    };
    obs.stage_begin = [&](int step, const Model& m, const SgdState<float>& s) {
        if (step == 1) init = snapshot(m);
        if (step == 2) {
            begin_of_two = snapshot(m);
            velocity_begin = trunk_velocities(m, s);
            inlet_a_velocity.push_back(s.velocity(m.inlets[0].conv1.weight) != nullptr);
        }
    };
    obs.after_update = [&](int step, std::size_t iter, const Model& m, const SgdState<float>& s) {
        if (step == 1 && iter == 2) {
            end_of_one = snapshot(m);
            velocity_end = trunk_velocities(m, s);
        }
    };
    const auto r = run_pretrain(domains, cfg, obs);
    CHECK(r.cascade_domain == std::size_t{1});
    REQUIRE(r.rows.size() == 7);
    CHECK(r.rows[2].step == 1);
    CHECK(r.rows[3].step == 2);
    CHECK(r.rows[6].iter == 6);
    CHECK(same_snapshot(end_of_one, begin_of_two));
    CHECK(velocity_end == velocity_begin);
    CHECK_FALSE(velocity_begin[0].empty());
    CHECK(inlet_a_velocity == std::vector<bool>{false});

    // Step I leaves the other inlets and heads untouched.
    for (std::size_t i = 0; i < init.size(); ++i)
        if (init[i].first.starts_with("data/0/") || init[i].first.starts_with("task/2/"))
            CHECK(nn::bitwise_equal(init[i].second, end_of_one[i].second));

    cfg.cascade = Cascade::automatic;
    CHECK(run_pretrain(domains, cfg).cascade_domain == std::size_t{1});
    cfg.cascade = Cascade::off;
    const auto off = run_pretrain(domains, cfg);
    CHECK_FALSE(off.cascade_domain);
    CHECK(off.rows.size() == 4);
}

TEST_CASE("pretraining is bitwise deterministic") {
    const std::vector<DomainData> domains{tiny_domain("a", 4, 3, 1), tiny_domain("b", 6, 2, 2)};
    const auto cfg = tiny_pretrain(5);
    auto a = run_pretrain(domains, cfg);
    auto b = run_pretrain(domains, cfg);
    const CheckpointMeta meta{"pretrain", 0, 0, {}, a.iterations, cfg.seed};
    CHECK(encode_checkpoint(a.model, meta) == encode_checkpoint(b.model, meta));
    CHECK(pretrain_csv(a.rows) == pretrain_csv(b.rows));
    auto other = cfg;
    other.seed = 4;
    auto c = run_pretrain(domains, other);
    CHECK(encode_checkpoint(c.model, meta) != encode_checkpoint(a.model, meta));
}

TEST_CASE("a single source without cascade is plain mini-batch training") {
    const std::vector<DomainData> domains{tiny_domain("a", 4, 3, 1)};
    auto cfg = tiny_pretrain(3);
    cfg.cascade = Cascade::automatic;
    const auto r = run_pretrain(domains, cfg);
    CHECK_FALSE(r.cascade_domain);
    CHECK(r.model.domain_count() == 1);
    auto r2 = r.model;
    for (const auto& g : model::param_groups(r2, Phase::pretrain, 1)) CHECK(g.lr_multiplier == 1.0);
}

TEST_CASE("focal loss with gamma 0 and alpha 0.5 at twice the lr retraces softmax training") {
    const auto d = tiny_domain("t", 5, 3, 7);
    auto soft = tiny_target(Phase::scratch, 5);
    soft.loss.kind = LossConfig::Kind::softmax;
    soft.weight_decay = 0.0;
    auto focal = soft;
    focal.loss.kind = LossConfig::Kind::focal;
    focal.loss.focal = {0.0, 0.5, std::nullopt};
    focal.schedule.base_lr *= 2;
    const auto a = run_scratch(d, soft);
    const auto b = run_scratch(d, focal);
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(b.rows[i].loss == doctest::Approx(0.5 * a.rows[i].loss).epsilon(1e-6));
    const auto sa = snapshot(a.model), sb = snapshot(b.model);
    for (std::size_t i = 0; i < sa.size(); ++i) {
        double diff = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < sa[i].second.numel(); ++j) {
            diff += std::pow(double(sa[i].second[j]) - double(sb[i].second[j]), 2);
            norm += std::pow(double(sa[i].second[j]), 2);
        }
        CAPTURE(sa[i].first);
        CHECK(std::sqrt(diff) <= 1e-5 * std::sqrt(norm) + 1e-12);
    }
}

TEST_CASE("scratch training") {
    const auto d = tiny_domain("t", 5, 3, 8, 10, 4);
    const auto cfg = tiny_target(Phase::scratch, 30);
    const auto a = run_scratch(d, cfg);
    REQUIRE(a.rows.size() == 30);
    CHECK(a.iterations == 30);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        first += a.rows[i].loss;
        last += a.rows[20 + i].loss;
    }
    for (const auto& r : a.rows) {
        CHECK(std::isfinite(r.loss));
        CHECK(r.lr == 0.001);
        CHECK((r.oa >= 0.0 && r.oa <= 1.0));
    }
    CHECK(last < first);

    const auto b = run_scratch(d, cfg);
    CHECK(curve_csv(a.rows) == curve_csv(b.rows));
    CHECK(same_snapshot(snapshot(a.model), snapshot(b.model)));

    auto wrong = cfg;
    wrong.phase = Phase::finetune;
    CHECK_THROWS_AS(run_scratch(d, wrong), std::invalid_argument);
    auto bad = d;
    bad.descriptor.bands = 6;
    CHECK_THROWS_WITH_AS(run_scratch(bad, cfg), doctest::Contains("bands"), std::invalid_argument);
}

TEST_CASE("finetune transplants the trunk and rejects mismatches") {
    const std::vector<DomainData> sources{tiny_domain("a", 4, 3, 1), tiny_domain("b", 6, 2, 2)};
    const auto pre = run_pretrain(sources, tiny_pretrain(3));
    const auto target = tiny_domain("t", 7, 3, 9);

    std::vector<std::pair<std::string, nn::Tensor<float>>> start;
    Observer obs;
    obs.stage_begin = [&](int, const Model& m, const SgdState<float>&) { start = snapshot(m); };
    const auto r = run_finetune(pre.model, target, tiny_target(Phase::finetune, 4), obs);
    CHECK(r.rows.size() == 4);
    CHECK(r.model.domains[0].name == "t");
    const auto source = snapshot(pre.model);
    std::size_t compared = 0;
    for (const auto& [name, t] : start)
        if (name.starts_with("shared/"))
            for (const auto& [sname, st] : source)
                if (sname == name) {
                    CHECK(nn::bitwise_equal(t, st));
                    ++compared;
                }
    CHECK(compared == 10);  // k = 1: two convs, two BN layers of four tensors each

    auto k2 = tiny_target(Phase::finetune, 2);
    k2.k = 2;
    CHECK_THROWS_WITH_AS(run_finetune(pre.model, target, k2), doctest::Contains("k ="), std::invalid_argument);
    auto wide = tiny_target(Phase::finetune, 2);
    wide.width = 8;
    CHECK_THROWS_AS(run_finetune(pre.model, target, wide), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
    const std::vector<DomainData> sources{tiny_domain("alpha", 4, 3, 1), tiny_domain("beta", 6, 2, 2)};
    auto pre = run_pretrain(sources, tiny_pretrain(2));
    const CheckpointMeta meta{"pretrain", 0, 0, {}, 2, 3};
    const auto path = std::filesystem::temp_directory_path() / "xdhs_test_ck.bin";
    save_checkpoint(pre.model, meta, path);
    auto loaded = load_checkpoint(path);
    std::filesystem::remove(path);

    CHECK(loaded.meta.k == 1);
    CHECK(loaded.meta.width == 4);
    CHECK(loaded.meta.iteration == 2);
    CHECK(loaded.meta.seed == 3);
    CHECK(loaded.meta.phase == "pretrain");
    REQUIRE(loaded.meta.domains.size() == 2);
    CHECK(loaded.meta.domains[1].name == "beta");
    CHECK(loaded.meta.domains[1].bands == 6);
    CHECK(loaded.meta.domains[1].classes == 2);
    CHECK(same_snapshot(snapshot(pre.model), snapshot(loaded.model)));
    for (std::size_t d = 0; d < 2; ++d) {
        const auto a = model::forward_domain(pre.model, d, sources[d].cube, nn::Mode::eval);
        const auto b = model::forward_domain(loaded.model, d, sources[d].cube, nn::Mode::eval);
        CHECK(nn::bitwise_equal(a, b));
    }

    // Every trainable parameter is stored exactly once, next to every running statistic.
    std::multiset<std::string> names;
    pre.model.visit([&](const std::string& n, nn::Tensor<float>&, bool) { names.insert(n); });
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
    for (const auto* p : pre.model.parameters()) CHECK(names.count(p->name) == 1);
    const std::size_t bn_layers = 2 * 2 + 2 * 1;  // two per inlet, two per residual module
    CHECK(names.size() == pre.model.parameters().size() + 2 * bn_layers);
}

TEST_CASE("corrupted checkpoints are rejected") {
    nn::Rng rng(1);
    auto m = model::build_cross_domain<float>({{"x", 3, 2}}, 1, rng, 2);
    const auto good = encode_checkpoint(m, {"scratch", 0, 0, {}, 0, 0});
    CHECK_NOTHROW(decode_checkpoint(good));
    CHECK(good.starts_with(std::string("XDHSCK1\0", 8)));
    for (std::size_t n = 0; n < good.size(); n += 3) CHECK_THROWS_AS(decode_checkpoint(good.substr(0, n)), std::runtime_error);
    auto bad = good;
    bad[0] = 'Y';
    CHECK_THROWS_WITH_AS(decode_checkpoint(bad), doctest::Contains("magic"), std::runtime_error);
    bad = good;
    bad[8] = 2;
    CHECK_THROWS_WITH_AS(decode_checkpoint(bad), doctest::Contains("version"), std::runtime_error);
    CHECK_THROWS_AS(decode_checkpoint(good + "!"), std::runtime_error);
    CHECK_THROWS_AS(encode_checkpoint(m, {"bad\nphase", 0, 0, {}, 0, 0}), std::invalid_argument);
}

TEST_CASE("csv formats") {
    const std::vector<CurveRow> rows{{0, 0.001, 1.234567891, 0.5, 0.25, 1.0 / 3.0}};
    CHECK(curve_csv(rows) == "iter,lr,loss,oa,aa,kappa\n0,0.001,1.23457,0.5,0.25,0.333333\n");
    const std::vector<PretrainRow> pre{{7, 2, 0.01, 12345678.0}};
    CHECK(pretrain_csv(pre) == "iter,step,lr,loss\n7,2,0.01,1.23457e+07\n");
}
