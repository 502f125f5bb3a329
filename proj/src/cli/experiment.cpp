#include "xdhs/cli/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "xdhs/cli/settings.hpp"
#include "xdhs/metrics/metrics.hpp"
#include "xdhs/model/spec.hpp"
#include "xdhs/train/checkpoint.hpp"
#include "xdhs/util/binary.hpp"

namespace xdhs::cli {

namespace fs = std::filesystem;
using model::Phase;

std::size_t iterations_to_fraction(const std::vector<train::CurveRow>& rows, double fraction) {
    if (rows.empty()) throw std::invalid_argument("empty learning curve");
    const double target = fraction * rows.back().oa;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].oa >= target) return i + 1;
    return rows.size();
}

std::string summary_csv(const std::vector<ArmResult>& arms) {
    using train::format_g6;
    std::string out = "kind,k,layers,seed,arm,domain,sources,source_labeled,oa,aa,kappa,final_loss,iters_to_95\n";
    for (const auto& a : arms)
        out += a.kind + "," + std::to_string(a.k) + "," + std::to_string(a.layers) + "," + std::to_string(a.seed) +
               "," + a.arm + "," + a.domain + "," + a.sources + "," + std::to_string(a.source_labeled) + "," +
               format_g6(a.oa) + "," + format_g6(a.aa) + "," + format_g6(a.kappa) + "," + format_g6(a.final_loss) +
               "," + std::to_string(a.iters_to_95) + "\n";
    return out;
}

namespace {

using Progress = std::function<void(const std::string&)>;

std::size_t layers_for(std::size_t k) { return model::conv_depth(model::backbone_spec(1, 2, k)); }

std::string join(const std::vector<std::string>& names, char sep) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : std::string(1, sep)) + n;
    return out;
}

std::vector<train::DomainData> build_all(const Config& c, const std::vector<std::string>& names, std::uint64_t seed) {
    std::vector<train::DomainData> out;
    for (const auto& n : names) out.push_back(build_domain(domain_setup(c, n, seed)));
    return out;
}

void save(train::Model& m, const std::string& phase, std::size_t iterations, std::uint64_t seed, const fs::path& path) {
    train::CheckpointMeta meta;
    meta.phase = phase;
    meta.iteration = iterations;
    meta.seed = seed;
    train::save_checkpoint(m, meta, path);
}

// Test-split metrics of one head.
metrics::MetricsReport test_metrics(train::Model& m, std::size_t head, const train::DomainData& d) {
    if (d.split.test.empty())
        throw std::invalid_argument("domain '" + d.descriptor.name + "' has no test pixels; set per_class");
    return metrics::evaluate(m, head, d.cube, d.labels, d.split.test);
}

ArmResult target_arm(const std::string& kind, std::size_t k, std::uint64_t seed, const std::string& arm,
                     train::TargetResult& r, const train::DomainData& target) {
    const auto rep = test_metrics(r.model, 0, target);
    ArmResult a;
    a.kind = kind;
    a.k = k;
    a.layers = layers_for(k);
    a.seed = seed;
    a.arm = arm;
    a.domain = target.descriptor.name;
    a.oa = rep.oa;
    a.aa = rep.aa;
    a.kappa = rep.kappa;
    a.final_loss = r.rows.back().loss;
    if (!std::isnan(r.rows.back().oa)) a.iters_to_95 = iterations_to_fraction(r.rows);
    return a;
}

// Pretrain on `sources`, then finetune and scratch on the target; files go to `dir`.
void transfer(const Config& c, const std::string& kind, const std::vector<std::string>& sources, std::size_t k,
              std::uint64_t seed, const fs::path& dir, std::vector<ArmResult>& arms, const Progress& progress,
              bool with_scratch = true) {
    fs::create_directories(dir);
    const auto source_data = build_all(c, sources, seed);
    const auto target = build_domain(domain_setup(c, c.text("target"), seed));
    std::size_t labeled = 0;
    for (const auto& d : source_data) labeled += d.split.train.size();

    auto pc = pretrain_config(c, seed);
    pc.k = k;
    pc.cascade_first = cascade_first_index(c, sources);
    auto pre = train::run_pretrain(source_data, pc);
    io::write_file_atomic(dir / "pretrain.csv", train::pretrain_csv(pre.rows));
    save(pre.model, "pretrain", pre.iterations, seed, dir / "pretrain.ckpt");

    auto fc = target_config(c, Phase::finetune, seed);
    fc.k = k;
    auto fine = train::run_finetune(pre.model, target, fc);
    io::write_file_atomic(dir / "finetune.csv", train::curve_csv(fine.rows));
    save(fine.model, "finetune", fine.iterations, seed, dir / "finetune.ckpt");

    auto fine_arm = target_arm(kind, k, seed, "finetune", fine, target);
    fine_arm.sources = join(sources, '+');
    fine_arm.source_labeled = labeled;
    arms.push_back(fine_arm);
    std::string line = dir.filename().string() + ": finetune OA " + metrics::percent(fine_arm.oa);

    if (with_scratch) {
        auto sc = target_config(c, Phase::scratch, seed);
        sc.k = k;
        auto scratch = train::run_scratch(target, sc);
        io::write_file_atomic(dir / "scratch.csv", train::curve_csv(scratch.rows));
        save(scratch.model, "scratch", scratch.iterations, seed, dir / "scratch.ckpt");
        arms.push_back(target_arm(kind, k, seed, "scratch", scratch, target));
        line += " scratch OA " + metrics::percent(arms.back().oa);
    }
    if (pre.cascade_domain) line += " (cascade from " + sources[*pre.cascade_domain] + ")";
    if (progress) progress(line);
}

std::vector<std::vector<std::string>> source_sets(const Config& c) {
    std::vector<std::vector<std::string>> sets;
    std::istringstream in(c.text("experiment.source_sets"));
    for (std::string item; std::getline(in, item, ';');) {
        std::vector<std::string> set;
        std::istringstream names(item);
        for (std::string n; std::getline(names, n, '+');) {
            const auto b = n.find_first_not_of(" \t");
            if (b == std::string::npos) throw std::invalid_argument("experiment.source_sets: empty domain name");
            set.push_back(n.substr(b, n.find_last_not_of(" \t") - b + 1));
        }
        if (set.empty()) throw std::invalid_argument("experiment.source_sets: empty set");
        sets.push_back(set);
    }
    if (sets.empty()) throw std::invalid_argument("experiment.source_sets: no sets");
    return sets;
}

void joint(const Config& c, std::uint64_t seed, const fs::path& dir, std::vector<ArmResult>& arms,
           const Progress& progress) {
    fs::create_directories(dir);
    const auto names = c.list("experiment.domains");
    const auto domains = build_all(c, names, seed);
    auto pc = pretrain_config(c, seed);
    const auto k = pc.k;
    auto arm = [&](const std::string& label, std::size_t d, const metrics::MetricsReport& rep, double loss,
                   const std::string& sources) {
        ArmResult a;
        a.kind = "joint";
        a.k = k;
        a.layers = layers_for(k);
        a.seed = seed;
        a.arm = label;
        a.domain = names[d];
        a.sources = sources;
        a.oa = rep.oa;
        a.aa = rep.aa;
        a.kappa = rep.kappa;
        a.final_loss = loss;
        return a;
    };

    auto solo = pc;
    solo.cascade = train::Cascade::off;
    solo.cascade_first.reset();
    for (std::size_t d = 0; d < domains.size(); ++d) {
        auto r = train::run_pretrain({domains[d]}, solo);
        io::write_file_atomic(dir / ("individual_" + names[d] + ".csv"), train::pretrain_csv(r.rows));
        save(r.model, "pretrain", r.iterations, seed, dir / ("individual_" + names[d] + ".ckpt"));
        auto a = arm("individual", d, test_metrics(r.model, 0, domains[d]), r.rows.back().loss, names[d]);
        a.source_labeled = domains[d].split.train.size();
        arms.push_back(a);
    }

    pc.cascade_first = cascade_first_index(c, names);
    auto all = train::run_pretrain(domains, pc);
    io::write_file_atomic(dir / "cross_domain.csv", train::pretrain_csv(all.rows));
    save(all.model, "pretrain", all.iterations, seed, dir / "cross_domain.ckpt");
    std::size_t labeled = 0;
    for (const auto& d : domains) labeled += d.split.train.size();
    for (std::size_t d = 0; d < domains.size(); ++d) {
        auto a = arm("cross_domain", d, test_metrics(all.model, d, domains[d]), all.rows.back().loss, join(names, '+'));
        a.source_labeled = labeled;
        arms.push_back(a);
    }
    if (progress) progress(dir.filename().string() + ": " + std::to_string(domains.size()) + " domains done");
}

} // namespace

ExperimentReport run_experiment(const Config& c, const fs::path& out_dir, const Progress& progress) {
    if (!fs::is_directory(out_dir)) throw std::invalid_argument("output directory '" + out_dir.string() + "' missing");
    ExperimentReport report;
    report.kind = c.text("experiment.kind");
    const auto seeds = c.has("experiment.seeds") ? c.integers("experiment.seeds")
                                                 : std::vector<std::uint64_t>{c.integer("seed", 0)};
    const auto k = c.integer("model.k", 3);
    auto tag = [](std::uint64_t s) { return "seed" + std::to_string(s); };

    if (report.kind == "transfer") {
        const auto sources = c.list("sources");
        for (auto s : seeds) transfer(c, "transfer", sources, k, s, out_dir / tag(s), report.arms, progress);
    } else if (report.kind == "depth") {
        const auto sources = c.list("sources");
        for (auto kk : c.integers("experiment.k_values"))
            for (auto s : seeds)
                transfer(c, "depth", sources, kk, s, out_dir / ("k" + std::to_string(kk) + "_" + tag(s)), report.arms,
                         progress);
    } else if (report.kind == "sources") {
        // The scratch baseline does not depend on the sources; it runs with the first set only.
        const auto sets = source_sets(c);
        for (std::size_t i = 0; i < sets.size(); ++i)
            for (auto s : seeds)
                transfer(c, "sources", sets[i], k, s, out_dir / (join(sets[i], '+') + "_" + tag(s)), report.arms,
                         progress, i == 0);
    } else if (report.kind == "joint") {
        for (auto s : seeds) joint(c, s, out_dir / tag(s), report.arms, progress);
    } else {
        throw std::invalid_argument("experiment.kind: expected transfer, depth, sources or joint, got '" +
                                    report.kind + "'");
    }
    io::write_file_atomic(out_dir / "summary.csv", summary_csv(report.arms));
    return report;
}

std::string describe(const ExperimentReport& report) {
    struct Acc {
        double oa = 0, aa = 0, kappa = 0;
        std::size_t n = 0;
    };
    std::map<std::tuple<std::size_t, std::string, std::string, std::string>, Acc> groups;
    std::vector<std::tuple<std::size_t, std::string, std::string, std::string>> order;
    for (const auto& a : report.arms) {
        const auto key = std::make_tuple(a.k, a.arm, a.sources, a.domain);
        if (!groups.contains(key)) order.push_back(key);
        auto& g = groups[key];
        g.oa += a.oa;
        g.aa += a.aa;
        g.kappa += a.kappa;
        ++g.n;
    }
    std::string out;
    for (const auto& key : order) {
        const auto& g = groups[key];
        const auto& [k, arm, sources, domain] = key;
        out += "k=" + std::to_string(k) + " " + arm + " on " + domain + (sources.empty() ? "" : " from " + sources) +
               ": OA " + metrics::percent(g.oa / g.n) + " AA " + metrics::percent(g.aa / g.n) + " kappa " +
               metrics::percent(g.kappa / g.n) + " (" + std::to_string(g.n) + (g.n == 1 ? " run)\n" : " runs)\n");
    }
    return out;
}

} // namespace xdhs::cli
