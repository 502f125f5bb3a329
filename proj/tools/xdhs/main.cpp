// xdhs command-line driver.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xdhs/cli/config.hpp"
#include "xdhs/cli/experiment.hpp"
#include "xdhs/cli/settings.hpp"
#include "xdhs/data/io.hpp"
#include "xdhs/data/split.hpp"
#include "xdhs/metrics/metrics.hpp"
#include "xdhs/model/spec.hpp"
#include "xdhs/train/checkpoint.hpp"
#include "xdhs/train/runs.hpp"
#include "xdhs/util/binary.hpp"

namespace fs = std::filesystem;
using namespace xdhs;

namespace {

// Files created by the running command; removed unless commit() is called.
class Outputs {
public:
    explicit Outputs(bool force) : force_(force) {}
    ~Outputs() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = created_.rbegin(); it != created_.rend(); ++it) fs::remove_all(*it, ec);
    }

    // Rejects an existing path unless --force; the path is cleaned up on failure.
    fs::path claim(const fs::path& path) {
        if (fs::exists(path)) {
            if (!force_) throw std::runtime_error("'" + path.string() + "' exists (use --force to overwrite)");
            fs::remove_all(path);
        }
        created_.push_back(path);
        return path;
    }
    void commit() { committed_ = true; }

private:
    bool force_;
    bool committed_ = false;
    std::vector<fs::path> created_;
};

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool force = false;

    cli::Config load() const {
        auto c = config.empty() ? cli::Config{} : cli::Config::load(config);
        for (const auto& s : sets) c.set(s);
        if (seed) c.set("seed", std::to_string(*seed));
        return c;
    }
};

void add_common(CLI::App* cmd, Common& common, bool config_required = true) {
    auto* opt = cmd->add_option("--config", common.config, "Config file (key = value)");
    if (config_required) opt->required();
    cmd->add_option("--set", common.sets, "Override a config key (key=value), repeatable");
    cmd->add_option("--seed", common.seed, "Override the config seed");
    cmd->add_flag("--force", common.force, "Overwrite existing outputs");
}

std::string counts_line(const data::LabelMap& labels) {
    const auto counts = labels.class_counts();
    std::string per;
    for (std::size_t c = 1; c < counts.size(); ++c) per += (c > 1 ? " " : "") + std::to_string(counts[c]);
    return "labeled " + std::to_string(labels.labeled_count()) + " [" + per + "]";
}

void gen_synthetic(const Common& common, const fs::path& out_dir) {
    const auto c = common.load();
    const auto names = c.domain_names();
    if (names.empty()) throw std::invalid_argument("config defines no domain.<name>.* keys");
    const auto seed = c.integer("seed", 0);
    Outputs out(common.force);
    if (!fs::exists(out_dir)) out.claim(out_dir);
    fs::create_directories(out_dir);

    std::vector<cli::DomainSetup> setups;
    for (const auto& n : names) {
        setups.push_back(cli::domain_setup(c, n, seed));
        out.claim(cli::cube_path(out_dir, n));
        out.claim(cli::labels_path(out_dir, n));
        out.claim(cli::split_path(out_dir, n));
    }
    for (const auto& s : setups) {
        const auto& n = s.spec.descriptor.name;
        const auto g = data::gen_synthetic(s.spec);
        const auto split = cli::setup_split(s, g.labels);
        data::write_hsc(g.cube, cli::cube_path(out_dir, n));
        data::write_hsl(g.labels, cli::labels_path(out_dir, n));
        data::write_split(split, cli::split_path(out_dir, n));
        std::printf("%s: %zux%zux%zu, %zu classes, %s, train %zu, test %zu\n", n.c_str(), g.cube.height,
                    g.cube.width, g.cube.bands, s.spec.descriptor.classes, counts_line(g.labels).c_str(),
                    split.train.size(), split.test.size());
    }
    out.commit();
}

void make_split_cmd(const Common& common, const fs::path& data_dir, const std::string& name,
                    std::optional<std::size_t> per_class, std::string out_path) {
    const auto c = common.load();
    auto setup = cli::domain_setup(c, name, c.integer("seed", 0));
    if (per_class) setup.per_class = per_class;
    const auto labels = data::read_hsl(cli::labels_path(data_dir, name));
    const fs::path path = out_path.empty() ? cli::split_path(data_dir, name) : fs::path(out_path);
    Outputs out(common.force);
    out.claim(path);
    const auto split = cli::setup_split(setup, labels);
    data::write_split(split, path);
    std::printf("%s: train %zu, test %zu -> %s\n", name.c_str(), split.train.size(), split.test.size(),
                path.string().c_str());
    out.commit();
}

void save(train::Model& m, const std::string& phase, std::size_t iterations, std::uint64_t seed,
          const fs::path& path) {
    train::CheckpointMeta meta;
    meta.phase = phase;
    meta.iteration = iterations;
    meta.seed = seed;
    train::save_checkpoint(m, meta, path);
}

void pretrain(const Common& common, const fs::path& data_dir, const fs::path& ckpt, const fs::path& csv) {
    const auto c = common.load();
    const auto seed = c.integer("seed", 0);
    const auto names = c.list("sources");
    auto cfg = cli::pretrain_config(c, seed);
    std::vector<train::DomainData> domains;
    for (const auto& n : names) domains.push_back(cli::load_configured(c, data_dir, n));

    Outputs out(common.force);
    out.claim(ckpt);
    out.claim(csv);
    auto r = train::run_pretrain(domains, cfg);
    if (r.cascade_domain)
        std::printf("cascade: step I on '%s' (%zu labeled) for %zu iterations, then all %zu domains\n",
                    names[*r.cascade_domain].c_str(), domains[*r.cascade_domain].labels.labeled_count(),
                    cfg.cascade_schedule.total_iters, domains.size());
    else
        std::printf("cascade: off, all %zu domains from the start\n", domains.size());
    io::write_file_atomic(csv, train::pretrain_csv(r.rows));
    save(r.model, "pretrain", r.iterations, seed, ckpt);
    std::printf("pretrain: %zu iterations, final loss %s\n", r.iterations, train::format_g6(r.rows.back().loss).c_str());
    out.commit();
}

void train_target(const Common& common, model::Phase phase, const fs::path& data_dir, const fs::path& from,
                  const fs::path& ckpt, const fs::path& csv) {
    const auto c = common.load();
    const auto seed = c.integer("seed", 0);
    const auto cfg = cli::target_config(c, phase, seed);
    const auto target = cli::load_configured(c, data_dir, c.text("target"));
    std::optional<train::Checkpoint> pre;
    if (phase == model::Phase::finetune) pre = train::load_checkpoint(from);

    Outputs out(common.force);
    out.claim(ckpt);
    out.claim(csv);
    auto r = phase == model::Phase::finetune ? train::run_finetune(pre->model, target, cfg)
                                             : train::run_scratch(target, cfg);
    io::write_file_atomic(csv, train::curve_csv(r.rows));
    save(r.model, model::to_string(phase), r.iterations, seed, ckpt);
    const auto& last = r.rows.back();
    if (cfg.log_eval)
        std::printf("%s: %zu iterations, OA %s AA %s kappa %s\n", model::to_string(phase).c_str(), r.iterations,
                    metrics::percent(last.oa).c_str(), metrics::percent(last.aa).c_str(),
                    metrics::percent(last.kappa).c_str());
    else
        std::printf("%s: %zu iterations, final loss %s\n", model::to_string(phase).c_str(), r.iterations,
                    train::format_g6(last.loss).c_str());
    out.commit();
}

void evaluate(const Common& common, const fs::path& data_dir, const fs::path& ckpt, std::string domain,
              const std::string& pixels, const std::string& out_path) {
    const auto c = common.load();
    auto cp = train::load_checkpoint(ckpt);
    const auto& shapes = cp.model.domains;
    std::size_t head = 0;
    if (domain.empty()) {
        if (shapes.size() != 1) throw std::invalid_argument("checkpoint has several heads; pass --domain");
        domain = shapes[0].name;
    } else {
        head = shapes.size();
        for (std::size_t i = 0; i < shapes.size(); ++i)
            if (shapes[i].name == domain) head = i;
        if (head == shapes.size()) throw std::invalid_argument("checkpoint has no head named '" + domain + "'");
    }
    const auto d = cli::load_configured(c, data_dir, domain);
    std::vector<data::Pixel> set;
    if (pixels == "test")
        set = d.split.test;
    else if (pixels == "train")
        set = d.split.train;
    else if (pixels == "all")
        set = data::labeled_pixels(d.labels);
    else
        throw std::invalid_argument("--pixels: expected test, train or all");
    if (set.empty()) throw std::invalid_argument("no " + pixels + " pixels for domain '" + domain + "'");

    const auto r = metrics::evaluate(cp.model, head, d.cube, d.labels, set);
    const auto text = metrics::to_text(r);
    if (out_path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        Outputs out(common.force);
        out.claim(out_path);
        io::write_file_atomic(out_path, text);
        out.commit();
    }
    std::fprintf(stderr, "%s (%s, %zu pixels): OA %s AA %s kappa %s\n", domain.c_str(), pixels.c_str(), r.n,
                 metrics::percent(r.oa).c_str(), metrics::percent(r.aa).c_str(), metrics::percent(r.kappa).c_str());
}

void experiment(const Common& common, const fs::path& out_dir) {
    const auto c = common.load();
    Outputs out(common.force);
    out.claim(out_dir);
    fs::create_directories(out_dir);
    const auto report = cli::run_experiment(c, out_dir, [](const std::string& line) {
        std::fprintf(stderr, "%s\n", line.c_str());
    });
    std::fputs(cli::describe(report).c_str(), stdout);
    out.commit();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-domain hyperspectral CNN: pretrain, finetune, evaluate"};
    app.require_subcommand(1);
    Common common;

    std::string out_dir, data_dir, ckpt, csv, from, domain, out_path, pixels = "test";
    std::optional<std::size_t> per_class;

    auto* gen = app.add_subcommand("gen-synthetic", "Write synthetic domains (.hsc/.hsl/.split)");
    add_common(gen, common);
    gen->add_option("--out-dir", out_dir, "Output directory")->required();
    gen->callback([&] { gen_synthetic(common, out_dir); });

    auto* split = app.add_subcommand("split", "Draw a train/test split for one domain");
    add_common(split, common);
    split->add_option("--data-dir", data_dir, "Directory with <domain>.hsl")->required();
    split->add_option("--domain", domain, "Domain name")->required();
    split->add_option("--per-class", per_class, "Training pixels per class (default from config)");
    split->add_option("--out", out_path, "Split file (default <data-dir>/<domain>.split)");
    split->callback([&] { make_split_cmd(common, data_dir, domain, per_class, out_path); });

    auto* pre = app.add_subcommand("pretrain", "Train the cross-domain model on the source domains");
    add_common(pre, common);
    pre->add_option("--data-dir", data_dir, "Directory with domain files")->required();
    pre->add_option("--checkpoint", ckpt, "Output checkpoint")->required();
    pre->add_option("--csv", csv, "Output loss CSV")->required();
    pre->callback([&] { pretrain(common, data_dir, ckpt, csv); });

    auto* fine = app.add_subcommand("finetune", "Finetune a pretrained trunk on the target domain");
    add_common(fine, common);
    fine->add_option("--data-dir", data_dir, "Directory with domain files")->required();
    fine->add_option("--from", from, "Pretrained checkpoint")->required();
    fine->add_option("--checkpoint", ckpt, "Output checkpoint")->required();
    fine->add_option("--csv", csv, "Output learning-curve CSV")->required();
    fine->callback([&] { train_target(common, model::Phase::finetune, data_dir, from, ckpt, csv); });

    auto* scratch = app.add_subcommand("train-scratch", "Train a backbone on the target domain from scratch");
    add_common(scratch, common);
    scratch->add_option("--data-dir", data_dir, "Directory with domain files")->required();
    scratch->add_option("--checkpoint", ckpt, "Output checkpoint")->required();
    scratch->add_option("--csv", csv, "Output learning-curve CSV")->required();
    scratch->callback([&] { train_target(common, model::Phase::scratch, data_dir, from, ckpt, csv); });

    auto* eval = app.add_subcommand("evaluate", "OA/AA/kappa of a checkpoint on one domain");
    add_common(eval, common);
    eval->add_option("--data-dir", data_dir, "Directory with domain files")->required();
    eval->add_option("--checkpoint", ckpt, "Checkpoint")->required();
    eval->add_option("--domain", domain, "Head / domain name (default: the only head)");
    eval->add_option("--pixels", pixels, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
    eval->add_option("--out", out_path, "Write the metrics text here instead of stdout");
    eval->callback([&] { evaluate(common, data_dir, ckpt, domain, pixels, out_path); });

    std::string arch = "backbone";
    std::size_t h = 0, w = 0, bands = 0, classes = 0, k = 3, width = model::kHiddenWidth;
    auto* fl = app.add_subcommand("flops", "Multiply and add count of one forward pass");
    fl->add_option("--arch", arch, "backbone or contextual")->check(CLI::IsMember({"backbone", "contextual"}));
    fl->add_option("--H", h, "Image height")->required();
    fl->add_option("--W", w, "Image width")->required();
    fl->add_option("--bands", bands, "Spectral bands")->required();
    fl->add_option("--classes", classes, "Classes")->required();
    fl->add_option("--k", k, "Residual modules");
    fl->add_option("--width", width, "Hidden width (backbone only)");
    fl->callback([&] {
        const auto specs = arch == "backbone" ? model::backbone_spec(bands, classes, k, width)
                                              : model::contextual_spec(bands, classes, k);
        std::printf("%llu\n", static_cast<unsigned long long>(model::flops(specs, h, w)));
    });

    auto* exp = app.add_subcommand("experiment", "Run a bundled experiment config end to end");
    add_common(exp, common);
    exp->add_option("--out-dir", out_dir, "Output directory (must not exist unless --force)")->required();
    exp->callback([&] { experiment(common, out_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "xdhs: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
