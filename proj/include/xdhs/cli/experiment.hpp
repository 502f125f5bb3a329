#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xdhs/cli/config.hpp"
#include "xdhs/train/runs.hpp"

namespace xdhs::cli {

// One trained model in an experiment, reduced to its final numbers.
struct ArmResult {
    std::string kind;
    std::size_t k = 0;
    std::size_t layers = 0;  // conv layers of the backbone
    std::uint64_t seed = 0;
    std::string arm;          // finetune, scratch, individual, cross_domain
    std::string domain;       // evaluated domain
    std::string sources;      // source domains joined by '+', empty when none
    std::size_t source_labeled = 0;
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    double final_loss = 0.0;
    std::size_t iters_to_95 = 0;  // 0 when no learning curve was logged
};

struct ExperimentReport {
    std::string kind;
    std::vector<ArmResult> arms;
};

// Iterations (1-based) until the test OA first reaches `fraction` of its final value.
std::size_t iterations_to_fraction(const std::vector<train::CurveRow>& rows, double fraction = 0.95);

// Header kind,k,layers,seed,arm,domain,sources,source_labeled,oa,aa,kappa,final_loss,iters_to_95.
std::string summary_csv(const std::vector<ArmResult>& arms);

// Runs the experiment named by `experiment.kind`:
//   transfer  pretrain on `sources`, then finetune and scratch on `target`, per seed
//   depth     transfer for every k in `experiment.k_values`
//   sources   transfer from each `;`-separated set in `experiment.source_sets`,
//             with one scratch baseline per seed
//   joint     every domain in `experiment.domains` trained alone and all together
// Writes summary.csv plus per-run CSVs and checkpoints under `out_dir`, which must exist.
// `progress` receives one line per finished run.
ExperimentReport run_experiment(const Config& config, const std::filesystem::path& out_dir,
                                const std::function<void(const std::string&)>& progress = {});

// Human-readable means per (k, arm, sources, domain), percent formatted.
std::string describe(const ExperimentReport& report);

} // namespace xdhs::cli
