#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xdhs/data/split.hpp"
#include "xdhs/data/types.hpp"
#include "xdhs/nn/ops.hpp"
#include "xdhs/train/checkpoint.hpp"
#include "xdhs/train/optim.hpp"

namespace xdhs::train {

// One loaded domain: image, labels and its train/test split.
struct DomainData {
    data::DomainDescriptor descriptor;
    data::HyperCube cube;
    data::LabelMap labels;
    data::Split split;

    // Throws if the cube, labels, split and descriptor disagree.
    void validate() const;
    model::DomainShape shape() const { return {descriptor.name, descriptor.bands, descriptor.classes}; }
};

// Reads .hsc/.hsl/split files and standardizes the cube band by band.
DomainData load_domain(const data::DomainDescriptor& descriptor, const std::filesystem::path& cube,
                       const std::filesystem::path& labels, const std::filesystem::path& split);

struct LossConfig {
    enum class Kind { softmax, focal };
    Kind kind = Kind::softmax;
    nn::FocalParams focal;
};

enum class Cascade { off, on, automatic };

struct TrainConfig {
    model::Phase phase = model::Phase::pretrain;
    std::size_t k = 3;
    std::size_t width = model::kHiddenWidth;
    Schedule schedule;
    std::optional<std::size_t> batch;  // absent = every training pixel each iteration
    LossConfig loss;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    bool augment = true;
    std::uint64_t seed = 0;

    // Pretraining only.
    Cascade cascade = Cascade::automatic;
    std::optional<std::size_t> cascade_first;  // domain for step I; default the largest
    Schedule cascade_schedule{0.01, 0.1, std::nullopt, 1000};

    // Target runs only: test-set metrics after every iteration.
    bool log_eval = true;

    // 0.01 for 2000 iterations, 256-pixel mini-batches, softmax loss, automatic cascade.
    static TrainConfig pretrain_defaults();
    // 0.001 for 100 iterations, full batch, focal loss (gamma 5, alpha 0.25).
    static TrainConfig target_defaults(model::Phase phase);

    void validate() const;
};

struct PretrainRow {
    std::size_t iter = 0;  // counts across both cascade steps
    int step = 0;          // 1 = cascade step I, 2 = all domains
    double lr = 0.0;
    double loss = 0.0;
};

// Metrics are evaluated on the test split after the update of iteration `iter`;
// `loss` is the training loss of the forward pass before that update.
struct CurveRow {
    std::size_t iter = 0;
    double lr = 0.0;
    double loss = 0.0;
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
};

// Called at the start of each stage and after every update.
struct Observer {
    std::function<void(int step, const Model&, const SgdState<float>&)> stage_begin;
    std::function<void(int step, std::size_t iter, const Model&, const SgdState<float>&)> after_update;
};

struct PretrainResult {
    Model model;
    std::vector<PretrainRow> rows;
    std::optional<std::size_t> cascade_domain;  // set when step I ran
    std::size_t iterations = 0;
};

struct TargetResult {
    Model model;
    std::vector<CurveRow> rows;
    std::size_t iterations = 0;
};

// Largest domain by labeled-pixel count, when it has at least twice the second largest.
std::optional<std::size_t> cascade_choice(const std::vector<DomainData>& domains);

PretrainResult run_pretrain(const std::vector<DomainData>& domains, const TrainConfig& config,
                            const Observer& observer = {});

// Transplants the trunk of `pretrained` into a fresh backbone for `target` and trains it.
TargetResult run_finetune(const Model& pretrained, const DomainData& target, const TrainConfig& config,
                          const Observer& observer = {});

TargetResult run_scratch(const DomainData& target, const TrainConfig& config, const Observer& observer = {});

// Header iter,step,lr,loss.
std::string pretrain_csv(const std::vector<PretrainRow>& rows);
// Header iter,lr,loss,oa,aa,kappa.
std::string curve_csv(const std::vector<CurveRow>& rows);
// 6 significant digits, as used in the CSV files.
std::string format_g6(double v);

} // namespace xdhs::train
