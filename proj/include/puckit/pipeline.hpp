#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "puckit/classifier.hpp"
#include "puckit/dataset.hpp"
#include "puckit/pu.hpp"

namespace puckit {

enum class ModeTag { PN, PU, PUC };

std::string mode_name(ModeTag tag);
ModeTag mode_from_name(const std::string& name);

struct TrainMode {
    ModeTag tag = ModeTag::PN;
    // Optional source model whose body warm-starts g; the head is redrawn.
    std::shared_ptr<const ProbClassifier> transfer_source;
    std::optional<ModeTag> transfer_source_tag;
};

struct PipelineOptions {
    double train_ratio = 0.8;  // train share of the train/validation split
    // Oracle label frequency for synthetic diagnostics; skips Eq.-2 estimation.
    std::optional<double> known_c;
    // Exact initial parameters for g (body donor with head already redrawn).
    const ProbClassifier* warm_start = nullptr;
};

// Seed flow within one pipeline run (all derived from cfg.seed): the split
// uses seed_tag::split, f training seed_tag::train_f, g training
// seed_tag::train_g. PN shares the g stream with PU/PUC so that the c=1
// degenerate case produces identical models across modes.

struct PnResult {
    ProbClassifier g;
    SplitSpec split;
    std::vector<std::string> warnings;
};

struct PuResult {
    ProbClassifier f;
    ProbClassifier g;
    PuEstimates est;  // c, prior and weights over the whole input dataset
    SplitSpec split;
    std::vector<std::string> warnings;
};

struct PucResult {
    ProbClassifier f;
    ProbClassifier g;
    PuEstimates est;
    ConvertedDataset conv;  // conversion over the whole input dataset
    SplitSpec split;
    std::vector<std::string> warnings;
};

// g trained directly on (x, s) with unit weights.
PnResult train_pn(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts = {});

// f on (x, s) over the train split; c from validation positives; estimates
// and weights over the full dataset; g on the duplicate-and-weight rows of
// the train split. Rows whose weight is exactly zero are dropped from g's
// stream (they contribute nothing to the objective, and keeping them would
// perturb batch boundaries).
PuResult train_pu(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts = {});

// As train_pu, then conversion: converted ids train as weight-1 positives,
// remaining unlabelled keep the duplicated pair treatment. Validation rows
// never enter g's stream even when converted.
PucResult train_puc(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts = {});

// Uniform wrapper over the three modes, honouring mode.transfer_source.
struct ModeRun {
    ProbClassifier g;
    std::optional<ProbClassifier> f;
    std::optional<PuEstimates> est;
    std::optional<ConvertedDataset> conv;
    SplitSpec split;
    std::vector<std::string> warnings;
};

ModeRun run_mode(const PUDataset& ds, const TrainMode& mode, const TrainConfig& cfg,
                 const PipelineOptions& opts = {});

// Pretrain on source, copy the body, redraw the head, train on target.
// Feature dimensions must match exactly; there is no implicit projection.
struct TransferResult {
    ModeRun source;
    ProbClassifier warm_start;  // exact initial parameters of the target g
    ModeRun target;
};

TransferResult pretrain_finetune(const PUDataset& source, const PUDataset& target,
                                 const TrainMode& source_mode, const TrainMode& target_mode,
                                 const TrainConfig& cfg);

// Majority vote at threshold 0.5; an exact tie resolves to positive.
struct EnsembleModel {
    std::vector<ProbClassifier> members;
    double threshold = 0.5;
};

int ensemble_predict(const EnsembleModel& e, std::span<const double> x);

}  // namespace puckit
