#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "puckit/dataset.hpp"
#include "puckit/metrics.hpp"
#include "puckit/pipeline.hpp"

namespace puckit {

enum class FoldKind { LeaveOneGroupOut, KFold };

// Partition of the dataset into test folds. Leave-one-group-out builds one
// fold per distinct group id (ascending); k-fold deals a seeded shuffle into
// folds whose sizes differ by at most one.
struct FoldPlan {
    FoldKind kind = FoldKind::KFold;
    std::vector<std::vector<int>> test_ids;  // ascending ids within each fold
    std::vector<int> fold_keys;              // group id (LOGO) or fold index (k-fold)
};

FoldPlan build_fold_plan(const PUDataset& ds, FoldKind kind, int k, std::uint64_t seed);

struct FoldSeedMetrics {
    int fold = 0;
    std::uint64_t seed = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> ap;
};

// Macro view averages per-fold scores; micro pools the confusion matrix
// across folds first. Both are reported since fold sizes may differ.
struct GroupMetrics {
    Prf macro;
    Prf micro;
    std::optional<double> map;
};

struct SeedMetrics {
    std::uint64_t seed = 0;
    GroupMetrics metrics;
};

struct EvalReport {
    std::vector<FoldSeedMetrics> per_fold;  // fold-major, seed order within
    std::vector<SeedMetrics> per_seed;
    GroupMetrics aggregate_mean;  // over seeds
    GroupMetrics aggregate_std;   // population standard deviation over seeds
    GroupMetrics ensembled;       // per-fold majority vote across seeds
    int fold_count = 0;
    std::vector<std::uint64_t> seeds;
    bool ranking = false;
    std::vector<std::string> warnings;
};

struct ExperimentOptions {
    bool ranking = false;  // compute AP per fold and mAP across folds
    int jobs = 1;          // parallel (fold, seed) workers; output independent of N
    PipelineOptions pipeline;
};

// For each (fold, seed): train the mode on the remaining folds with pipeline
// seed derive_seed(seed, seed_tag::fold_run, fold index), predict the test
// fold, and score against truth. Per-seed scores aggregate across folds;
// mean and std aggregate across seeds; the ensembled view majority-votes the
// per-seed models on each test sample (ranking by vote count, ties by mean
// probability, then id). Errors if any sample lacks a truth label.
EvalReport run_experiment(const PUDataset& ds, const FoldPlan& plan, const TrainMode& mode,
                          const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                          const ExperimentOptions& options = {});

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

}  // namespace puckit
