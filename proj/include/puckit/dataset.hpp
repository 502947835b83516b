#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace puckit {

// One observation: features, the labelled indicator s, and (for synthetic or
// annotated data) the hidden ground truth y. s = 1 implies the sample is a
// known positive; s = 0 means the label is unknown, not negative.
struct Sample {
    int id = 0;
    std::vector<double> features;
    int s = 0;
    std::optional<int> truth;
    std::optional<int> group;  // fold group for leave-one-group-out evaluation
};

struct PUDataset {
    std::vector<Sample> samples;
    int dim = 0;

    int size() const { return static_cast<int>(samples.size()); }
    int labelled_count() const;
    bool has_truth() const;  // true when every sample carries a truth label

    // Enforces: uniform feature arity, ids contiguous from 0, s and truth in
    // {0,1}, and s = 1 => truth = 1 where truth is present.
    void validate() const;
};

// Disjoint train/validation id sets covering the dataset exactly once.
struct SplitSpec {
    std::vector<int> train_ids;  // ascending
    std::vector<int> val_ids;    // ascending
    std::uint64_t seed = 0;
};

// Synthetic SCAR generator configuration: two class-conditional Gaussians
// with shared diagonal variance, a true class prior, and a true label
// frequency c* = p(s=1 | y=1).
struct ScarConfig {
    int n = 0;
    double prior = 0.5;
    double label_freq = 1.0;
    int dim = 2;
    std::vector<double> mean_pos;
    std::vector<double> mean_neg;
    std::vector<double> var;  // shared diagonal variance, one entry per dimension
    std::uint64_t seed = 0;

    void validate() const;
};

enum class FileFormat { Csv, Jsonl };

// CSV schema: header "id,label[,truth],f0..f{d-1}". JSONL: one object per
// line with "id", "label", "features" and optional "truth" and "group".
PUDataset load_dataset(const std::string& path, FileFormat format);
void save_dataset_csv(const PUDataset& ds, const std::string& path);
void save_dataset_jsonl(const PUDataset& ds, const std::string& path);

// Seeded shuffle, |train| = round(ratio * k). When require_labelled_val is
// set and the plain shuffle leaves validation without a labelled sample,
// retries with a draw stratified on s; errors if the dataset has no labelled
// sample at all. Label-frequency estimation needs a labelled validation
// sample, so the PU pipelines keep the flag on.
SplitSpec split_train_val(const PUDataset& ds, double ratio, std::uint64_t seed,
                          bool require_labelled_val = true);

// Draw order per sample (documented so runs are reproducible from the seed
// alone): y ~ Bernoulli(prior), then dim normals for the features, then
// s ~ Bernoulli(label_freq) if y = 1. Truth is always populated.
PUDataset generate_scar(const ScarConfig& cfg);

// Closed-form p(y=1 | x) for the generator's Gaussians; the Bayes-optimal
// scorer used as an oracle against trained models.
double scar_posterior(const ScarConfig& cfg, std::span<const double> x);

// New dataset from the given rows, renumbered contiguously in the given
// order. Original ids are recoverable through the ids argument.
PUDataset subset(const PUDataset& ds, std::span<const int> ids);

}  // namespace puckit
