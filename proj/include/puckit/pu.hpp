#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "puckit/classifier.hpp"
#include "puckit/dataset.hpp"

namespace puckit {

// Core PU quantities derived from a labelling model f and its estimated
// label frequency c = p(s=1 | y=1). Functions below come in two flavours: a
// probability-injected form (probs indexed by sample id) used by tests and
// oracles, and a classifier convenience overload.

// Estimated label frequency: mean confidence of f on known positives,
// clamped to [1e-4, 1]. Errors on an empty positive set.
double estimate_c(std::span<const double> probs_on_positives);

// Mean of predict_proba over the s=1 samples among val_ids.
double estimate_c(const ProbClassifier& f, const PUDataset& ds, std::span<const int> val_ids);

// w(x) = p(y=1 | x, s=0) = ((1-c)/c) * (p_s/(1-p_s)). The raw form can
// exceed 1 when f is over-confident relative to c; pu_weight clamps to
// [0,1] since w denotes a probability. Raw values drive the conversion
// ranking so extreme samples still rank first.
double pu_weight_raw(double p_s, double c);
double pu_weight(double p_s, double c);

// Clamped weights for every unlabelled sample, keyed by id.
std::map<int, double> unlabelled_weights(const PUDataset& ds, std::span<const double> probs,
                                         double c);

// (|labelled| + sum of weights) / k, accumulated in ascending id order.
// The weights map must cover exactly the unlabelled ids.
double estimate_prior(const PUDataset& ds, const std::map<int, double>& weights);

struct PuEstimates {
    double c = 1.0;
    double prior = 0.0;
    std::map<int, double> weights;  // unlabelled id -> w(x)
};

PuEstimates estimate_pu(const PUDataset& ds, std::span<const double> probs, double c);
PuEstimates estimate_pu(const PUDataset& ds, const ProbClassifier& f, double c);

// General estimator of E[h(x, y)] over p(x, y, s):
// (1/k) [ sum_{s=1} h(x,1) + sum_{s=0} (w h(x,1) + (1-w) h(x,0)) ].
using LabelledFn = std::function<double(std::span<const double>, int)>;
double estimate_expectation(const LabelledFn& h, const PUDataset& ds,
                            std::span<const double> probs, double c);
double estimate_expectation(const LabelledFn& h, const PUDataset& ds, const ProbClassifier& f,
                            double c);

// Duplicate-and-weight construction: a labelled sample yields one example
// (target 1, weight 1); an unlabelled sample yields a positive copy with
// weight w and a negative copy with weight 1-w, both recorded even when a
// weight is zero. Rows are emitted in dataset order.
struct PuTrainingSet {
    std::vector<WeightedExample> examples;
    std::vector<int> source_ids;                      // sample id behind each row
    std::vector<std::pair<int, int>> duplicate_rows;  // (positive row, negative row) per unlabelled sample
};

PuTrainingSet build_pu_training_set(const PUDataset& ds, std::span<const double> probs, double c);
PuTrainingSet build_pu_training_set(const PUDataset& ds, const ProbClassifier& f, double c);

// Result of ranking unlabelled samples and relabelling the top ones as hard
// positives until the positive fraction reaches the estimated prior.
struct ConvertedDataset {
    PUDataset base;
    std::vector<int> converted_ids;  // conversion (rank) order
    std::vector<int> labels;         // l per sample: 1 for s=1 and for converted ids
};

// Ranking: raw w descending, ties broken by ascending id. Conversion stops
// at the first point where (|labelled| + |converted|)/k >= estimated prior;
// comparison is carried out as |converted| >= sum of clamped weights
// (ascending-id accumulation), which avoids the division entirely. The
// converted count is therefore minimal: dropping the last converted id
// breaks the bound.
ConvertedDataset puc_convert(const PUDataset& ds, std::span<const double> probs, double c);
ConvertedDataset puc_convert(const PUDataset& ds, const ProbClassifier& f, double c);

// Audit report: c, prior, per-id weights, converted ids, warnings.
std::string estimates_to_json(const PuEstimates& est, const ConvertedDataset* conv,
                              std::span<const std::string> warnings);

// predict_proba over every sample, indexed by id.
std::vector<double> predict_all(const ProbClassifier& f, const PUDataset& ds);

}  // namespace puckit
