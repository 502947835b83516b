#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "puckit/dataset.hpp"

namespace puckit {

// One row of a training set: the target is binary, the loss is scaled by
// weight. The duplicate-and-weight PU construction emits these.
struct WeightedExample {
    std::vector<double> features;
    int target = 0;
    double weight = 1.0;
};

struct TrainConfig {
    double max_lr = 0.05;
    int warmup_steps = 50;
    double weight_decay = 1e-4;
    int epochs = 20;
    int batch_size = 32;
    std::uint64_t seed = 0;
    int hidden_dim = 16;

    void validate() const;
};

// One-hidden-layer network: tanh body, sigmoid head. Plays both roles in the
// PU setup: f predicting p(s=1|x) and g predicting p(y=1|x). Flat parameter
// order (used by serialization and the gradient tests):
// w1 (hidden x input, row-major), b1, w2, b2.
struct ProbClassifier {
    int input_dim = 0;
    int hidden_dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    std::string lineage;  // seed provenance, e.g. "init:42;train:7"

    int param_count() const { return input_dim * hidden_dim + 2 * hidden_dim + 1; }

    double logit(std::span<const double> x) const;

    // Sigmoid of the logit, clamped to [1e-7, 1 - 1e-7] so the downstream
    // odds ratio p/(1-p) stays finite.
    double predict_proba(std::span<const double> x) const;

    std::vector<double> flatten() const;
    void unflatten(std::span<const double> params);
};

inline constexpr double kProbClamp = 1e-7;

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer; body uses fan_in =
// input_dim, head uses fan_in = hidden_dim. Draw order: w1, b1, w2, b2.
ProbClassifier init_classifier(int input_dim, int hidden_dim, std::uint64_t seed);

// Triangular schedule: 0 -> max_lr over [0, warmup], max_lr -> 0 over
// [warmup, total]. Training consumes steps 1..total_steps.
double lr_at_step(long step, long total_steps, const TrainConfig& cfg);

// Loss of a single weighted example: weight * BCE(sigmoid(logit), target)
// computed in logit space, plus weight_decay * ||params||^2 over all
// parameters. grad, when non-null, receives d(loss)/d(params) in flat order
// and must have param_count() entries.
double example_loss_grad(const ProbClassifier& m, const WeightedExample& ex,
                         double weight_decay, std::span<double> grad);

// Mini-batch gradient descent on the mean weighted BCE plus the L2 penalty.
// After each epoch, F1 on the validation set (threshold 0.5, targets = s) is
// evaluated and the best epoch's parameters are returned; ties keep the
// earliest epoch. A NaN loss aborts with the step and learning rate. Pass
// init to warm-start instead of drawing fresh parameters.
ProbClassifier train(std::span<const WeightedExample> examples, const PUDataset& val,
                     const TrainConfig& cfg, const ProbClassifier* init = nullptr);

// Copies the body, redraws the head from the init distribution under seed.
ProbClassifier reinit_head(const ProbClassifier& m, std::uint64_t seed);

std::string classifier_to_json(const ProbClassifier& m);
ProbClassifier classifier_from_json(const std::string& text);
void save_classifier(const ProbClassifier& m, const std::string& path);
ProbClassifier load_classifier(const std::string& path);

}  // namespace puckit
