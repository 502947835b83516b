#include "puckit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "puckit/common.hpp"
#include "puckit/metrics.hpp"
#include "puckit/rng.hpp"

namespace puckit {

void TrainConfig::validate() const {
    if (!(max_lr > 0.0)) throw ConfigError("max_lr must be positive");
    if (warmup_steps <= 0) throw ConfigError("warmup_steps must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (hidden_dim <= 0) throw ConfigError("hidden_dim must be positive");
}

double ProbClassifier::logit(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim)
        throw IncompatError("predict: expected " + std::to_string(input_dim) +
                            " features, got " + std::to_string(x.size()));
    double z2 = b2;
    for (int j = 0; j < hidden_dim; ++j) {
        double z1 = b1[j];
        const double* row = &w1[static_cast<std::size_t>(j) * input_dim];
        for (int i = 0; i < input_dim; ++i) z1 += row[i] * x[i];
        z2 += w2[j] * std::tanh(z1);
    }
    return z2;
}

double ProbClassifier::predict_proba(std::span<const double> x) const {
    const double p = 1.0 / (1.0 + std::exp(-logit(x)));
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

std::vector<double> ProbClassifier::flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    out.insert(out.end(), w1.begin(), w1.end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    out.push_back(b2);
    return out;
}

void ProbClassifier::unflatten(std::span<const double> params) {
    if (static_cast<int>(params.size()) != param_count())
        throw IncompatError("unflatten: wrong parameter count");
    auto it = params.begin();
    w1.assign(it, it + static_cast<std::size_t>(input_dim) * hidden_dim);
    it += static_cast<std::size_t>(input_dim) * hidden_dim;
    b1.assign(it, it + hidden_dim);
    it += hidden_dim;
    w2.assign(it, it + hidden_dim);
    it += hidden_dim;
    b2 = *it;
}

ProbClassifier init_classifier(int input_dim, int hidden_dim, std::uint64_t seed) {
    ProbClassifier m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    Rng rng(seed);
    const double body_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    m.w1.resize(static_cast<std::size_t>(input_dim) * hidden_dim);
    m.b1.resize(hidden_dim);
    m.w2.resize(hidden_dim);
    for (auto& w : m.w1) w = rng.uniform(-body_bound, body_bound);
    for (auto& b : m.b1) b = rng.uniform(-body_bound, body_bound);
    for (auto& w : m.w2) w = rng.uniform(-head_bound, head_bound);
    m.b2 = rng.uniform(-head_bound, head_bound);
    m.lineage = "init:" + std::to_string(seed);
    return m;
}

double lr_at_step(long step, long total_steps, const TrainConfig& cfg) {
    if (cfg.warmup_steps >= total_steps)
        throw ConfigError("warmup_steps (" + std::to_string(cfg.warmup_steps) +
                          ") must be below total steps (" + std::to_string(total_steps) + ")");
    if (step < 0 || step > total_steps)
        throw ConfigError("lr_at_step: step out of [0, total_steps]");
    if (step <= cfg.warmup_steps)
        return cfg.max_lr * static_cast<double>(step) / cfg.warmup_steps;
    return cfg.max_lr * static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - cfg.warmup_steps);
}

namespace {

double softplus(double z) {
    // log(1 + e^z) without overflow.
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Forward/backward for the data term of one example. Accumulates
// weight * dBCE/dparam into grad (flat layout) and returns the weighted BCE.
double data_loss_accum(const ProbClassifier& m, const WeightedExample& ex,
                       std::span<double> grad, std::vector<double>& act) {
    const int d = m.input_dim;
    const int h = m.hidden_dim;
    const auto& x = ex.features;
    double z2 = m.b2;
    for (int j = 0; j < h; ++j) {
        double z1 = m.b1[j];
        const double* row = &m.w1[static_cast<std::size_t>(j) * d];
        for (int i = 0; i < d; ++i) z1 += row[i] * x[i];
        act[j] = std::tanh(z1);
        z2 += m.w2[j] * act[j];
    }
    const double loss = ex.weight * (softplus(z2) - ex.target * z2);
    if (!grad.empty()) {
        const double p = 1.0 / (1.0 + std::exp(-z2));
        const double dz2 = ex.weight * (p - ex.target);
        double* gw1 = grad.data();
        double* gb1 = gw1 + static_cast<std::size_t>(d) * h;
        double* gw2 = gb1 + h;
        double* gb2 = gw2 + h;
        *gb2 += dz2;
        for (int j = 0; j < h; ++j) {
            gw2[j] += dz2 * act[j];
            const double dz1 = dz2 * m.w2[j] * (1.0 - act[j] * act[j]);
            gb1[j] += dz1;
            double* grow = &gw1[static_cast<std::size_t>(j) * d];
            for (int i = 0; i < d; ++i) grow[i] += dz1 * x[i];
        }
    }
    return loss;
}

}  // namespace

double example_loss_grad(const ProbClassifier& m, const WeightedExample& ex,
                         double weight_decay, std::span<double> grad) {
    if (!grad.empty() && static_cast<int>(grad.size()) != m.param_count())
        throw IncompatError("example_loss_grad: grad has wrong size");
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> act(m.hidden_dim);
    double loss = data_loss_accum(m, ex, grad, act);
    const std::vector<double> params = m.flatten();
    double sq = 0.0;
    for (double p : params) sq += p * p;
    loss += weight_decay * sq;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * weight_decay * params[i];
    return loss;
}

namespace {

double val_f1(const ProbClassifier& m, const PUDataset& val) {
    std::vector<int> preds(val.size()), golds(val.size());
    for (int i = 0; i < val.size(); ++i) {
        preds[i] = m.predict_proba(val.samples[i].features) >= 0.5 ? 1 : 0;
        golds[i] = val.samples[i].s;
    }
    return precision_recall_f1(preds, golds).f1;
}

}  // namespace

ProbClassifier train(std::span<const WeightedExample> examples, const PUDataset& val,
                     const TrainConfig& cfg, const ProbClassifier* init) {
    cfg.validate();
    if (examples.empty()) throw ValidationError("train: no examples");
    const int d = static_cast<int>(examples.front().features.size());
    for (const auto& ex : examples) {
        if (static_cast<int>(ex.features.size()) != d)
            throw IncompatError("train: inconsistent feature dimensions");
        if (ex.target != 0 && ex.target != 1)
            throw ValidationError("train: target must be 0 or 1");
        if (!(ex.weight >= 0.0 && ex.weight <= 1.0))
            throw ValidationError("train: example weight must be in [0,1]");
    }
    if (val.dim != d) throw IncompatError("train: validation dimension mismatch");

    ProbClassifier m;
    if (init != nullptr) {
        if (init->input_dim != d) throw IncompatError("train: warm-start dimension mismatch");
        m = *init;
    } else {
        m = init_classifier(d, cfg.hidden_dim, derive_seed(cfg.seed, seed_tag::model_init));
    }

    const long n = static_cast<long>(examples.size());
    const long batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = batches_per_epoch * cfg.epochs;
    if (cfg.warmup_steps >= total_steps)
        throw ConfigError("warmup_steps (" + std::to_string(cfg.warmup_steps) +
                          ") must be below total steps (" + std::to_string(total_steps) + ")");

    Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::shuffle));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad(m.param_count());
    std::vector<double> act(m.hidden_dim);
    std::vector<double> params = m.flatten();

    ProbClassifier best = m;
    double best_f1 = -1.0;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (long b = 0; b < batches_per_epoch; ++b) {
            const long lo = b * cfg.batch_size;
            const long hi = std::min(n, lo + cfg.batch_size);
            const double inv = 1.0 / static_cast<double>(hi - lo);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (long i = lo; i < hi; ++i)
                batch_loss += data_loss_accum(m, examples[order[i]], grad, act);
            batch_loss *= inv;
            ++step;
            const double lr = lr_at_step(step, total_steps, cfg);
            if (std::isnan(batch_loss))
                throw TrainError("NaN loss at step " + std::to_string(step) + " (lr=" +
                                 format_double(lr) + ")");
            params = m.flatten();
            for (std::size_t i = 0; i < params.size(); ++i)
                params[i] -= lr * (grad[i] * inv + 2.0 * cfg.weight_decay * params[i]);
            m.unflatten(params);
        }
        const double f1 = val_f1(m, val);
        if (f1 > best_f1) {
            best_f1 = f1;
            best = m;
        }
    }
    // Ties keep the earliest epoch. An all-zero F1 trace carries no
    // selection signal at all; fall back to the final parameters then.
    ProbClassifier out = best_f1 > 0.0 ? best : m;
    out.lineage += (out.lineage.empty() ? "" : ";") + std::string("train:") +
                   std::to_string(cfg.seed);
    return out;
}

ProbClassifier reinit_head(const ProbClassifier& m, std::uint64_t seed) {
    ProbClassifier out = m;
    Rng rng(derive_seed(seed, seed_tag::head_reinit));
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.hidden_dim));
    for (auto& w : out.w2) w = rng.uniform(-bound, bound);
    out.b2 = rng.uniform(-bound, bound);
    out.lineage += (out.lineage.empty() ? "" : ";") + std::string("head:") + std::to_string(seed);
    return out;
}

std::string classifier_to_json(const ProbClassifier& m) {
    nlohmann::json obj;
    obj["input_dim"] = m.input_dim;
    obj["hidden_dim"] = m.hidden_dim;
    obj["w1"] = m.w1;
    obj["b1"] = m.b1;
    obj["w2"] = m.w2;
    obj["b2"] = m.b2;
    obj["lineage"] = m.lineage;
    return obj.dump(2) + "\n";
}

ProbClassifier classifier_from_json(const std::string& text) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model parse failure: ") + e.what());
    }
    ProbClassifier m;
    m.input_dim = obj.at("input_dim").get<int>();
    m.hidden_dim = obj.at("hidden_dim").get<int>();
    m.w1 = obj.at("w1").get<std::vector<double>>();
    m.b1 = obj.at("b1").get<std::vector<double>>();
    m.w2 = obj.at("w2").get<std::vector<double>>();
    m.b2 = obj.at("b2").get<double>();
    m.lineage = obj.value("lineage", "");
    if (static_cast<int>(m.w1.size()) != m.input_dim * m.hidden_dim ||
        static_cast<int>(m.b1.size()) != m.hidden_dim ||
        static_cast<int>(m.w2.size()) != m.hidden_dim)
        throw FormatError("model parameter arrays do not match declared dimensions");
    return m;
}

void save_classifier(const ProbClassifier& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << classifier_to_json(m);
}

ProbClassifier load_classifier(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return classifier_from_json(ss.str());
}

}  // namespace puckit
