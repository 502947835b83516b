#include "puckit/pu.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "puckit/common.hpp"

namespace puckit {

std::vector<double> predict_all(const ProbClassifier& f, const PUDataset& ds) {
    std::vector<double> probs(ds.size());
    for (int i = 0; i < ds.size(); ++i) probs[i] = f.predict_proba(ds.samples[i].features);
    return probs;
}

double estimate_c(std::span<const double> probs_on_positives) {
    if (probs_on_positives.empty())
        throw ValidationError("label frequency estimate needs at least one labelled validation sample");
    double sum = 0.0;
    for (double p : probs_on_positives) sum += p;
    const double mean = sum / static_cast<double>(probs_on_positives.size());
    return std::clamp(mean, 1e-4, 1.0);
}

double estimate_c(const ProbClassifier& f, const PUDataset& ds, std::span<const int> val_ids) {
    std::vector<double> probs;
    for (int id : val_ids)
        if (ds.samples[id].s == 1) probs.push_back(f.predict_proba(ds.samples[id].features));
    return estimate_c(probs);
}

double pu_weight_raw(double p_s, double c) {
    if (!(c > 0.0 && c <= 1.0)) throw ValidationError("label frequency c must be in (0,1]");
    if (!(p_s > 0.0 && p_s < 1.0))
        throw ValidationError("p_s must be strictly inside (0,1); clamp upstream");
    return (1.0 - c) / c * (p_s / (1.0 - p_s));
}

double pu_weight(double p_s, double c) {
    return std::clamp(pu_weight_raw(p_s, c), 0.0, 1.0);
}

std::map<int, double> unlabelled_weights(const PUDataset& ds, std::span<const double> probs,
                                         double c) {
    if (probs.size() != static_cast<std::size_t>(ds.size()))
        throw IncompatError("probability vector must cover every sample");
    std::map<int, double> weights;
    for (const auto& smp : ds.samples)
        if (smp.s == 0) weights.emplace(smp.id, pu_weight(probs[smp.id], c));
    return weights;
}

double estimate_prior(const PUDataset& ds, const std::map<int, double>& weights) {
    double sum = 0.0;
    std::size_t unlabelled = 0;
    for (const auto& smp : ds.samples) {
        if (smp.s == 1) {
            if (weights.count(smp.id))
                throw ValidationError("weight given for labelled id " + std::to_string(smp.id));
            sum += 1.0;
        } else {
            auto it = weights.find(smp.id);
            if (it == weights.end())
                throw ValidationError("missing weight for unlabelled id " + std::to_string(smp.id));
            sum += it->second;
            ++unlabelled;
        }
    }
    if (unlabelled != weights.size())
        throw ValidationError("weights map has entries outside the dataset");
    return sum / static_cast<double>(ds.size());
}

PuEstimates estimate_pu(const PUDataset& ds, std::span<const double> probs, double c) {
    PuEstimates est;
    est.c = c;
    est.weights = unlabelled_weights(ds, probs, c);
    est.prior = estimate_prior(ds, est.weights);
    return est;
}

PuEstimates estimate_pu(const PUDataset& ds, const ProbClassifier& f, double c) {
    return estimate_pu(ds, predict_all(f, ds), c);
}

double estimate_expectation(const LabelledFn& h, const PUDataset& ds,
                            std::span<const double> probs, double c) {
    if (probs.size() != static_cast<std::size_t>(ds.size()))
        throw IncompatError("probability vector must cover every sample");
    double sum = 0.0;
    for (const auto& smp : ds.samples) {
        if (smp.s == 1) {
            sum += h(smp.features, 1);
        } else {
            const double w = pu_weight(probs[smp.id], c);
            sum += w * h(smp.features, 1) + (1.0 - w) * h(smp.features, 0);
        }
    }
    return sum / static_cast<double>(ds.size());
}

double estimate_expectation(const LabelledFn& h, const PUDataset& ds, const ProbClassifier& f,
                            double c) {
    return estimate_expectation(h, ds, predict_all(f, ds), c);
}

PuTrainingSet build_pu_training_set(const PUDataset& ds, std::span<const double> probs, double c) {
    if (probs.size() != static_cast<std::size_t>(ds.size()))
        throw IncompatError("probability vector must cover every sample");
    PuTrainingSet out;
    for (const auto& smp : ds.samples) {
        if (smp.s == 1) {
            out.examples.push_back({smp.features, 1, 1.0});
            out.source_ids.push_back(smp.id);
        } else {
            const double w = pu_weight(probs[smp.id], c);
            const int pos_row = static_cast<int>(out.examples.size());
            out.examples.push_back({smp.features, 1, w});
            out.examples.push_back({smp.features, 0, 1.0 - w});
            out.source_ids.push_back(smp.id);
            out.source_ids.push_back(smp.id);
            out.duplicate_rows.emplace_back(pos_row, pos_row + 1);
        }
    }
    return out;
}

PuTrainingSet build_pu_training_set(const PUDataset& ds, const ProbClassifier& f, double c) {
    return build_pu_training_set(ds, predict_all(f, ds), c);
}

ConvertedDataset puc_convert(const PUDataset& ds, std::span<const double> probs, double c) {
    if (probs.size() != static_cast<std::size_t>(ds.size()))
        throw IncompatError("probability vector must cover every sample");
    ConvertedDataset out;
    out.base.dim = ds.dim;
    out.base.samples = ds.samples;

    double weight_sum = 0.0;
    std::vector<std::pair<double, int>> ranked;  // (raw weight, id), unlabelled only
    for (const auto& smp : ds.samples) {
        if (smp.s == 1) continue;
        weight_sum += pu_weight(probs[smp.id], c);
        ranked.emplace_back(pu_weight_raw(probs[smp.id], c), smp.id);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    // m >= sum of weights  <=>  (|labelled| + m)/k >= estimated prior.
    for (const auto& [w, id] : ranked) {
        if (static_cast<double>(out.converted_ids.size()) >= weight_sum) break;
        out.converted_ids.push_back(id);
    }

    std::vector<char> converted(ds.size(), 0);
    for (int id : out.converted_ids) converted[id] = 1;
    out.labels.resize(ds.size());
    for (const auto& smp : ds.samples)
        out.labels[smp.id] = (smp.s == 1 || converted[smp.id]) ? 1 : 0;
    return out;
}

ConvertedDataset puc_convert(const PUDataset& ds, const ProbClassifier& f, double c) {
    return puc_convert(ds, predict_all(f, ds), c);
}

std::string estimates_to_json(const PuEstimates& est, const ConvertedDataset* conv,
                              std::span<const std::string> warnings) {
    nlohmann::json obj;
    obj["c"] = est.c;
    obj["prior"] = est.prior;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [id, w] : est.weights) rows.push_back({{"id", id}, {"w", w}});
    obj["weights"] = std::move(rows);
    if (conv != nullptr) {
        obj["converted_ids"] = conv->converted_ids;
        obj["labels"] = conv->labels;
    }
    obj["warnings"] = std::vector<std::string>(warnings.begin(), warnings.end());
    return obj.dump(2) + "\n";
}

}  // namespace puckit
