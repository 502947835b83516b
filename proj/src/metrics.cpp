#include "puckit/metrics.hpp"

#include <string>

#include "puckit/common.hpp"

namespace puckit {

Confusion confusion_counts(std::span<const int> preds, std::span<const int> golds) {
    if (preds.size() != golds.size())
        throw ValidationError("prediction/gold length mismatch: " + std::to_string(preds.size()) +
                              " vs " + std::to_string(golds.size()));
    if (preds.empty()) throw ValidationError("empty prediction list");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1)
            (golds[i] == 1 ? c.tp : c.fp)++;
        else
            (golds[i] == 1 ? c.fn : c.tn)++;
    }
    return c;
}

Prf prf_from_confusion(const Confusion& c) {
    Prf out;
    out.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    out.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

Prf precision_recall_f1(std::span<const int> preds, std::span<const int> golds) {
    return prf_from_confusion(confusion_counts(preds, golds));
}

double average_precision(std::span<const int> ranked_golds) {
    long positives = 0;
    for (int g : ranked_golds) positives += g;
    if (positives == 0) throw ValidationError("average precision undefined without positives");
    double sum = 0.0;
    long tp = 0;
    for (std::size_t i = 0; i < ranked_golds.size(); ++i) {
        if (ranked_golds[i] == 1) {
            ++tp;
            sum += static_cast<double>(tp) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(positives);
}

double mean_ap(const std::vector<std::vector<int>>& queries) {
    if (queries.empty()) throw ValidationError("mean AP undefined for an empty query set");
    double sum = 0.0;
    for (const auto& q : queries) sum += average_precision(q);
    return sum / static_cast<double>(queries.size());
}

}  // namespace puckit
