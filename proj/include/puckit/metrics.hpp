#pragma once

#include <span>
#include <vector>

namespace puckit {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
};

Confusion confusion_counts(std::span<const int> preds, std::span<const int> golds);

// p = tp/(tp+fp), r = tp/(tp+fn), F1 = 2pr/(p+r); every 0/0 resolves to 0.
Prf prf_from_confusion(const Confusion& c);
Prf precision_recall_f1(std::span<const int> preds, std::span<const int> golds);

// AP = (1/|P|) * sum over positive positions i of tp(i)/i, where tp(i)
// counts positives among the first i items. Input is the gold labels in
// descending score order; errors if it contains no positive.
double average_precision(std::span<const int> ranked_golds);

// Arithmetic mean of per-query AP; errors on an empty query set.
double mean_ap(const std::vector<std::vector<int>>& queries);

}  // namespace puckit
