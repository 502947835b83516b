#include <doctest.h>

#include <cmath>
#include <vector>

#include "puckit/common.hpp"
#include "puckit/dataset.hpp"
#include "puckit/metrics.hpp"
#include "puckit/pipeline.hpp"
#include "puckit/rng.hpp"

using namespace puckit;

namespace {

ScarConfig separable_config(int n, double prior, double label_freq, std::uint64_t seed) {
    ScarConfig cfg;
    cfg.n = n;
    cfg.prior = prior;
    cfg.label_freq = label_freq;
    cfg.dim = 2;
    cfg.mean_pos = {2.0, 0.0};
    cfg.mean_neg = {-2.0, 0.0};
    cfg.var = {0.64, 0.64};
    cfg.seed = seed;
    return cfg;
}

TrainConfig quick_cfg(std::uint64_t seed, int epochs = 10) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.warmup_steps = 20;
    return cfg;
}

bool same_params(const ProbClassifier& a, const ProbClassifier& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

double truth_accuracy(const ProbClassifier& m, const PUDataset& ds) {
    int correct = 0;
    for (const auto& smp : ds.samples) {
        const int pred = m.predict_proba(smp.features) >= 0.5 ? 1 : 0;
        correct += pred == *smp.truth;
    }
    return static_cast<double>(correct) / ds.size();
}

}  // namespace

TEST_CASE("pn training is deterministic and accurate on fully labelled data") {
    const PUDataset ds = generate_scar(separable_config(1500, 0.5, 1.0, 3));
    const PnResult a = train_pn(ds, quick_cfg(5));
    const PnResult b = train_pn(ds, quick_cfg(5));
    CHECK(same_params(a.g, b.g));
    CHECK(truth_accuracy(a.g, ds) >= 0.95);
}

TEST_CASE("pn copes with a dataset that has no labelled samples") {
    PUDataset ds = generate_scar(separable_config(400, 0.5, 0.5, 4));
    for (auto& smp : ds.samples) smp.s = 0;
    const PnResult r = train_pn(ds, quick_cfg(6, 5));
    int positive_preds = 0;
    for (const auto& smp : ds.samples)
        positive_preds += r.g.predict_proba(smp.features) >= 0.5 ? 1 : 0;
    CHECK(positive_preds <= ds.size() / 20);  // collapses to the negative class
}

TEST_CASE("pu recovers the label frequency on separable data") {
    const PUDataset ds = generate_scar(separable_config(5000, 0.5, 0.7, 9));
    const PuResult r = train_pu(ds, quick_cfg(1));
    CHECK(r.est.c >= 0.6);
    CHECK(r.est.c <= 0.8);
    CHECK(std::abs(r.est.prior - 0.5) <= 0.05);
    // weights cover exactly the unlabelled ids
    for (const auto& smp : ds.samples)
        CHECK(r.est.weights.count(smp.id) == std::size_t(smp.s == 0));
}

TEST_CASE("pu requires a labelled sample") {
    PUDataset ds = generate_scar(separable_config(200, 0.5, 0.5, 5));
    for (auto& smp : ds.samples) smp.s = 0;
    CHECK_THROWS_AS(train_pu(ds, quick_cfg(2, 5)), ValidationError);
}

TEST_CASE("pu on fully labelled data degenerates to PN with a warning") {
    PUDataset ds = generate_scar(separable_config(300, 0.5, 1.0, 6));
    for (auto& smp : ds.samples) smp.s = *smp.truth = 1;  // everything labelled positive
    ds.dim = 2;
    const PuResult r = train_pu(ds, quick_cfg(3, 5));
    CHECK(r.est.weights.empty());
    CHECK(r.est.prior == 1.0);
    bool warned = false;
    for (const auto& w : r.warnings) warned |= w.find("degenerates") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("oracle c=1 collapses PN, PU and PUC to identical models") {
    const PUDataset ds = generate_scar(separable_config(2000, 0.5, 1.0, 7));
    const TrainConfig cfg = quick_cfg(11);
    PipelineOptions oracle;
    oracle.known_c = 1.0;
    const PnResult pn = train_pn(ds, cfg);
    const PuResult pu = train_pu(ds, cfg, oracle);
    const PucResult puc = train_puc(ds, cfg, oracle);
    for (const auto& [id, w] : pu.est.weights) CHECK(w == 0.0);
    CHECK(puc.conv.converted_ids.empty());
    CHECK(same_params(pn.g, pu.g));
    CHECK(same_params(pn.g, puc.g));
}

TEST_CASE("puc converts a planted clear positive") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PUDataset ds = generate_scar(separable_config(1500, 0.5, 0.5, 40 + seed));
        Sample planted;
        planted.id = ds.size();
        planted.features = {2.0, 0.0};  // exactly the positive-class mean
        planted.s = 0;
        planted.truth = 1;
        ds.samples.push_back(planted);
        const PucResult r = train_puc(ds, quick_cfg(seed));
        for (int id : r.conv.converted_ids) hits += id == planted.id;
    }
    CHECK(hits >= 4);
}

TEST_CASE("pu lifts ground-truth recall over the pn baseline") {
    // half the positives are unlabelled here; PN treats them as negatives
    const PUDataset ds = generate_scar(separable_config(2500, 0.5, 0.5, 60));
    const SplitSpec holdout = split_train_val(ds, 0.8, 99, false);
    const PUDataset train_part = subset(ds, holdout.train_ids);
    const PUDataset test_part = subset(ds, holdout.val_ids);

    auto truth_recall = [&](const ProbClassifier& g) {
        std::vector<int> preds(test_part.size()), golds(test_part.size());
        for (int i = 0; i < test_part.size(); ++i) {
            preds[i] = g.predict_proba(test_part.samples[i].features) >= 0.5 ? 1 : 0;
            golds[i] = *test_part.samples[i].truth;
        }
        return precision_recall_f1(preds, golds).recall;
    };

    double pn_sum = 0.0, pu_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        pn_sum += truth_recall(train_pn(train_part, quick_cfg(seed)).g);
        pu_sum += truth_recall(train_pu(train_part, quick_cfg(seed)).g);
    }
    CHECK(pu_sum / 10.0 >= pn_sum / 10.0);
}

TEST_CASE("puc run is reproducible end to end") {
    const PUDataset ds = generate_scar(separable_config(1200, 0.5, 0.6, 8));
    const PucResult a = train_puc(ds, quick_cfg(21));
    const PucResult b = train_puc(ds, quick_cfg(21));
    CHECK(same_params(a.g, b.g));
    CHECK(same_params(a.f, b.f));
    CHECK(a.est.c == b.est.c);
    CHECK(a.est.prior == b.est.prior);
    CHECK(a.est.weights == b.est.weights);
    CHECK(a.conv.converted_ids == b.conv.converted_ids);
    CHECK(a.conv.labels == b.conv.labels);
}

TEST_CASE("transfer keeps the source body bit-exactly and redraws the head") {
    const PUDataset source = generate_scar(separable_config(1200, 0.5, 0.7, 31));
    const PUDataset target = generate_scar(separable_config(600, 0.5, 0.7, 32));
    TrainMode pu_mode;
    pu_mode.tag = ModeTag::PU;
    const TransferResult tr = pretrain_finetune(source, target, pu_mode, pu_mode, quick_cfg(2));
    CHECK(tr.warm_start.w1 == tr.source.g.w1);
    CHECK(tr.warm_start.b1 == tr.source.g.b1);
    CHECK(tr.warm_start.w2 != tr.source.g.w2);
    CHECK(truth_accuracy(tr.target.g, target) > 0.9);
}

TEST_CASE("transfer rejects mismatched feature dimensions") {
    ScarConfig narrow = separable_config(100, 0.5, 0.8, 1);
    ScarConfig wide = narrow;
    wide.dim = 4;
    wide.mean_pos = {2.0, 0.0, 0.0, 0.0};
    wide.mean_neg = {-2.0, 0.0, 0.0, 0.0};
    wide.var = {0.64, 0.64, 0.64, 0.64};
    const PUDataset a = generate_scar(narrow);
    const PUDataset b = generate_scar(wide);
    TrainMode mode;
    mode.tag = ModeTag::PU;
    CHECK_THROWS_AS(pretrain_finetune(a, b, mode, mode, quick_cfg(1)), IncompatError);
}

TEST_CASE("run_mode rejects a pretrained model of the wrong width") {
    const PUDataset ds = generate_scar(separable_config(200, 0.5, 0.8, 2));
    TrainMode mode;
    mode.tag = ModeTag::PU;
    auto source = std::make_shared<ProbClassifier>(init_classifier(8, 4, 1));
    mode.transfer_source = source;
    CHECK_THROWS_AS(run_mode(ds, mode, quick_cfg(3, 5)), IncompatError);
}

TEST_CASE("majority vote follows the documented tie rule") {
    // heads fixed so each member predicts a constant side
    auto constant_model = [](double bias) {
        ProbClassifier m = init_classifier(1, 2, 1);
        std::fill(m.w1.begin(), m.w1.end(), 0.0);
        std::fill(m.b1.begin(), m.b1.end(), 0.0);
        std::fill(m.w2.begin(), m.w2.end(), 0.0);
        m.b2 = bias;
        return m;
    };
    EnsembleModel e;
    for (int i = 0; i < 8; ++i) e.members.push_back(constant_model(1.0));   // vote 1
    for (int i = 0; i < 7; ++i) e.members.push_back(constant_model(-1.0));  // vote 0
    const std::vector<double> x = {0.0};
    CHECK(ensemble_predict(e, x) == 1);  // 8 of 15

    EnsembleModel unanimous;
    for (int i = 0; i < 5; ++i) unanimous.members.push_back(constant_model(-1.0));
    CHECK(ensemble_predict(unanimous, x) == 0);

    EnsembleModel tie;
    tie.members.push_back(constant_model(1.0));
    tie.members.push_back(constant_model(-1.0));
    CHECK(ensemble_predict(tie, x) == 1);  // documented tie rule

    EnsembleModel empty;
    CHECK_THROWS_AS(ensemble_predict(empty, x), ValidationError);
}

TEST_CASE("an ensemble of copies equals the single thresholded model") {
    const PUDataset ds = generate_scar(separable_config(300, 0.5, 0.8, 12));
    const PnResult r = train_pn(ds, quick_cfg(13, 5));
    EnsembleModel e;
    for (int i = 0; i < 7; ++i) e.members.push_back(r.g);
    for (const auto& smp : ds.samples) {
        const int single = r.g.predict_proba(smp.features) >= 0.5 ? 1 : 0;
        CHECK(ensemble_predict(e, smp.features) == single);
    }
}
