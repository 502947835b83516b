#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "puckit/common.hpp"
#include "puckit/eval.hpp"
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

TrainConfig quick_cfg(std::uint64_t seed, int epochs = 8) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.warmup_steps = 10;
    return cfg;
}

PUDataset sized_dataset(int n, std::uint64_t seed) {
    Rng rng(seed);
    PUDataset ds;
    ds.dim = 1;
    for (int i = 0; i < n; ++i) {
        Sample smp;
        smp.id = i;
        smp.features = {rng.uniform(-1.0, 1.0)};
        smp.truth = rng.bernoulli(0.5);
        smp.s = *smp.truth == 1 && rng.bernoulli(0.7) ? 1 : 0;
        ds.samples.push_back(std::move(smp));
    }
    return ds;
}

}  // namespace

TEST_CASE("leave-one-group-out builds one fold per group") {
    PUDataset ds = sized_dataset(50, 1);
    for (auto& smp : ds.samples) smp.group = smp.id % 5;
    const FoldPlan plan = build_fold_plan(ds, FoldKind::LeaveOneGroupOut, 0, 0);
    REQUIRE(plan.test_ids.size() == 5);
    for (int f = 0; f < 5; ++f) {
        CHECK(plan.fold_keys[f] == f);
        for (int id : plan.test_ids[f]) CHECK(*ds.samples[id].group == f);
        CHECK(plan.test_ids[f].size() == 10);
    }
}

TEST_CASE("missing group annotations are rejected") {
    PUDataset ds = sized_dataset(10, 2);
    ds.samples[3].group = 1;  // only one sample annotated
    CHECK_THROWS_AS(build_fold_plan(ds, FoldKind::LeaveOneGroupOut, 0, 0), ConfigError);
}

TEST_CASE("seven folds over 2602 samples have sizes 372 or 371") {
    const PUDataset ds = sized_dataset(2602, 3);
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 7, 5);
    REQUIRE(plan.test_ids.size() == 7);
    std::multiset<std::size_t> sizes;
    for (const auto& fold : plan.test_ids) sizes.insert(fold.size());
    CHECK(*sizes.begin() == 371);
    CHECK(*sizes.rbegin() == 372);
    CHECK(std::count(sizes.begin(), sizes.end(), 372) == 2602 % 7);
}

TEST_CASE("every id lands in exactly one test fold") {
    Rng rng(9);
    for (int t = 0; t < 10; ++t) {
        const int n = 20 + int(rng.below(200));
        const int k = 2 + int(rng.below(8));
        const PUDataset ds = sized_dataset(n, 100 + t);
        const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, k, t);
        std::vector<int> seen(n, 0);
        for (const auto& fold : plan.test_ids)
            for (int id : fold) seen[id]++;
        for (int id = 0; id < n; ++id) CHECK(seen[id] == 1);
    }
}

TEST_CASE("k beyond the dataset size is rejected") {
    const PUDataset ds = sized_dataset(5, 4);
    CHECK_THROWS_AS(build_fold_plan(ds, FoldKind::KFold, 6, 0), ConfigError);
    CHECK_THROWS_AS(build_fold_plan(ds, FoldKind::KFold, 1, 0), ConfigError);
}

TEST_CASE("single fold single seed report collapses to that run") {
    const PUDataset ds = generate_scar(separable_config(300, 0.5, 1.0, 6));
    FoldPlan plan;
    plan.kind = FoldKind::KFold;
    std::vector<int> test;
    for (int id = 0; id < 60; ++id) test.push_back(id);
    plan.test_ids.push_back(test);
    plan.fold_keys.push_back(0);
    TrainMode mode;
    const EvalReport report = run_experiment(ds, plan, mode, quick_cfg(1), {42});
    REQUIRE(report.per_fold.size() == 1);
    CHECK(report.aggregate_mean.macro.f1 == report.per_fold[0].f1);
    CHECK(report.aggregate_std.macro.f1 == 0.0);
    CHECK(report.aggregate_std.micro.recall == 0.0);
    CHECK(report.per_seed.size() == 1);
}

TEST_CASE("reports are bit-identical across reruns") {
    const PUDataset ds = generate_scar(separable_config(400, 0.5, 0.7, 7));
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 3, 2);
    TrainMode mode;
    mode.tag = ModeTag::PU;
    ExperimentOptions options;
    options.ranking = true;
    const EvalReport a = run_experiment(ds, plan, mode, quick_cfg(5), {1, 2}, options);
    const EvalReport b = run_experiment(ds, plan, mode, quick_cfg(5), {1, 2}, options);
    CHECK(report_to_json(a) == report_to_json(b));
    CHECK(report_to_csv(a) == report_to_csv(b));
}

TEST_CASE("parallel execution reproduces the serial report") {
    const PUDataset ds = generate_scar(separable_config(400, 0.5, 0.7, 8));
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 3, 1);
    TrainMode mode;
    mode.tag = ModeTag::PUC;
    ExperimentOptions serial;
    serial.ranking = true;
    ExperimentOptions parallel = serial;
    parallel.jobs = 4;
    const EvalReport a = run_experiment(ds, plan, mode, quick_cfg(3), {1, 2, 3}, serial);
    const EvalReport b = run_experiment(ds, plan, mode, quick_cfg(3), {1, 2, 3}, parallel);
    CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("missing truth labels abort with the offending ids") {
    PUDataset ds = generate_scar(separable_config(50, 0.5, 0.8, 9));
    ds.samples[7].truth.reset();
    ds.samples[13].truth.reset();
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 2, 0);
    TrainMode mode;
    try {
        run_experiment(ds, plan, mode, quick_cfg(1, 2), {1});
        FAIL("expected MissingLabelError");
    } catch (const MissingLabelError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("7") != std::string::npos);
        CHECK(msg.find("13") != std::string::npos);
    }
}

TEST_CASE("repeated seeds leave zero deviation and matching ensemble") {
    const PUDataset ds = generate_scar(separable_config(300, 0.5, 1.0, 10));
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 2, 3);
    TrainMode mode;
    const EvalReport report = run_experiment(ds, plan, mode, quick_cfg(2), {5, 5, 5});
    CHECK(report.aggregate_std.macro.f1 == 0.0);
    CHECK(report.aggregate_std.macro.precision == 0.0);
    // identical members vote like the single model
    CHECK(report.ensembled.macro.f1 == report.per_seed[0].metrics.macro.f1);
    CHECK(report.ensembled.micro.f1 == report.per_seed[0].metrics.micro.f1);
}

TEST_CASE("ranking flag fills AP per fold and mAP") {
    const PUDataset ds = generate_scar(separable_config(200, 0.5, 0.8, 11));
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 2, 1);
    TrainMode mode;
    ExperimentOptions options;
    options.ranking = true;
    const EvalReport report = run_experiment(ds, plan, mode, quick_cfg(1, 4), {1, 2}, options);
    for (const auto& row : report.per_fold) CHECK(row.ap.has_value());
    for (const auto& sm : report.per_seed) CHECK(sm.metrics.map.has_value());
    CHECK(report.aggregate_mean.map.has_value());
    CHECK(report.ensembled.map.has_value());
    CHECK(*report.aggregate_mean.map > 0.0);
    CHECK(*report.aggregate_mean.map <= 1.0);
}

TEST_CASE("leave-one-group-out experiment runs end to end") {
    PUDataset ds = generate_scar(separable_config(250, 0.5, 0.8, 12));
    for (auto& smp : ds.samples) smp.group = smp.id % 5;
    const FoldPlan plan = build_fold_plan(ds, FoldKind::LeaveOneGroupOut, 0, 0);
    TrainMode mode;
    mode.tag = ModeTag::PU;
    const EvalReport report = run_experiment(ds, plan, mode, quick_cfg(4, 4), {1});
    CHECK(report.fold_count == 5);
    CHECK(report.per_fold.size() == 5);
    CHECK(report.aggregate_mean.macro.f1 > 0.5);  // separable data
}

TEST_CASE("csv report carries one row per fold-seed plus aggregates") {
    const PUDataset ds = generate_scar(separable_config(200, 0.5, 1.0, 13));
    const FoldPlan plan = build_fold_plan(ds, FoldKind::KFold, 2, 1);
    TrainMode mode;
    const EvalReport report = run_experiment(ds, plan, mode, quick_cfg(1, 6), {1, 2, 3});
    const std::string csv = report_to_csv(report);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 + 3 + 3);  // header, rows, per-seed, aggregates
    CHECK(csv.find("aggregate_mean") != std::string::npos);
    CHECK(csv.find("aggregate_std") != std::string::npos);
    CHECK(csv.find("ensembled") != std::string::npos);
}
