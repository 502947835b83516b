#include "puckit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "puckit/common.hpp"
#include "puckit/rng.hpp"

namespace puckit {

FoldPlan build_fold_plan(const PUDataset& ds, FoldKind kind, int k, std::uint64_t seed) {
    const int n = ds.size();
    if (n == 0) throw ValidationError("cannot build folds over an empty dataset");
    FoldPlan plan;
    plan.kind = kind;
    if (kind == FoldKind::LeaveOneGroupOut) {
        std::map<int, std::vector<int>> by_group;
        for (const auto& smp : ds.samples) {
            if (!smp.group.has_value())
                throw ConfigError("missing group annotations (sample id " +
                                  std::to_string(smp.id) + ")");
            by_group[*smp.group].push_back(smp.id);
        }
        if (by_group.size() < 2)
            throw ConfigError("leave-one-group-out needs at least two distinct groups");
        for (auto& [group, ids] : by_group) {
            plan.fold_keys.push_back(group);
            plan.test_ids.push_back(std::move(ids));
        }
    } else {
        if (k < 2) throw ConfigError("k-fold needs k >= 2");
        if (k > n) throw ConfigError("k-fold needs k <= dataset size");
        std::vector<int> ids(n);
        std::iota(ids.begin(), ids.end(), 0);
        Rng rng(derive_seed(seed, seed_tag::fold_plan));
        rng.shuffle(ids);
        const int base = n / k;
        const int extra = n % k;  // first n mod k folds take one more
        int cursor = 0;
        for (int f = 0; f < k; ++f) {
            const int size = base + (f < extra ? 1 : 0);
            std::vector<int> fold(ids.begin() + cursor, ids.begin() + cursor + size);
            cursor += size;
            std::sort(fold.begin(), fold.end());
            plan.fold_keys.push_back(f);
            plan.test_ids.push_back(std::move(fold));
        }
    }
    return plan;
}

namespace {

struct RunOutput {
    std::vector<int> preds;
    std::vector<double> scores;  // predict_proba per test sample, fold order
    Confusion confusion;
    Prf prf;
    std::optional<double> ap;
};

double ap_of_ranking(const std::vector<double>& scores, const std::vector<int>& golds,
                     const std::vector<int>& tie_ids) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return tie_ids[a] < tie_ids[b];
    });
    std::vector<int> ranked(golds.size());
    for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = golds[order[i]];
    return average_precision(ranked);
}

Prf mean_prf(const std::vector<Prf>& values) {
    Prf out;
    for (const auto& v : values) {
        out.precision += v.precision;
        out.recall += v.recall;
        out.f1 += v.f1;
    }
    const double n = static_cast<double>(values.size());
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

struct Welford {
    double mean = 0.0;
    double stddev = 0.0;
};

Welford mean_std(const std::vector<double>& values) {
    Welford out;
    const double n = static_cast<double>(values.size());
    for (double v : values) out.mean += v;
    out.mean /= n;
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(sq / n);  // population
    return out;
}

}  // namespace

EvalReport run_experiment(const PUDataset& ds, const FoldPlan& plan, const TrainMode& mode,
                          const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                          const ExperimentOptions& options) {
    if (seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (plan.test_ids.empty()) throw ConfigError("fold plan has no folds");

    {
        std::vector<int> missing;
        for (const auto& smp : ds.samples)
            if (!smp.truth.has_value()) missing.push_back(smp.id);
        if (!missing.empty()) {
            std::string list;
            for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
                list += (i ? "," : "") + std::to_string(missing[i]);
            if (missing.size() > 20) list += ",...";
            throw MissingLabelError("gold truth labels missing for ids: " + list);
        }
    }

    const int n_folds = static_cast<int>(plan.test_ids.size());
    const int n_seeds = static_cast<int>(seeds.size());

    // Per-fold training subsets, shared read-only across workers.
    std::vector<PUDataset> fold_train(n_folds);
    std::vector<std::vector<int>> fold_train_ids(n_folds);
    {
        std::vector<char> in_test(ds.size());
        for (int f = 0; f < n_folds; ++f) {
            std::fill(in_test.begin(), in_test.end(), 0);
            for (int id : plan.test_ids[f]) {
                if (id < 0 || id >= ds.size())
                    throw ValidationError("fold plan references id " + std::to_string(id));
                in_test[id] = 1;
            }
            for (int id = 0; id < ds.size(); ++id)
                if (!in_test[id]) fold_train_ids[f].push_back(id);
            fold_train[f] = subset(ds, fold_train_ids[f]);
        }
    }

    std::vector<std::vector<RunOutput>> runs(n_folds, std::vector<RunOutput>(n_seeds));
    std::vector<std::vector<std::string>> run_warnings(n_folds * n_seeds);

    auto run_one = [&](int f, int s) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(seeds[s], seed_tag::fold_run, static_cast<std::uint64_t>(f));
        ModeRun result = run_mode(fold_train[f], mode, run_cfg, options.pipeline);
        run_warnings[f * n_seeds + s] = std::move(result.warnings);

        RunOutput out;
        const auto& test = plan.test_ids[f];
        out.preds.resize(test.size());
        out.scores.resize(test.size());
        std::vector<int> golds(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            const Sample& smp = ds.samples[test[i]];
            out.scores[i] = result.g.predict_proba(smp.features);
            out.preds[i] = out.scores[i] >= 0.5 ? 1 : 0;
            golds[i] = *smp.truth;
        }
        out.confusion = confusion_counts(out.preds, golds);
        out.prf = prf_from_confusion(out.confusion);
        if (options.ranking) out.ap = ap_of_ranking(out.scores, golds, plan.test_ids[f]);
        runs[f][s] = std::move(out);
    };

    const int total = n_folds * n_seeds;
    if (options.jobs > 1) {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const int task = next.fetch_add(1);
                if (task >= total) return;
                try {
                    run_one(task / n_seeds, task % n_seeds);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const int n_workers = std::min(options.jobs, total);
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    } else {
        for (int f = 0; f < n_folds; ++f)
            for (int s = 0; s < n_seeds; ++s) run_one(f, s);
    }

    EvalReport report;
    report.fold_count = n_folds;
    report.seeds = seeds;
    report.ranking = options.ranking;
    for (int f = 0; f < n_folds; ++f)
        for (int s = 0; s < n_seeds; ++s) {
            const RunOutput& r = runs[f][s];
            report.per_fold.push_back(
                {f, seeds[s], r.prf.precision, r.prf.recall, r.prf.f1, r.ap});
        }
    for (const auto& w : run_warnings)
        for (const auto& msg : w)
            if (std::find(report.warnings.begin(), report.warnings.end(), msg) ==
                report.warnings.end())
                report.warnings.push_back(msg);

    for (int s = 0; s < n_seeds; ++s) {
        SeedMetrics sm;
        sm.seed = seeds[s];
        std::vector<Prf> fold_prfs;
        Confusion pooled;
        double ap_sum = 0.0;
        for (int f = 0; f < n_folds; ++f) {
            const RunOutput& r = runs[f][s];
            fold_prfs.push_back(r.prf);
            pooled.tp += r.confusion.tp;
            pooled.fp += r.confusion.fp;
            pooled.fn += r.confusion.fn;
            pooled.tn += r.confusion.tn;
            if (r.ap) ap_sum += *r.ap;
        }
        sm.metrics.macro = mean_prf(fold_prfs);
        sm.metrics.micro = prf_from_confusion(pooled);
        if (options.ranking) sm.metrics.map = ap_sum / n_folds;
        report.per_seed.push_back(sm);
    }

    auto collect = [&](auto getter) {
        std::vector<double> values;
        values.reserve(n_seeds);
        for (const auto& sm : report.per_seed) values.push_back(getter(sm.metrics));
        return mean_std(values);
    };
    auto fill_stats = [&](GroupMetrics& mean, GroupMetrics& std_out) {
        Welford w;
        w = collect([](const GroupMetrics& m) { return m.macro.precision; });
        mean.macro.precision = w.mean;
        std_out.macro.precision = w.stddev;
        w = collect([](const GroupMetrics& m) { return m.macro.recall; });
        mean.macro.recall = w.mean;
        std_out.macro.recall = w.stddev;
        w = collect([](const GroupMetrics& m) { return m.macro.f1; });
        mean.macro.f1 = w.mean;
        std_out.macro.f1 = w.stddev;
        w = collect([](const GroupMetrics& m) { return m.micro.precision; });
        mean.micro.precision = w.mean;
        std_out.micro.precision = w.stddev;
        w = collect([](const GroupMetrics& m) { return m.micro.recall; });
        mean.micro.recall = w.mean;
        std_out.micro.recall = w.stddev;
        w = collect([](const GroupMetrics& m) { return m.micro.f1; });
        mean.micro.f1 = w.mean;
        std_out.micro.f1 = w.stddev;
        if (options.ranking) {
            w = collect([](const GroupMetrics& m) { return *m.map; });
            mean.map = w.mean;
            std_out.map = w.stddev;
        }
    };
    fill_stats(report.aggregate_mean, report.aggregate_std);

    // Ensembled view: majority vote per test sample across seeds; the
    // ranking score is the vote count, ties broken by mean probability.
    {
        std::vector<Prf> fold_prfs;
        Confusion pooled;
        double ap_sum = 0.0;
        for (int f = 0; f < n_folds; ++f) {
            const auto& test = plan.test_ids[f];
            std::vector<int> votes(test.size(), 0);
            std::vector<double> prob_sum(test.size(), 0.0);
            for (int s = 0; s < n_seeds; ++s)
                for (std::size_t i = 0; i < test.size(); ++i) {
                    votes[i] += runs[f][s].preds[i];
                    prob_sum[i] += runs[f][s].scores[i];
                }
            std::vector<int> preds(test.size());
            std::vector<int> golds(test.size());
            std::vector<double> scores(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) {
                preds[i] = 2 * votes[i] >= n_seeds ? 1 : 0;
                golds[i] = *ds.samples[test[i]].truth;
                scores[i] = votes[i] + prob_sum[i] / n_seeds;  // votes dominate, mean prob breaks ties
            }
            Confusion c = confusion_counts(preds, golds);
            fold_prfs.push_back(prf_from_confusion(c));
            pooled.tp += c.tp;
            pooled.fp += c.fp;
            pooled.fn += c.fn;
            pooled.tn += c.tn;
            if (options.ranking) ap_sum += ap_of_ranking(scores, golds, test);
        }
        report.ensembled.macro = mean_prf(fold_prfs);
        report.ensembled.micro = prf_from_confusion(pooled);
        if (options.ranking) report.ensembled.map = ap_sum / n_folds;
    }
    return report;
}

namespace {

nlohmann::json prf_json(const Prf& v) {
    return {{"precision", v.precision}, {"recall", v.recall}, {"f1", v.f1}};
}

nlohmann::json group_json(const GroupMetrics& m) {
    nlohmann::json obj;
    obj["macro"] = prf_json(m.macro);
    obj["micro"] = prf_json(m.micro);
    if (m.map) obj["map"] = *m.map;
    return obj;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::json obj;
    obj["schema_version"] = 1;
    obj["kind"] = "eval_report";
    obj["folds"] = report.fold_count;
    obj["seeds"] = report.seeds;
    obj["ranking"] = report.ranking;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.per_fold) {
        nlohmann::json row = {{"fold", r.fold},
                              {"seed", r.seed},
                              {"precision", r.precision},
                              {"recall", r.recall},
                              {"f1", r.f1}};
        if (r.ap) row["ap"] = *r.ap;
        rows.push_back(std::move(row));
    }
    obj["per_fold"] = std::move(rows);
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& sm : report.per_seed) {
        nlohmann::json row = group_json(sm.metrics);
        row["seed"] = sm.seed;
        per_seed.push_back(std::move(row));
    }
    obj["per_seed"] = std::move(per_seed);
    obj["aggregate"] = {{"mean", group_json(report.aggregate_mean)},
                        {"std", group_json(report.aggregate_std)}};
    obj["ensembled"] = group_json(report.ensembled);
    obj["warnings"] = report.warnings;
    return obj.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "row_kind,fold,seed,precision,recall,f1,ap,micro_precision,micro_recall,micro_f1,map\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : report.per_fold)
        out << "fold_seed," << r.fold << ',' << r.seed << ',' << format_double(r.precision) << ','
            << format_double(r.recall) << ',' << format_double(r.f1) << ',' << opt(r.ap)
            << ",,,,\n";
    auto group_row = [&](const std::string& kind, const std::string& seed,
                         const GroupMetrics& m) {
        out << kind << ",," << seed << ',' << format_double(m.macro.precision) << ','
            << format_double(m.macro.recall) << ',' << format_double(m.macro.f1) << ",,"
            << format_double(m.micro.precision) << ',' << format_double(m.micro.recall) << ','
            << format_double(m.micro.f1) << ',' << opt(m.map) << "\n";
    };
    for (const auto& sm : report.per_seed)
        group_row("per_seed", std::to_string(sm.seed), sm.metrics);
    group_row("aggregate_mean", "", report.aggregate_mean);
    group_row("aggregate_std", "", report.aggregate_std);
    group_row("ensembled", "", report.ensembled);
    return out.str();
}

}  // namespace puckit
