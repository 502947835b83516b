#include "puckit/pipeline.hpp"

#include <algorithm>

#include "puckit/common.hpp"
#include "puckit/rng.hpp"

namespace puckit {

std::string mode_name(ModeTag tag) {
    switch (tag) {
        case ModeTag::PN: return "pn";
        case ModeTag::PU: return "pu";
        case ModeTag::PUC: return "puc";
    }
    return "pn";
}

ModeTag mode_from_name(const std::string& name) {
    if (name == "pn") return ModeTag::PN;
    if (name == "pu") return ModeTag::PU;
    if (name == "puc") return ModeTag::PUC;
    throw ConfigError("unknown mode \"" + name + "\" (expected pn, pu or puc)");
}

namespace {

struct SplitParts {
    SplitSpec split;
    PUDataset train;  // local ids 0..m-1; original id = split.train_ids[local]
    PUDataset val;
};

SplitParts make_split(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts,
                      bool require_labelled_val) {
    SplitParts parts;
    parts.split = split_train_val(ds, opts.train_ratio, derive_seed(cfg.seed, seed_tag::split),
                                  require_labelled_val);
    parts.train = subset(ds, parts.split.train_ids);
    parts.val = subset(ds, parts.split.val_ids);
    return parts;
}

TrainConfig with_seed(const TrainConfig& cfg, std::uint64_t seed) {
    TrainConfig out = cfg;
    out.seed = seed;
    return out;
}

std::vector<WeightedExample> pn_examples(const PUDataset& ds) {
    std::vector<WeightedExample> out;
    out.reserve(ds.size());
    for (const auto& smp : ds.samples) out.push_back({smp.features, smp.s, 1.0});
    return out;
}

void check_warm_start(const PipelineOptions& opts, int dim) {
    if (opts.warm_start != nullptr && opts.warm_start->input_dim != dim)
        throw IncompatError("warm-start model expects " +
                            std::to_string(opts.warm_start->input_dim) + " features, dataset has " +
                            std::to_string(dim));
}

ProbClassifier train_g(std::span<const WeightedExample> examples, const PUDataset& val,
                       const TrainConfig& cfg, const PipelineOptions& opts) {
    return train(examples, val, with_seed(cfg, derive_seed(cfg.seed, seed_tag::train_g)),
                 opts.warm_start);
}

// f, its estimated label frequency and its scores over the full dataset.
struct PuStage {
    ProbClassifier f;
    double c = 1.0;
    std::vector<double> probs;  // f over the full dataset, by id
    std::vector<std::string> warnings;
};

PuStage run_pu_stage(const PUDataset& ds, const SplitParts& parts, const TrainConfig& cfg,
                     const PipelineOptions& opts) {
    PuStage stage;
    if (ds.labelled_count() == 0)
        throw ValidationError("PU training needs at least one labelled sample");
    stage.f = train(pn_examples(parts.train), parts.val,
                    with_seed(cfg, derive_seed(cfg.seed, seed_tag::train_f)), nullptr);
    if (opts.known_c.has_value()) {
        if (!(*opts.known_c > 0.0 && *opts.known_c <= 1.0))
            throw ConfigError("known_c must be in (0,1]");
        stage.c = *opts.known_c;
    } else {
        std::vector<int> all_val(parts.val.size());
        for (int i = 0; i < parts.val.size(); ++i) all_val[i] = i;
        stage.c = estimate_c(stage.f, parts.val, all_val);
    }
    stage.probs = predict_all(stage.f, ds);
    if (ds.labelled_count() == ds.size())
        stage.warnings.push_back("no unlabelled samples; PU degenerates to PN");
    return stage;
}

void append_prior_warning(double prior, std::vector<std::string>& warnings) {
    if (prior > 0.95)
        warnings.push_back("estimated prior " + format_double(prior) +
                           " is near 1; conversion will relabel nearly all unlabelled samples");
}

// Rows with an exactly zero weight are no-ops for the objective; dropping
// them keeps batch boundaries identical to the PN stream when c = 1.
void push_pair(std::vector<WeightedExample>& out, const Sample& smp, double w) {
    if (w != 0.0) out.push_back({smp.features, 1, w});
    if (1.0 - w != 0.0) out.push_back({smp.features, 0, 1.0 - w});
}

}  // namespace

PnResult train_pn(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts) {
    check_warm_start(opts, ds.dim);
    SplitParts parts = make_split(ds, cfg, opts, /*require_labelled_val=*/false);
    PnResult out;
    out.split = parts.split;
    out.g = train_g(pn_examples(parts.train), parts.val, cfg, opts);
    return out;
}

PuResult train_pu(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts) {
    check_warm_start(opts, ds.dim);
    SplitParts parts = make_split(ds, cfg, opts, /*require_labelled_val=*/true);
    PuStage stage = run_pu_stage(ds, parts, cfg, opts);

    PuResult out;
    out.split = parts.split;
    out.f = stage.f;
    out.warnings = stage.warnings;
    out.est = estimate_pu(ds, stage.probs, stage.c);
    append_prior_warning(out.est.prior, out.warnings);

    std::vector<WeightedExample> examples;
    for (const auto& smp : parts.train.samples) {
        if (smp.s == 1)
            examples.push_back({smp.features, 1, 1.0});
        else
            push_pair(examples, smp, out.est.weights.at(parts.split.train_ids[smp.id]));
    }
    out.g = train_g(examples, parts.val, cfg, opts);
    return out;
}

PucResult train_puc(const PUDataset& ds, const TrainConfig& cfg, const PipelineOptions& opts) {
    check_warm_start(opts, ds.dim);
    SplitParts parts = make_split(ds, cfg, opts, /*require_labelled_val=*/true);
    PuStage stage = run_pu_stage(ds, parts, cfg, opts);

    PucResult out;
    out.split = parts.split;
    out.f = stage.f;
    out.warnings = stage.warnings;
    out.est = estimate_pu(ds, stage.probs, stage.c);
    append_prior_warning(out.est.prior, out.warnings);
    out.conv = puc_convert(ds, stage.probs, stage.c);

    // Converted train rows join the labelled ones as weight-1 positives, in
    // dataset order; the rest keep the duplicated weighted pairs. Converted
    // validation rows stay held out.
    std::vector<WeightedExample> examples;
    for (const auto& smp : parts.train.samples) {
        const int orig_id = parts.split.train_ids[smp.id];
        if (out.conv.labels[orig_id] == 1)
            examples.push_back({smp.features, 1, 1.0});
        else
            push_pair(examples, smp, out.est.weights.at(orig_id));
    }
    out.g = train_g(examples, parts.val, cfg, opts);
    return out;
}

ModeRun run_mode(const PUDataset& ds, const TrainMode& mode, const TrainConfig& cfg,
                 const PipelineOptions& opts) {
    PipelineOptions effective = opts;
    ProbClassifier warm;
    if (mode.transfer_source != nullptr) {
        if (mode.transfer_source->input_dim != ds.dim)
            throw IncompatError("pretrained model expects " +
                                std::to_string(mode.transfer_source->input_dim) +
                                " features, dataset has " + std::to_string(ds.dim));
        warm = reinit_head(*mode.transfer_source, cfg.seed);
        effective.warm_start = &warm;
    }
    ModeRun out;
    switch (mode.tag) {
        case ModeTag::PN: {
            PnResult r = train_pn(ds, cfg, effective);
            out.g = std::move(r.g);
            out.split = std::move(r.split);
            out.warnings = std::move(r.warnings);
            break;
        }
        case ModeTag::PU: {
            PuResult r = train_pu(ds, cfg, effective);
            out.g = std::move(r.g);
            out.f = std::move(r.f);
            out.est = std::move(r.est);
            out.split = std::move(r.split);
            out.warnings = std::move(r.warnings);
            break;
        }
        case ModeTag::PUC: {
            PucResult r = train_puc(ds, cfg, effective);
            out.g = std::move(r.g);
            out.f = std::move(r.f);
            out.est = std::move(r.est);
            out.conv = std::move(r.conv);
            out.split = std::move(r.split);
            out.warnings = std::move(r.warnings);
            break;
        }
    }
    return out;
}

TransferResult pretrain_finetune(const PUDataset& source, const PUDataset& target,
                                 const TrainMode& source_mode, const TrainMode& target_mode,
                                 const TrainConfig& cfg) {
    if (source.dim != target.dim)
        throw IncompatError("transfer requires equal feature dimensions: source has " +
                            std::to_string(source.dim) + ", target has " +
                            std::to_string(target.dim));
    TransferResult out;
    const std::uint64_t target_seed = derive_seed(cfg.seed, seed_tag::transfer_target);
    out.source = run_mode(source, source_mode,
                          with_seed(cfg, derive_seed(cfg.seed, seed_tag::transfer_source)));
    out.warm_start = reinit_head(out.source.g, target_seed);

    PipelineOptions opts;
    opts.warm_start = &out.warm_start;
    TrainMode plain_target = target_mode;
    plain_target.transfer_source = nullptr;  // warm start supplied explicitly
    out.target = run_mode(target, plain_target, with_seed(cfg, target_seed), opts);
    return out;
}

int ensemble_predict(const EnsembleModel& e, std::span<const double> x) {
    if (e.members.empty()) throw ValidationError("ensemble has no members");
    int votes = 0;
    for (const auto& m : e.members) votes += m.predict_proba(x) >= e.threshold ? 1 : 0;
    return 2 * votes >= static_cast<int>(e.members.size()) ? 1 : 0;
}

}  // namespace puckit
