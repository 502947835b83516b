// puckit: batch front end for PU/PUC training, synthetic SCAR data
// generation and cross-validated evaluation. Each command takes a JSON
// config; command-line flags override config fields. Exit codes: 0 success,
// 2 config validation, 3 model/data incompatibility, 4 missing gold labels,
// 1 anything else.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "puckit/common.hpp"
#include "puckit/dataset.hpp"
#include "puckit/eval.hpp"
#include "puckit/pipeline.hpp"
#include "puckit/pu.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "puckit 0.1.0";

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw puckit::ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw puckit::ConfigError("config parse failure in " + path + ": " + e.what());
    }
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw puckit::Error("cannot open for writing: " + path.string());
    out << contents;
    puckit::log_msg(puckit::LogLevel::Info, "wrote " + path.string());
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw puckit::Error("cannot open for fingerprinting: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(puckit::fnv1a64(ss.str())));
    return buf;
}

puckit::FileFormat format_for(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
        return puckit::FileFormat::Jsonl;
    return puckit::FileFormat::Csv;
}

puckit::ScarConfig parse_scar(const json& cfg) {
    puckit::ScarConfig scar;
    scar.n = cfg.at("n").get<int>();
    scar.prior = cfg.at("prior").get<double>();
    scar.label_freq = cfg.at("label_freq").get<double>();
    scar.seed = cfg.value("seed", 0ull);
    const json& fm = cfg.at("feature_model");
    scar.dim = fm.at("dim").get<int>();
    scar.mean_pos = fm.at("mean_pos").get<std::vector<double>>();
    scar.mean_neg = fm.at("mean_neg").get<std::vector<double>>();
    scar.var = fm.at("var").get<std::vector<double>>();
    scar.validate();
    return scar;
}

puckit::TrainConfig parse_train(const json& cfg, std::uint64_t seed) {
    puckit::TrainConfig tc;
    if (cfg.contains("train")) {
        const json& t = cfg["train"];
        tc.max_lr = t.value("max_lr", tc.max_lr);
        tc.warmup_steps = t.value("warmup_steps", tc.warmup_steps);
        tc.weight_decay = t.value("weight_decay", tc.weight_decay);
        tc.epochs = t.value("epochs", tc.epochs);
        tc.batch_size = t.value("batch_size", tc.batch_size);
        tc.hidden_dim = t.value("hidden_dim", tc.hidden_dim);
    }
    tc.seed = seed;
    tc.validate();
    return tc;
}

json train_config_json(const puckit::TrainConfig& tc) {
    return {{"max_lr", tc.max_lr},         {"warmup_steps", tc.warmup_steps},
            {"weight_decay", tc.weight_decay}, {"epochs", tc.epochs},
            {"batch_size", tc.batch_size}, {"hidden_dim", tc.hidden_dim}};
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::string mode;
    std::string pretrained;
    std::string seeds;
    std::string folds;
    bool ranking = false;
    int jobs = 0;
};

int cmd_generate(const CommonFlags& flags) {
    const json cfg = load_config(flags.config_path);
    const puckit::ScarConfig scar = parse_scar(cfg);
    const puckit::PUDataset ds = puckit::generate_scar(scar);

    fs::create_directories(flags.out_dir);
    const fs::path data_path = fs::path(flags.out_dir) / "dataset.csv";
    puckit::save_dataset_csv(ds, data_path.string());

    json meta;
    meta["true_prior"] = scar.prior;
    meta["true_label_freq"] = scar.label_freq;
    meta["n"] = scar.n;
    meta["seed"] = scar.seed;
    meta["feature_model"] = {{"dim", scar.dim},
                             {"mean_pos", scar.mean_pos},
                             {"mean_neg", scar.mean_neg},
                             {"var", scar.var}};
    write_file(fs::path(flags.out_dir) / "dataset_meta.json", meta.dump(2) + "\n");
    puckit::log_msg(puckit::LogLevel::Info, "generated " + std::to_string(ds.size()) + " samples");
    return 0;
}

puckit::TrainMode make_mode(const std::string& mode_name, const std::string& pretrained) {
    puckit::TrainMode mode;
    mode.tag = puckit::mode_from_name(mode_name);
    if (!pretrained.empty()) {
        auto source = std::make_shared<puckit::ProbClassifier>(puckit::load_classifier(pretrained));
        mode.transfer_source = std::move(source);
    }
    return mode;
}

int cmd_train(const CommonFlags& flags) {
    const json cfg = load_config(flags.config_path);
    const std::string dataset_path = cfg.at("dataset").get<std::string>();
    const std::string mode_str = !flags.mode.empty() ? flags.mode : cfg.value("mode", "pn");
    const std::string pretrained =
        !flags.pretrained.empty() ? flags.pretrained : cfg.value("pretrained", "");
    const std::uint64_t seed = cfg.value("seed", 0ull);
    const puckit::TrainConfig tc = parse_train(cfg, seed);

    puckit::PipelineOptions opts;
    opts.train_ratio = cfg.value("ratio", 0.8);

    const puckit::PUDataset ds = puckit::load_dataset(dataset_path, format_for(dataset_path));
    const puckit::TrainMode mode = make_mode(mode_str, pretrained);
    const puckit::ModeRun run = puckit::run_mode(ds, mode, tc, opts);

    fs::create_directories(flags.out_dir);
    const fs::path out(flags.out_dir);
    puckit::save_classifier(run.g, (out / "model.json").string());
    json outputs = {{"model", "model.json"}};
    if (run.f) {
        puckit::save_classifier(*run.f, (out / "f_model.json").string());
        outputs["f_model"] = "f_model.json";
    }
    if (run.est) {
        const puckit::ConvertedDataset* conv_ptr = run.conv ? &*run.conv : nullptr;
        write_file(out / "estimates.json",
                   puckit::estimates_to_json(*run.est, conv_ptr, run.warnings));
        outputs["estimates"] = "estimates.json";
    }

    json manifest;
    manifest["command"] = "train";
    manifest["version"] = kVersion;
    manifest["mode"] = mode_str;
    manifest["seed"] = seed;
    manifest["ratio"] = opts.train_ratio;
    manifest["train_config"] = train_config_json(tc);
    manifest["dataset"] = {{"path", dataset_path}, {"fnv1a64", file_fingerprint(dataset_path)}};
    if (!pretrained.empty())
        manifest["pretrained"] = {{"path", pretrained}, {"fnv1a64", file_fingerprint(pretrained)}};
    if (run.est) {
        manifest["c"] = run.est->c;
        manifest["prior"] = run.est->prior;
        if (run.conv) manifest["converted_count"] = run.conv->converted_ids.size();
    }
    manifest["outputs"] = outputs;
    manifest["warnings"] = run.warnings;
    manifest["timestamp"] = iso_timestamp();
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            seeds.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw puckit::ConfigError("--seeds expects comma-separated integers, got \"" + item +
                                      "\"");
        }
    }
    return seeds;
}

int cmd_eval(const CommonFlags& flags) {
    const json cfg = load_config(flags.config_path);
    const std::string dataset_path = cfg.at("dataset").get<std::string>();
    const std::string mode_str = !flags.mode.empty() ? flags.mode : cfg.value("mode", "pn");
    const std::string pretrained =
        !flags.pretrained.empty() ? flags.pretrained : cfg.value("pretrained", "");
    const std::uint64_t seed = cfg.value("seed", 0ull);
    const puckit::TrainConfig tc = parse_train(cfg, seed);

    std::vector<std::uint64_t> seeds;
    if (!flags.seeds.empty())
        seeds = parse_seed_list(flags.seeds);
    else if (cfg.contains("seeds"))
        seeds = cfg["seeds"].get<std::vector<std::uint64_t>>();
    if (seeds.empty()) throw puckit::ConfigError("seed list must be non-empty");

    std::string fold_kind;
    int fold_k = 0;
    if (!flags.folds.empty()) {
        if (flags.folds == "logo" || flags.folds == "leave_one_group_out") {
            fold_kind = "leave_one_group_out";
        } else if (flags.folds.rfind("kfold:", 0) == 0) {
            fold_kind = "kfold";
            try {
                fold_k = std::stoi(flags.folds.substr(6));
            } catch (const std::exception&) {
                throw puckit::ConfigError("--folds kfold:<k> expects an integer k");
            }
        } else {
            throw puckit::ConfigError("--folds expects kfold:<k> or logo");
        }
    } else if (cfg.contains("folds")) {
        fold_kind = cfg["folds"].value("kind", "kfold");
        fold_k = cfg["folds"].value("k", 0);
    } else {
        throw puckit::ConfigError("eval config needs a folds specification");
    }

    puckit::ExperimentOptions options;
    options.ranking = flags.ranking || cfg.value("ranking", false);
    options.jobs = flags.jobs > 0 ? flags.jobs : cfg.value("jobs", 1);
    options.pipeline.train_ratio = cfg.value("ratio", 0.8);

    const puckit::PUDataset ds = puckit::load_dataset(dataset_path, format_for(dataset_path));
    const puckit::FoldKind kind = fold_kind == "leave_one_group_out"
                                      ? puckit::FoldKind::LeaveOneGroupOut
                                      : puckit::FoldKind::KFold;
    const puckit::FoldPlan plan = puckit::build_fold_plan(ds, kind, fold_k, seed);
    const puckit::TrainMode mode = make_mode(mode_str, pretrained);

    const puckit::EvalReport report = puckit::run_experiment(ds, plan, mode, tc, seeds, options);

    fs::create_directories(flags.out_dir);
    const fs::path out(flags.out_dir);
    write_file(out / "report.json", puckit::report_to_json(report));
    write_file(out / "report.csv", puckit::report_to_csv(report));

    json manifest;
    manifest["command"] = "eval";
    manifest["version"] = kVersion;
    manifest["mode"] = mode_str;
    manifest["seed"] = seed;
    manifest["seeds"] = seeds;
    manifest["folds"] = {{"kind", fold_kind}, {"k", fold_k}, {"count", report.fold_count}};
    manifest["ranking"] = options.ranking;
    manifest["jobs"] = options.jobs;
    manifest["train_config"] = train_config_json(tc);
    manifest["dataset"] = {{"path", dataset_path}, {"fnv1a64", file_fingerprint(dataset_path)}};
    if (!pretrained.empty())
        manifest["pretrained"] = {{"path", pretrained}, {"fnv1a64", file_fingerprint(pretrained)}};
    manifest["outputs"] = {{"report_json", "report.json"}, {"report_csv", "report.csv"}};
    manifest["timestamp"] = iso_timestamp();
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PU/PUC learning toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    auto add_common = [&](CLI::App* sub, bool with_train_flags) {
        sub->add_option("--config", flags.config_path, "JSON config file")->required();
        sub->add_option("--out", flags.out_dir, "output directory");
        if (with_train_flags) {
            sub->add_option("--mode", flags.mode, "pn, pu or puc");
            sub->add_option("--pretrained", flags.pretrained, "serialized source model");
        }
    };

    CLI::App* gen = app.add_subcommand("generate", "synthesize a SCAR dataset");
    add_common(gen, false);
    CLI::App* train = app.add_subcommand("train", "train one model in a given mode");
    add_common(train, true);
    CLI::App* eval = app.add_subcommand("eval", "cross-validated multi-seed evaluation");
    add_common(eval, true);
    eval->add_option("--seeds", flags.seeds, "comma-separated seed list");
    eval->add_option("--folds", flags.folds, "kfold:<k> or logo");
    eval->add_flag("--ranking", flags.ranking, "report AP per fold and mAP");
    eval->add_option("--jobs", flags.jobs, "parallel (fold,seed) workers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(flags);
        if (train->parsed()) return cmd_train(flags);
        if (eval->parsed()) return cmd_eval(flags);
        return 2;
    } catch (const puckit::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const puckit::IncompatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const puckit::MissingLabelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
