#include "puckit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "puckit/common.hpp"
#include "puckit/rng.hpp"

namespace puckit {

int PUDataset::labelled_count() const {
    int n = 0;
    for (const auto& smp : samples) n += smp.s;
    return n;
}

bool PUDataset::has_truth() const {
    for (const auto& smp : samples) {
        if (!smp.truth.has_value()) return false;
    }
    return !samples.empty();
}

void PUDataset::validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& smp = samples[i];
        if (smp.id != static_cast<int>(i))
            throw ValidationError("sample ids must be contiguous from 0, got id " +
                                  std::to_string(smp.id) + " at row " + std::to_string(i));
        if (static_cast<int>(smp.features.size()) != dim)
            throw FormatError("row " + std::to_string(i) + " has " +
                              std::to_string(smp.features.size()) + " features, expected " +
                              std::to_string(dim));
        if (smp.s != 0 && smp.s != 1)
            throw ValidationError("label must be 0 or 1, got " + std::to_string(smp.s) +
                                  " at id " + std::to_string(smp.id));
        if (smp.truth && *smp.truth != 0 && *smp.truth != 1)
            throw ValidationError("truth must be 0 or 1, got " + std::to_string(*smp.truth) +
                                  " at id " + std::to_string(smp.id));
        if (smp.truth && smp.s == 1 && *smp.truth != 1)
            throw ValidationError("labelled sample with truth 0 at id " + std::to_string(smp.id) +
                                  " (labelled samples are positive)");
    }
}

void ScarConfig::validate() const {
    if (n <= 0) throw ConfigError("n must be positive");
    if (!(prior > 0.0 && prior < 1.0)) throw ConfigError("prior out of range (0,1)");
    if (!(label_freq > 0.0 && label_freq <= 1.0)) throw ConfigError("label_freq out of range (0,1]");
    if (dim <= 0) throw ConfigError("dim must be positive");
    if (static_cast<int>(mean_pos.size()) != dim || static_cast<int>(mean_neg.size()) != dim ||
        static_cast<int>(var.size()) != dim)
        throw ConfigError("feature_model vectors must have length dim");
    for (double v : var)
        if (!(v > 0.0)) throw ConfigError("variances must be positive");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

int parse_binary(const std::string& field, const char* what, int row) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw ValidationError(std::string(what) + " must be 0 or 1, got \"" + field + "\" at row " +
                          std::to_string(row));
}

double parse_real(const std::string& field, int row) {
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw FormatError("unparseable number \"" + field + "\" at row " + std::to_string(row));
    return v;
}

PUDataset load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty dataset");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label")
        throw FormatError("csv header must start with id,label[,truth],f0..");
    bool has_truth = header.size() > 2 && header[2] == "truth";
    std::size_t feat_start = has_truth ? 3 : 2;
    int dim = static_cast<int>(header.size() - feat_start);
    if (dim <= 0) throw FormatError("csv header declares no feature columns");

    PUDataset ds;
    ds.dim = dim;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw FormatError("row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(header.size()));
        Sample smp;
        smp.id = static_cast<int>(parse_real(fields[0], row));
        smp.s = parse_binary(fields[1], "label", row);
        if (has_truth) smp.truth = parse_binary(fields[2], "truth", row);
        smp.features.reserve(dim);
        for (std::size_t j = feat_start; j < fields.size(); ++j)
            smp.features.push_back(parse_real(fields[j], row));
        ds.samples.push_back(std::move(smp));
        ++row;
    }
    if (ds.samples.empty()) throw FormatError("empty dataset");
    ds.validate();
    return ds;
}

PUDataset load_jsonl(std::istream& in) {
    PUDataset ds;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("jsonl parse failure at row " + std::to_string(row) + ": " + e.what());
        }
        if (!obj.contains("id") || !obj.contains("label") || !obj.contains("features"))
            throw FormatError("jsonl row " + std::to_string(row) +
                              " missing one of id/label/features");
        Sample smp;
        smp.id = obj["id"].get<int>();
        int label = obj["label"].get<int>();
        if (label != 0 && label != 1)
            throw ValidationError("label must be 0 or 1, got " + std::to_string(label) +
                                  " at row " + std::to_string(row));
        smp.s = label;
        if (obj.contains("truth") && !obj["truth"].is_null()) {
            int t = obj["truth"].get<int>();
            if (t != 0 && t != 1)
                throw ValidationError("truth must be 0 or 1, got " + std::to_string(t) +
                                      " at row " + std::to_string(row));
            smp.truth = t;
        }
        if (obj.contains("group") && !obj["group"].is_null()) smp.group = obj["group"].get<int>();
        smp.features = obj["features"].get<std::vector<double>>();
        if (row == 0) ds.dim = static_cast<int>(smp.features.size());
        if (static_cast<int>(smp.features.size()) != ds.dim)
            throw FormatError("jsonl row " + std::to_string(row) + " has " +
                              std::to_string(smp.features.size()) + " features, expected " +
                              std::to_string(ds.dim));
        ds.samples.push_back(std::move(smp));
        ++row;
    }
    if (ds.samples.empty()) throw FormatError("empty dataset");
    if (ds.dim == 0) throw FormatError("jsonl rows declare no features");
    ds.validate();
    return ds;
}

}  // namespace

PUDataset load_dataset(const std::string& path, FileFormat format) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open dataset file: " + path);
    return format == FileFormat::Csv ? load_csv(in) : load_jsonl(in);
}

void save_dataset_csv(const PUDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    bool with_truth = ds.has_truth();
    out << "id,label";
    if (with_truth) out << ",truth";
    for (int j = 0; j < ds.dim; ++j) out << ",f" << j;
    out << "\n";
    for (const auto& smp : ds.samples) {
        out << smp.id << ',' << smp.s;
        if (with_truth) out << ',' << *smp.truth;
        for (double f : smp.features) out << ',' << format_double(f);
        out << "\n";
    }
}

void save_dataset_jsonl(const PUDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    for (const auto& smp : ds.samples) {
        nlohmann::json obj;
        obj["id"] = smp.id;
        obj["label"] = smp.s;
        if (smp.truth) obj["truth"] = *smp.truth;
        if (smp.group) obj["group"] = *smp.group;
        obj["features"] = smp.features;
        out << obj.dump() << "\n";
    }
}

SplitSpec split_train_val(const PUDataset& ds, double ratio, std::uint64_t seed,
                          bool require_labelled_val) {
    const int k = ds.size();
    if (k == 0) throw ValidationError("cannot split an empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0,1)");
    const int n_train = static_cast<int>(std::llround(ratio * k));
    if (n_train < 1 || n_train > k - 1)
        throw ConfigError("split ratio " + format_double(ratio) + " leaves an empty side for k=" +
                          std::to_string(k));

    Rng rng(seed);
    std::vector<int> ids(k);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);

    SplitSpec spec;
    spec.seed = seed;
    spec.train_ids.assign(ids.begin(), ids.begin() + n_train);
    spec.val_ids.assign(ids.begin() + n_train, ids.end());

    if (require_labelled_val) {
        auto has_labelled = [&](const std::vector<int>& part) {
            return std::any_of(part.begin(), part.end(),
                               [&](int id) { return ds.samples[id].s == 1; });
        };
        if (!has_labelled(spec.val_ids)) {
            // Stratified retry on s: labelled and unlabelled pools are split
            // separately, with at least one labelled sample forced into
            // validation and the unlabelled counts chosen to keep
            // |train| = round(ratio * k).
            std::vector<int> labelled, unlabelled;
            for (const auto& smp : ds.samples) (smp.s == 1 ? labelled : unlabelled).push_back(smp.id);
            if (labelled.empty())
                throw ValidationError("validation split needs a labelled sample but dataset has none");
            Rng strat(derive_seed(seed, seed_tag::split));
            strat.shuffle(labelled);
            strat.shuffle(unlabelled);

            const int n_lab = static_cast<int>(labelled.size());
            int lab_val = std::max(1, n_lab - static_cast<int>(std::llround(ratio * n_lab)));
            int lab_train = n_lab - lab_val;
            int unl_train = n_train - lab_train;
            if (unl_train < 0 || unl_train > static_cast<int>(unlabelled.size()))
                throw ValidationError("stratified split cannot satisfy ratio with " +
                                      std::to_string(n_lab) + " labelled samples");
            spec.train_ids.assign(labelled.begin(), labelled.begin() + lab_train);
            spec.train_ids.insert(spec.train_ids.end(), unlabelled.begin(),
                                  unlabelled.begin() + unl_train);
            spec.val_ids.assign(labelled.begin() + lab_train, labelled.end());
            spec.val_ids.insert(spec.val_ids.end(), unlabelled.begin() + unl_train,
                                unlabelled.end());
        }
    }

    std::sort(spec.train_ids.begin(), spec.train_ids.end());
    std::sort(spec.val_ids.begin(), spec.val_ids.end());
    return spec;
}

PUDataset generate_scar(const ScarConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    PUDataset ds;
    ds.dim = cfg.dim;
    ds.samples.reserve(cfg.n);
    std::vector<double> sd(cfg.dim);
    for (int j = 0; j < cfg.dim; ++j) sd[j] = std::sqrt(cfg.var[j]);
    for (int i = 0; i < cfg.n; ++i) {
        Sample smp;
        smp.id = i;
        const int y = rng.bernoulli(cfg.prior) ? 1 : 0;
        const auto& mean = (y == 1) ? cfg.mean_pos : cfg.mean_neg;
        smp.features.resize(cfg.dim);
        for (int j = 0; j < cfg.dim; ++j) smp.features[j] = mean[j] + sd[j] * rng.normal();
        smp.s = (y == 1 && rng.bernoulli(cfg.label_freq)) ? 1 : 0;
        smp.truth = y;
        ds.samples.push_back(std::move(smp));
    }
    return ds;
}

double scar_posterior(const ScarConfig& cfg, std::span<const double> x) {
    if (static_cast<int>(x.size()) != cfg.dim)
        throw IncompatError("scar_posterior: feature dimension mismatch");
    // log p(x|y=1) - log p(x|y=0) for shared diagonal covariance.
    double eta = std::log(cfg.prior / (1.0 - cfg.prior));
    for (int j = 0; j < cfg.dim; ++j) {
        const double dn = x[j] - cfg.mean_neg[j];
        const double dp = x[j] - cfg.mean_pos[j];
        eta += (dn * dn - dp * dp) / (2.0 * cfg.var[j]);
    }
    return 1.0 / (1.0 + std::exp(-eta));
}

PUDataset subset(const PUDataset& ds, std::span<const int> ids) {
    PUDataset out;
    out.dim = ds.dim;
    out.samples.reserve(ids.size());
    int next = 0;
    for (int id : ids) {
        if (id < 0 || id >= ds.size())
            throw ValidationError("subset id out of range: " + std::to_string(id));
        Sample smp = ds.samples[id];
        smp.id = next++;
        out.samples.push_back(std::move(smp));
    }
    return out;
}

}  // namespace puckit
