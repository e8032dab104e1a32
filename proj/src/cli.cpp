#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safeqml/error.hpp"
#include "safeqml/eval_harness.hpp"
#include "safeqml/io.hpp"
#include "safeqml/serialization.hpp"

namespace safeqml {

namespace {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

/// Flags shared by every subcommand; unset values fall back to the config file.
struct CommonFlags {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string kinds;
    std::optional<std::size_t> folds;
};

struct GenerateFlags {
    std::optional<std::size_t> samples;
    std::optional<std::size_t> features;
    std::optional<int> classes;
    std::optional<double> separation;
};

struct ModelFlags {
    std::string models;
    std::optional<std::size_t> threads;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<ModelKind> parse_kinds(const std::string& csv) {
    std::vector<ModelKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) kinds.push_back(parse_model_kind(item));
    }
    if (kinds.empty()) throw Error(ErrorCode::InvalidConfig, "--kinds is empty");
    return kinds;
}

Json load_config(const CommonFlags& flags) {
    if (flags.config.empty()) return Json::object();
    Json j = read_json_file(flags.config);
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    return j;
}

ExperimentConfig experiment_config(const Json& file, const CommonFlags& flags,
                                   std::optional<std::size_t> threads) {
    ExperimentConfig cfg = experiment_config_from_json(file);
    if (!flags.kinds.empty()) cfg.kinds = parse_kinds(flags.kinds);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.folds) cfg.folds = *flags.folds;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    return cfg;
}

fs::path resolve_path(const Json& file, const std::string& flag, const char* key) {
    if (!flag.empty()) return flag;
    if (file.contains(key) && file.at(key).is_string()) return file.at(key).get<std::string>();
    return {};
}

SyntheticSpec synthetic_spec(const Json& file, const CommonFlags& flags, const GenerateFlags& g) {
    SyntheticSpec spec;
    if (file.contains("synthetic")) {
        const Json& s = file.at("synthetic");
        spec.n_samples = s.value("n_samples", spec.n_samples);
        spec.n_features = s.value("n_features", spec.n_features);
        spec.n_classes = s.value("n_classes", spec.n_classes);
        spec.separation = s.value("separation", spec.separation);
        spec.within_std = s.value("within_std", spec.within_std);
        spec.seed = s.value("seed", spec.seed);
    }
    if (g.samples) spec.n_samples = *g.samples;
    if (g.features) spec.n_features = *g.features;
    if (g.classes) spec.n_classes = *g.classes;
    if (g.separation) spec.separation = *g.separation;
    if (flags.seed) spec.seed = *flags.seed;
    return spec;
}

Dataset dataset_for(const Json& file, const CommonFlags& flags) {
    const fs::path data = resolve_path(file, flags.data, "data");
    if (!data.empty()) {
        Dataset ds = load_dataset_csv(data);
        ds.validate();
        return ds;
    }
    if (file.contains("synthetic")) return generate_synthetic(synthetic_spec(file, {}, {}));
    throw Error(ErrorCode::InvalidConfig, "no dataset: pass --data or a config with \"data\"/\"synthetic\"");
}

fs::path output_dir(const Json& file, const CommonFlags& flags) {
    fs::path out = resolve_path(file, flags.out, "out");
    if (out.empty()) throw Error(ErrorCode::InvalidConfig, "--out is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out.string());
    return out;
}

fs::path checkpoint_path(const fs::path& dir, ModelKind kind) {
    return dir / ("model_" + lower(std::string(to_string(kind))) + ".json");
}

std::vector<Checkpoint> load_checkpoints(const fs::path& dir, const std::vector<ModelKind>& kinds) {
    std::vector<Checkpoint> out;
    for (ModelKind kind : kinds) {
        const fs::path p = checkpoint_path(dir, kind);
        if (!fs::exists(p)) throw Error(ErrorCode::IoFailure, "missing checkpoint " + p.string());
        out.push_back(load_checkpoint(p));
    }
    return out;
}

Matrix scaled_features(const Checkpoint& cp, const Dataset& ds) {
    if (cp.model.input_dim() != ds.n_features()) {
        throw Error(ErrorCode::ShapeMismatch, "checkpoint expects " + std::to_string(cp.model.input_dim()) +
                                                  " features, data has " + std::to_string(ds.n_features()));
    }
    return cp.scaler ? cp.scaler->transform(ds.features) : ds.features;
}

int run_generate(const CommonFlags& flags, const GenerateFlags& g) {
    const Json file = load_config(flags);
    fs::path out = resolve_path(file, flags.out, "out");
    if (out.empty()) throw Error(ErrorCode::InvalidConfig, "--out <file.csv> is required");
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset_csv(generate_synthetic(synthetic_spec(file, flags, g)), out);
    return kOk;
}

int run_train(const CommonFlags& flags) {
    const Json file = load_config(flags);
    const ExperimentConfig cfg = experiment_config(file, flags, std::nullopt);
    const Dataset ds = dataset_for(file, flags);
    const fs::path out = output_dir(file, flags);

    Checkpoint base;
    base.scaler = Scaler::fit(ds.features);
    const Dataset train{base.scaler->transform(ds.features), ds.labels, ds.n_classes};
    for (ModelKind kind : cfg.kinds) {
        Checkpoint cp = base;
        cp.config = cfg.train;
        cp.config.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(kind));
        cp.model = train_model(kind, train, cp.config);
        save_checkpoint(cp, checkpoint_path(out, kind));
    }
    return kOk;
}

int run_evaluate(const CommonFlags& flags, const ModelFlags& m) {
    const Json file = load_config(flags);
    const ExperimentConfig cfg = experiment_config(file, flags, std::nullopt);
    const Dataset ds = dataset_for(file, flags);
    const fs::path out = output_dir(file, flags);
    if (m.models.empty()) throw Error(ErrorCode::InvalidConfig, "--models <dir> is required");

    Json result;
    result["n_samples"] = ds.size();
    Json models = Json::array();
    const auto checkpoints = load_checkpoints(m.models, cfg.kinds);
    for (const Checkpoint& cp : checkpoints) {
        const Matrix probs = cp.model.predict_proba(scaled_features(cp, ds));
        const std::vector<int> pred = argmax_rows(probs);
        Json row;
        row["kind"] = std::string(to_string(cp.model.kind()));
        row["f1_macro"] = f1_macro(ds.labels, pred);
        row["accuracy"] = accuracy(ds.labels, pred);
        row["mse"] = mse_prob(ds.labels, probs);
        row["rga"] = rga_multiclass(ds.labels, probs);
        models.push_back(row);
    }
    result["models"] = models;
    write_json_file(result, out / "evaluation.json");
    return kOk;
}

int run_curves(const CommonFlags& flags, const ModelFlags& m) {
    const Json file = load_config(flags);
    const ExperimentConfig cfg = experiment_config(file, flags, std::nullopt);
    const Dataset ds = dataset_for(file, flags);
    const fs::path out = output_dir(file, flags);
    if (m.models.empty()) throw Error(ErrorCode::InvalidConfig, "--models <dir> is required");

    Json result = Json::object();
    for (const Checkpoint& cp : load_checkpoints(m.models, cfg.kinds)) {
        const Matrix x = scaled_features(cp, ds);
        const Matrix probs = cp.model.predict_proba(x);
        TrainConfig probe = cfg.train;
        probe.seed = derive_seed(cfg.seed, 0x100);
        const FeatureRanking ranking =
            feature_importance_ranking(Dataset{x, ds.labels, ds.n_classes}, probe);

        std::map<std::string, RgCurve> curves;
        curves[kCurveRga] = rga_removal_curve(probs, ds.labels, cfg.curves.removal_fractions);
        curves[kCurveNoise] = rgr_noise_curve(cp.model, x, NoiseGrid{cfg.curves.noise_multipliers, column_std(x)},
                                              ds.labels, derive_seed(cfg.seed, 0x300));
        curves[kCurveFgsm] = rgr_fgsm_curve(cp.model, x, ds.labels, cfg.curves.fgsm_epsilons);
        curves[kCurveRge] = rge_removal_curve(cp.model, x, ds.labels, ranking, cfg.curves.feature_fractions);

        const std::string kind = lower(std::string(to_string(cp.model.kind())));
        Json row = Json::object();
        for (const auto& [variant, curve] : curves) {
            write_curve_csv(curve, out / ("curve_" + kind + "_" + variant + ".csv"));
            row[variant] = to_json(curve);
        }
        result[std::string(to_string(cp.model.kind()))] = row;
    }
    write_json_file(result, out / "curves.json");
    return kOk;
}

int run_full(const CommonFlags& flags, const ModelFlags& m) {
    const Json file = load_config(flags);
    const ExperimentConfig cfg = experiment_config(file, flags, m.threads);
    const Dataset ds = dataset_for(file, flags);
    const fs::path out = output_dir(file, flags);
    emit_report(run_experiment(ds, cfg), out);
    return kOk;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_data = true) {
    cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    if (with_data) cmd->add_option("--data", f.data, "feature CSV (f0,...,f{d-1},label)");
    cmd->add_option("--out", f.out, "output directory (generate: output CSV file)");
    cmd->add_option("--seed", f.seed, "experiment seed");
    if (with_data) {
        cmd->add_option("--kinds", f.kinds, "comma-separated model kinds: QML,MLP,Linear");
        cmd->add_option("--folds", f.folds, "cross-validation folds");
    }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Hybrid quantum classifier and SAFE-AI rank-graduation evaluation", "safeqml"};
    app.require_subcommand(1);

    CommonFlags common;
    GenerateFlags gen;
    ModelFlags model_flags;

    auto* generate = app.add_subcommand("generate", "write a synthetic Gaussian-blob dataset");
    add_common(generate, common, false);
    generate->add_option("--samples", gen.samples, "number of samples");
    generate->add_option("--features", gen.features, "feature dimension d");
    generate->add_option("--classes", gen.classes, "number of classes");
    generate->add_option("--separation", gen.separation, "centre separation in sqrt(d) std units");

    auto* train = app.add_subcommand("train", "train models on a whole dataset and save checkpoints");
    add_common(train, common);

    auto* evaluate = app.add_subcommand("evaluate", "predictive metrics and RGA of saved models");
    add_common(evaluate, common);
    evaluate->add_option("--models", model_flags.models, "directory holding model_<kind>.json");

    auto* curves = app.add_subcommand("curves", "SAFE curves (RGA, RGR noise/FGSM, RGE) of saved models");
    add_common(curves, common);
    curves->add_option("--models", model_flags.models, "directory holding model_<kind>.json");

    auto* full = app.add_subcommand("full-run", "cross-validated experiment with all metrics and curves");
    add_common(full, common);
    full->add_option("--threads", model_flags.threads, "folds evaluated concurrently");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*generate) return run_generate(common, gen);
        if (*train) return run_train(common);
        if (*evaluate) return run_evaluate(common, model_flags);
        if (*curves) return run_curves(common, model_flags);
        if (*full) return run_full(common, model_flags);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (e.code() == ErrorCode::InvalidConfig) return kUsage;
        if (e.is_data_error() || e.code() == ErrorCode::IoFailure) return kData;
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}

}  // namespace safeqml
