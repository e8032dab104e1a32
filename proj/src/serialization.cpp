#include "safeqml/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "safeqml/error.hpp"

namespace safeqml {

namespace {

constexpr const char* kReportFormat = "safeqml-report";
constexpr const char* kCheckpointFormat = "safeqml-checkpoint";
constexpr int kFormatVersion = 1;

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidConfig, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
    }
}

struct NamedBlock {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<double> values;
};

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void add_dense(std::vector<NamedBlock>& out, const std::string& prefix, DenseLayer& layer) {
    out.push_back({prefix + ".weight", layer.out(), layer.in(), span_of(layer.weight)});
    out.push_back({prefix + ".bias", layer.out(), 1, span_of(layer.bias)});
}

std::vector<NamedBlock> named_blocks(HybridModel& m) {
    std::vector<NamedBlock> out;
    add_dense(out, "pre", m.pre);
    out.push_back({"rotations", m.rotations.n_qubits(), 3, m.rotations.flat()});
    add_dense(out, "head", m.head);
    return out;
}

std::vector<NamedBlock> named_blocks(MlpModel& m) {
    std::vector<NamedBlock> out;
    add_dense(out, "hidden", m.hidden);
    add_dense(out, "output", m.output);
    return out;
}

std::vector<NamedBlock> named_blocks(LinearModel& m) {
    std::vector<NamedBlock> out;
    add_dense(out, "output", m.output);
    return out;
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Json metrics_json(const FoldMetrics& m) {
    Json j;
    j["f1_macro"] = m.f1_macro;
    j["accuracy"] = m.accuracy;
    j["mse"] = m.mse;
    j["rga"] = m.rga;
    j["aurga"] = m.aurga;
    j["aurgr_noise"] = m.aurgr_noise;
    j["aurgr_fgsm"] = m.aurgr_fgsm ? Json(*m.aurgr_fgsm) : Json(nullptr);
    j["aurge"] = m.aurge;
    return j;
}

FoldMetrics metrics_from_json(const Json& j) {
    FoldMetrics m;
    m.f1_macro = required<double>(j, "f1_macro");
    m.accuracy = required<double>(j, "accuracy");
    m.mse = required<double>(j, "mse");
    m.rga = required<double>(j, "rga");
    m.aurga = required<double>(j, "aurga");
    m.aurgr_noise = required<double>(j, "aurgr_noise");
    if (j.contains("aurgr_fgsm") && !j.at("aurgr_fgsm").is_null()) {
        m.aurgr_fgsm = j.at("aurgr_fgsm").get<double>();
    }
    m.aurge = required<double>(j, "aurge");
    return m;
}

}  // namespace

Json to_json(const TrainConfig& c) {
    Json j;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_epsilon"] = c.adam_epsilon;
    j["l2_strength"] = c.l2_strength;
    j["seed"] = c.seed;
    return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
    c.learning_rate = field_or(j, "learning_rate", c.learning_rate);
    c.batch_size = field_or(j, "batch_size", c.batch_size);
    c.epochs = field_or(j, "epochs", c.epochs);
    c.adam_beta1 = field_or(j, "adam_beta1", c.adam_beta1);
    c.adam_beta2 = field_or(j, "adam_beta2", c.adam_beta2);
    c.adam_epsilon = field_or(j, "adam_epsilon", c.adam_epsilon);
    c.l2_strength = field_or(j, "l2_strength", c.l2_strength);
    c.seed = field_or(j, "seed", c.seed);
    return c;
}

Json to_json(const CurveConfig& c) {
    Json j;
    j["noise_multipliers"] = c.noise_multipliers;
    j["fgsm_epsilons"] = c.fgsm_epsilons;
    j["removal_fractions"] = c.removal_fractions;
    j["feature_fractions"] = c.feature_fractions;
    return j;
}

CurveConfig curve_config_from_json(const Json& j, CurveConfig c) {
    c.noise_multipliers = field_or(j, "noise_multipliers", c.noise_multipliers);
    c.fgsm_epsilons = field_or(j, "fgsm_epsilons", c.fgsm_epsilons);
    c.removal_fractions = field_or(j, "removal_fractions", c.removal_fractions);
    c.feature_fractions = field_or(j, "feature_fractions", c.feature_fractions);
    return c;
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    Json kinds = Json::array();
    for (ModelKind k : c.kinds) kinds.push_back(std::string(to_string(k)));
    j["kinds"] = kinds;
    j["folds"] = c.folds;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["train"] = to_json(c.train);
    j["curves"] = to_json(c.curves);
    return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    if (j.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_model_kind(k.get<std::string>()));
    }
    c.folds = field_or(j, "folds", c.folds);
    c.seed = field_or(j, "seed", c.seed);
    c.threads = field_or(j, "threads", c.threads);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("curves")) c.curves = curve_config_from_json(j.at("curves"), c.curves);
    return c;
}

std::string config_hash(const ExperimentConfig& config) {
    Json canonical = to_json(config);
    canonical.erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical.dump())));
    return buf;
}

Json to_json(const RgCurve& curve) {
    Json j;
    j["levels"] = curve.levels;
    Json scores = Json::array();
    for (const auto& s : curve.scores) scores.push_back(s ? Json(*s) : Json(nullptr));
    j["scores"] = scores;
    j["area"] = curve.area;
    return j;
}

RgCurve curve_from_json(const Json& j) {
    RgCurve c;
    c.levels = required<std::vector<double>>(j, "levels");
    for (const auto& s : j.at("scores")) {
        c.scores.push_back(s.is_null() ? std::nullopt : std::optional<double>(s.get<double>()));
    }
    c.area = required<double>(j, "area");
    return c;
}

Json to_json(const ExperimentReport& r) {
    Json j;
    j["format"] = kReportFormat;
    j["version"] = kFormatVersion;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["config"] = to_json(r.config);
    j["dataset"] = {{"n_samples", r.n_samples},
                    {"n_features", r.n_features},
                    {"n_classes", r.n_classes}};

    Json folds = Json::array();
    for (const FoldResult& f : r.folds) {
        Json row;
        row["kind"] = std::string(to_string(f.kind));
        row["fold"] = f.fold;
        row["fold_seed"] = f.fold_seed;
        row["metrics"] = metrics_json(f.metrics);
        Json curves = Json::object();
        for (const auto& [name, curve] : f.curves) curves[name] = to_json(curve);
        row["curves"] = curves;
        folds.push_back(row);
    }
    j["folds"] = folds;

    Json summary = Json::array();
    for (const KindSummary& s : r.summary) {
        Json row;
        row["kind"] = std::string(to_string(s.kind));
        Json metrics = Json::object();
        for (const auto& [name, agg] : s.metrics) metrics[name] = {{"mean", agg.mean}, {"std", agg.std}};
        row["metrics"] = metrics;
        Json curves = Json::object();
        for (const auto& [name, curve] : s.mean_curves) curves[name] = to_json(curve);
        row["mean_curves"] = curves;
        summary.push_back(row);
    }
    j["aggregate"] = summary;
    return j;
}

ExperimentReport report_from_json(const Json& j) {
    if (field_or<std::string>(j, "format", "") != kReportFormat) {
        throw Error(ErrorCode::InvalidConfig, "not a report document");
    }
    ExperimentReport r;
    r.seed = required<std::uint64_t>(j, "seed");
    r.config_hash = required<std::string>(j, "config_hash");
    r.config = experiment_config_from_json(j.at("config"));
    const Json& ds = j.at("dataset");
    r.n_samples = required<std::size_t>(ds, "n_samples");
    r.n_features = required<std::size_t>(ds, "n_features");
    r.n_classes = required<int>(ds, "n_classes");
    for (const Json& row : j.at("folds")) {
        FoldResult f;
        f.kind = parse_model_kind(required<std::string>(row, "kind"));
        f.fold = required<std::size_t>(row, "fold");
        f.fold_seed = required<std::uint64_t>(row, "fold_seed");
        f.metrics = metrics_from_json(row.at("metrics"));
        for (const auto& [name, curve] : row.at("curves").items()) f.curves[name] = curve_from_json(curve);
        r.folds.push_back(std::move(f));
    }
    for (const Json& row : j.at("aggregate")) {
        KindSummary s;
        s.kind = parse_model_kind(required<std::string>(row, "kind"));
        for (const auto& [name, agg] : row.at("metrics").items()) {
            s.metrics[name] = Aggregate{required<double>(agg, "mean"), required<double>(agg, "std")};
        }
        for (const auto& [name, curve] : row.at("mean_curves").items()) {
            s.mean_curves[name] = curve_from_json(curve);
        }
        r.summary.push_back(std::move(s));
    }
    return r;
}

Json to_json(const Checkpoint& cp) {
    Json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kFormatVersion;
    j["kind"] = std::string(to_string(cp.model.kind()));
    Json dims;
    dims["input"] = cp.model.input_dim();
    dims["classes"] = cp.model.n_classes();
    if (const auto* h = std::get_if<HybridModel>(&cp.model.network())) {
        dims["qubits"] = h->layout.n_qubits;
        dims["entangler_range"] = h->layout.entangler_range;
    }
    j["dims"] = dims;
    j["seed"] = cp.config.seed;
    j["config"] = to_json(cp.config);

    Classifier copy = cp.model;
    Json params = Json::array();
    std::visit(
        [&](auto& m) {
            for (const NamedBlock& b : named_blocks(m)) {
                params.push_back({{"name", b.name},
                                  {"shape", {b.rows, b.cols}},
                                  {"values", std::vector<double>(b.values.begin(), b.values.end())}});
            }
        },
        copy.network());
    j["params"] = params;
    if (cp.scaler) {
        j["scaler"] = {{"mean", vector_json(cp.scaler->mean)}, {"scale", vector_json(cp.scaler->scale)}};
    } else {
        j["scaler"] = nullptr;
    }
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    if (field_or<std::string>(j, "format", "") != kCheckpointFormat) {
        throw Error(ErrorCode::InvalidConfig, "not a checkpoint document");
    }
    Checkpoint cp;
    cp.config = train_config_from_json(j.at("config"));
    const ModelKind kind = parse_model_kind(required<std::string>(j, "kind"));
    const Json& dims = j.at("dims");
    const auto d = required<std::size_t>(dims, "input");
    const auto classes = required<std::size_t>(dims, "classes");
    if (kind == ModelKind::QML) {
        HybridModel h = make_hybrid(d, classes, required<std::size_t>(dims, "qubits"));
        h.layout.entangler_range = field_or<std::size_t>(dims, "entangler_range", 1);
        h.layout.validate();
        cp.model = Classifier(std::move(h));
    } else {
        cp.model = make_classifier(kind, d, classes);
    }

    std::map<std::string, const Json*> by_name;
    for (const Json& p : j.at("params")) by_name[required<std::string>(p, "name")] = &p;
    std::visit(
        [&](auto& m) {
            for (const NamedBlock& b : named_blocks(m)) {
                const auto it = by_name.find(b.name);
                if (it == by_name.end()) throw Error(ErrorCode::InvalidConfig, "missing parameter " + b.name);
                const auto shape = required<std::vector<std::size_t>>(*it->second, "shape");
                const auto values = required<std::vector<double>>(*it->second, "values");
                if (shape != std::vector<std::size_t>{b.rows, b.cols} || values.size() != b.values.size()) {
                    throw Error(ErrorCode::ShapeMismatch, "parameter " + b.name + " has the wrong shape");
                }
                std::copy(values.begin(), values.end(), b.values.begin());
            }
        },
        cp.model.network());

    if (j.contains("scaler") && !j.at("scaler").is_null()) {
        Scaler s{vector_from_json(j.at("scaler").at("mean")), vector_from_json(j.at("scaler").at("scale"))};
        if (static_cast<std::size_t>(s.mean.size()) != d || s.scale.size() != s.mean.size()) {
            throw Error(ErrorCode::ShapeMismatch, "scaler does not match the input dimension");
        }
        cp.scaler = std::move(s);
    }
    return cp;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    write_json_file(to_json(checkpoint), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

}  // namespace safeqml
