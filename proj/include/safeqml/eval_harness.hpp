#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safeqml/dataset.hpp"
#include "safeqml/hybrid_model.hpp"
#include "safeqml/perturbation.hpp"
#include "safeqml/safe_metrics.hpp"

namespace safeqml {

struct FoldPlan {
    std::size_t k = 5;
    std::vector<std::size_t> assignments;  ///< fold index per sample
    std::uint64_t seed = 0;

    std::vector<std::size_t> train_indices(std::size_t fold) const;
    std::vector<std::size_t> validation_indices(std::size_t fold) const;
};

/// Per class: seeded shuffle, then floor(n_c / k) members to every fold and the
/// remainder spread so fold sizes differ by at most one overall and per class,
/// and each fold's class proportions are within 1/fold_size of the global ones.
/// Throws ClassTooSmall when a present class has fewer than k members.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Per-feature z-scoring with statistics from a training split.
struct Scaler {
    static constexpr double kStdFloor = 1e-8;

    Vector mean;
    Vector scale;  ///< population std floored at kStdFloor; 1 for constant columns

    static Scaler fit(const Matrix& train);
    Matrix transform(const Matrix& features) const;
};

struct Standardized {
    Matrix train;
    Matrix applied;
    Scaler scaler;
};

/// Fits on `train` and transforms both matrices. Throws EmptyInput.
Standardized standardize(const Matrix& train, const Matrix& apply_to);

struct CurveConfig {
    std::vector<double> noise_multipliers = default_noise_multipliers();
    std::vector<double> fgsm_epsilons = default_fgsm_epsilons();
    std::vector<double> removal_fractions = default_removal_fractions();
    std::vector<double> feature_fractions = default_feature_fractions();

    bool operator==(const CurveConfig&) const = default;
};

struct ExperimentConfig {
    std::vector<ModelKind> kinds{ModelKind::QML, ModelKind::MLP, ModelKind::Linear};
    TrainConfig train;
    CurveConfig curves;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    /// Folds evaluated concurrently; results do not depend on it.
    std::size_t threads = 1;

    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Curve names used as report keys and in curve file names.
inline constexpr const char* kCurveRga = "rga";
inline constexpr const char* kCurveNoise = "rgr_noise";
inline constexpr const char* kCurveFgsm = "rgr_fgsm";
inline constexpr const char* kCurveRge = "rge";

struct FoldMetrics {
    double f1_macro = 0.0;
    double accuracy = 0.0;
    double mse = 0.0;
    double rga = 0.0;
    double aurga = 0.0;
    double aurgr_noise = 0.0;
    std::optional<double> aurgr_fgsm;
    double aurge = 0.0;

    /// Name -> value for every metric that is present.
    std::map<std::string, double> named() const;
};

struct FoldResult {
    ModelKind kind = ModelKind::QML;
    std::size_t fold = 0;
    std::uint64_t fold_seed = 0;
    FoldMetrics metrics;
    std::map<std::string, RgCurve> curves;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  ///< sample (k - 1) standard deviation
};

struct KindSummary {
    ModelKind kind = ModelKind::QML;
    std::map<std::string, Aggregate> metrics;
    /// Level-wise mean over folds of every curve.
    std::map<std::string, RgCurve> mean_curves;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<FoldResult> folds;      ///< ordered by (kind, fold)
    std::vector<KindSummary> summary;   ///< ordered by kind as configured
};

/// Seed of fold `fold` under experiment seed `seed`.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

/// Everything for one validation fold: standardise on the training split,
/// rank features with the linear probe, train each kind, score it.
std::vector<FoldResult> run_fold(const Dataset& dataset, const FoldPlan& plan, std::size_t fold,
                                 const ExperimentConfig& config);

/// Full stratified k-fold experiment. Deterministic in (dataset, config).
/// A failing fold aborts the run; the error message carries the fold index.
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config);

/// mean and sample std over values. Needs at least one value.
Aggregate aggregate(std::span<const double> values);

}  // namespace safeqml
