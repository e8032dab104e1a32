#pragma once

// Stress conditions behind each SAFE curve: Gaussian feature noise, FGSM,
// confidence-ranked sample removal and importance-ranked feature removal.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "safeqml/dataset.hpp"
#include "safeqml/hybrid_model.hpp"
#include "safeqml/safe_metrics.hpp"

namespace safeqml {

/// Noise intensities as multiples of each feature's test-split standard deviation.
struct NoiseGrid {
    std::vector<double> multipliers;
    std::vector<double> per_feature_sigma;

    /// First multiplier 0, strictly ascending, sigmas nonnegative.
    void validate() const;
};

struct FeatureRanking {
    std::vector<std::size_t> order;  ///< most important first
    std::string source = "linear-probe coefficient magnitude";

    bool is_permutation(std::size_t d) const;
};

/// `count` evenly spaced points start, start + step, ...
std::vector<double> linear_grid(double start, double step, std::size_t count);

std::vector<double> default_noise_multipliers();   ///< 0, 0.25, ..., 3.0
std::vector<double> default_fgsm_epsilons();       ///< 0, 0.05, ..., 0.5
std::vector<double> default_removal_fractions();   ///< 0, 0.05, ..., 0.95
std::vector<double> default_feature_fractions();   ///< 0, 0.1, ..., 1.0

/// Population standard deviation of every column.
std::vector<double> column_std(const Matrix& features);

/// Adds N(0, (multiplier * sigma_j)^2) to column j. Deterministic in seed.
Matrix gaussian_perturb(const Matrix& features, std::span<const double> sigma, double multiplier,
                        std::uint64_t seed);

/// RGR of predictions on noisy features against the clean predictions.
/// Level i draws noise from derive_seed(seed, i).
RgCurve rgr_noise_curve(const Classifier& model, const Matrix& test_features,
                        const NoiseGrid& grid, std::span<const int> labels, std::uint64_t seed);

/// RGR of predictions on FGSM-perturbed features (true-label attack) against
/// the clean predictions. The grid must start at 0 and ascend.
RgCurve rgr_fgsm_curve(const Classifier& model, const Matrix& test_features,
                       std::span<const int> labels, std::span<const double> epsilons);

/// RGA after dropping the floor(f * n) most confident rows for each fraction f.
/// Levels whose remainder holds a single class are recorded as missing.
RgCurve rga_removal_curve(const Matrix& probs, std::span<const int> labels,
                          std::span<const double> fractions);

/// Orders features by the summed absolute coefficients of a Linear baseline
/// trained on `train_set` with `config`.
FeatureRanking feature_importance_ranking(const Dataset& train_set, const TrainConfig& config);

/// RGE after zeroing the ceil(k * d) top-ranked features for each fraction k.
RgCurve rge_removal_curve(const Classifier& model, const Matrix& test_features,
                          std::span<const int> labels, const FeatureRanking& ranking,
                          std::span<const double> fractions);

}  // namespace safeqml
