#pragma once

/**
 * Rank-graduation (RG) metrics and the classical predictive scores.
 *
 * RG compares a reference vector Y with a candidate Y' through the ranking
 * Y' induces on Y. The authoritative estimator is the concordance form:
 * order samples by ascending candidate (reference values inside tied
 * candidate groups are replaced by the group mean), accumulate the reference
 * along that order (C), along ascending reference (A) and along descending
 * reference (D); then
 *
 *     RG = (sum D - sum C) / (sum D - sum A).
 *
 * For a binary reference this equals the ROC AUC with ties counted 1/2.
 * The Cramer-von Mises / Gini form is exposed as well (rg_from_cvm).
 */

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "safeqml/dataset.hpp"

namespace safeqml {

/// Index-aligned reference (Y) and candidate (Y') values.
struct ScorePair {
    std::span<const double> reference;
    std::span<const double> candidate;

    /// Equal lengths, n >= 2, finite entries; throws EmptyInput / ShapeMismatch / InvalidSpec.
    void validate() const;
};

/// Right-continuous empirical CDF.
class Ecdf {
  public:
    explicit Ecdf(std::span<const double> values);
    double operator()(double u) const;
    std::size_t size() const noexcept { return sorted_.size(); }

  private:
    std::vector<double> sorted_;
};

/// (1/n) sum_i |F_Y(y_i) - F_Y'(y_i)|^p, integrating against the reference sample.
double cvm_divergence(const ScorePair& pair, int p = 1);

/// Lorenz-form Gini index of a nonnegative sample with positive mean.
double gini_index(std::span<const double> values);

/// Concordance estimator of RG, in [0, 1]. Throws ConstantReference.
double rg_score(const ScorePair& pair);

/// 1 - CvM_1 / Gini(Y). Reference must be nonnegative with positive mean.
double rg_from_cvm(const ScorePair& pair);

/// 1 - MSE / Var(reference), population variance.
double r_squared(const ScorePair& pair);

/// Empirical frequencies of each class among `labels`, length n_classes.
std::vector<double> class_weights(std::span<const int> labels, std::size_t n_classes);

/// One-vs-rest RG of class indicators against class probabilities, weighted
/// by label frequency. Throws SingleClassSplit when fewer than two classes appear.
double rga_multiclass(std::span<const int> labels, const Matrix& probs);

/// Per-class RG of perturbed against original probabilities, weighted by
/// label frequency over the classes present in `labels`.
double rgr_score(const Matrix& probs_original, const Matrix& probs_perturbed,
                 std::span<const int> labels);

/// Same contract as rgr_score with the reduced-feature predictions as candidate.
double rge_score(const Matrix& probs_full, const Matrix& probs_reduced,
                 std::span<const int> labels);

/// A score per perturbation level. Missing entries (degenerate levels) are
/// excluded from the area.
struct RgCurve {
    std::vector<double> levels;
    std::vector<std::optional<double>> scores;
    double area = 0.0;
};

/// Trapezoidal integral divided by the level range. Needs >= 2 strictly
/// ascending levels (DegenerateGrid otherwise).
double curve_area(std::span<const double> levels, std::span<const double> scores);

/// curve_area over the levels whose score is present; a single present
/// score is its own area. Throws DegenerateGrid when no score is present.
double curve_area(const RgCurve& curve);

double accuracy(std::span<const int> labels, std::span<const int> predicted);

/// Unweighted mean of per-class F1 over the classes present in `labels`.
double f1_macro(std::span<const int> labels, std::span<const int> predicted);

/// (1/n) sum_i ||p_i - onehot(y_i)||^2.
double mse_prob(std::span<const int> labels, const Matrix& probs);

}  // namespace safeqml
