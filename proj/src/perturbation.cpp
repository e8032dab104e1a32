#include "safeqml/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "safeqml/error.hpp"
#include "safeqml/random.hpp"

namespace safeqml {

namespace {

// Slack added before floor/ceil of level products such as 0.3 * 10.
constexpr double kGridSlack = 1e-9;

void check_ascending_from_zero(std::span<const double> grid, const char* what) {
    if (grid.empty()) throw Error(ErrorCode::DegenerateGrid, std::string(what) + " grid is empty");
    if (grid.front() != 0.0) {
        throw Error(ErrorCode::DegenerateGrid, std::string(what) + " grid must start at 0");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw Error(ErrorCode::DegenerateGrid, std::string(what) + " grid must ascend");
        }
    }
}

void check_rows(const Matrix& features, std::span<const int> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ in count");
    }
}

RgCurve finish(std::vector<double> levels, std::vector<std::optional<double>> scores) {
    RgCurve curve{std::move(levels), std::move(scores), 0.0};
    curve.area = curve_area(curve);
    return curve;
}

}  // namespace

void NoiseGrid::validate() const {
    check_ascending_from_zero(multipliers, "noise");
    for (double s : per_feature_sigma) {
        if (!(s >= 0.0)) throw Error(ErrorCode::InvalidSpec, "feature sigma must be >= 0");
    }
}

bool FeatureRanking::is_permutation(std::size_t d) const {
    if (order.size() != d) return false;
    std::vector<bool> seen(d, false);
    for (std::size_t j : order) {
        if (j >= d || seen[j]) return false;
        seen[j] = true;
    }
    return true;
}

std::vector<double> linear_grid(double start, double step, std::size_t count) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = start + step * static_cast<double>(i);
    return g;
}

std::vector<double> default_noise_multipliers() { return linear_grid(0.0, 0.25, 13); }
std::vector<double> default_fgsm_epsilons() { return linear_grid(0.0, 0.05, 11); }
std::vector<double> default_removal_fractions() { return linear_grid(0.0, 0.05, 20); }
std::vector<double> default_feature_fractions() { return linear_grid(0.0, 0.1, 11); }

std::vector<double> column_std(const Matrix& features) {
    std::vector<double> out(static_cast<std::size_t>(features.cols()), 0.0);
    if (features.rows() == 0) return out;
    const double n = static_cast<double>(features.rows());
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        const double mean = features.col(c).sum() / n;
        out[static_cast<std::size_t>(c)] =
            std::sqrt((features.col(c).array() - mean).square().sum() / n);
    }
    return out;
}

Matrix gaussian_perturb(const Matrix& features, std::span<const double> sigma, double multiplier,
                        std::uint64_t seed) {
    if (sigma.size() != static_cast<std::size_t>(features.cols())) {
        throw Error(ErrorCode::ShapeMismatch, "one sigma per feature column is required");
    }
    if (!(multiplier >= 0.0)) throw Error(ErrorCode::InvalidSpec, "noise multiplier must be >= 0");
    Matrix out = features;
    if (multiplier == 0.0) return out;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) += multiplier * sigma[static_cast<std::size_t>(c)] * normal(rng);
        }
    }
    return out;
}

RgCurve rgr_noise_curve(const Classifier& model, const Matrix& test_features,
                        const NoiseGrid& grid, std::span<const int> labels, std::uint64_t seed) {
    grid.validate();
    check_rows(test_features, labels);
    const Matrix clean = model.predict_proba(test_features);
    std::vector<std::optional<double>> scores;
    for (std::size_t i = 0; i < grid.multipliers.size(); ++i) {
        const Matrix noisy = gaussian_perturb(test_features, grid.per_feature_sigma,
                                              grid.multipliers[i], derive_seed(seed, i));
        scores.emplace_back(rgr_score(clean, model.predict_proba(noisy), labels));
    }
    return finish(grid.multipliers, std::move(scores));
}

RgCurve rgr_fgsm_curve(const Classifier& model, const Matrix& test_features,
                       std::span<const int> labels, std::span<const double> epsilons) {
    check_ascending_from_zero(epsilons, "FGSM");
    check_rows(test_features, labels);
    const Matrix clean = model.predict_proba(test_features);

    // sign(grad) once per sample, scaled per epsilon below.
    Matrix direction(test_features.rows(), test_features.cols());
    for (Eigen::Index r = 0; r < test_features.rows(); ++r) {
        const Vector x = test_features.row(r).transpose();
        direction.row(r) =
            (fgsm_perturb(model, x, labels[static_cast<std::size_t>(r)], 1.0) - x).transpose();
    }

    std::vector<std::optional<double>> scores;
    for (double eps : epsilons) {
        const Matrix attacked = test_features + eps * direction;
        scores.emplace_back(rgr_score(clean, model.predict_proba(attacked), labels));
    }
    return finish({epsilons.begin(), epsilons.end()}, std::move(scores));
}

RgCurve rga_removal_curve(const Matrix& probs, std::span<const int> labels,
                          std::span<const double> fractions) {
    check_ascending_from_zero(fractions, "removal");
    if (fractions.back() > 0.95 + kGridSlack) {
        throw Error(ErrorCode::DegenerateGrid, "removal fractions must not exceed 0.95");
    }
    check_rows(probs, labels);
    const std::size_t n = labels.size();

    std::vector<std::size_t> by_confidence(n);
    std::iota(by_confidence.begin(), by_confidence.end(), std::size_t{0});
    std::stable_sort(by_confidence.begin(), by_confidence.end(), [&](std::size_t a, std::size_t b) {
        return probs.row(static_cast<Eigen::Index>(a)).maxCoeff() >
               probs.row(static_cast<Eigen::Index>(b)).maxCoeff();
    });

    std::vector<std::optional<double>> scores;
    for (double f : fractions) {
        const auto drop = static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + kGridSlack));
        std::vector<std::size_t> keep(by_confidence.begin() + static_cast<std::ptrdiff_t>(drop),
                                      by_confidence.end());
        std::sort(keep.begin(), keep.end());
        Matrix kept_probs(static_cast<Eigen::Index>(keep.size()), probs.cols());
        std::vector<int> kept_labels;
        kept_labels.reserve(keep.size());
        for (std::size_t r = 0; r < keep.size(); ++r) {
            kept_probs.row(static_cast<Eigen::Index>(r)) = probs.row(static_cast<Eigen::Index>(keep[r]));
            kept_labels.push_back(labels[keep[r]]);
        }
        try {
            scores.emplace_back(rga_multiclass(kept_labels, kept_probs));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingleClassSplit && e.code() != ErrorCode::EmptyInput) throw;
            scores.emplace_back(std::nullopt);
        }
    }
    return finish({fractions.begin(), fractions.end()}, std::move(scores));
}

FeatureRanking feature_importance_ranking(const Dataset& train_set, const TrainConfig& config) {
    const Classifier probe = train_model(ModelKind::Linear, train_set, config);
    const Matrix& w = std::get<LinearModel>(probe.network()).output.weight;
    std::vector<double> importance(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        importance[static_cast<std::size_t>(j)] = w.col(j).cwiseAbs().sum();
    }
    FeatureRanking ranking;
    ranking.order.resize(importance.size());
    std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
    std::stable_sort(ranking.order.begin(), ranking.order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
    return ranking;
}

RgCurve rge_removal_curve(const Classifier& model, const Matrix& test_features,
                          std::span<const int> labels, const FeatureRanking& ranking,
                          std::span<const double> fractions) {
    check_ascending_from_zero(fractions, "feature removal");
    check_rows(test_features, labels);
    const auto d = static_cast<std::size_t>(test_features.cols());
    if (!ranking.is_permutation(d)) {
        throw Error(ErrorCode::ShapeMismatch, "feature ranking is not a permutation of the columns");
    }
    const Matrix full = model.predict_proba(test_features);

    std::vector<std::optional<double>> scores;
    for (double k : fractions) {
        const auto removed = std::min(
            d, static_cast<std::size_t>(std::ceil(k * static_cast<double>(d) - kGridSlack)));
        Matrix reduced = test_features;
        for (std::size_t j = 0; j < removed; ++j) {
            reduced.col(static_cast<Eigen::Index>(ranking.order[j])).setZero();
        }
        scores.emplace_back(rge_score(full, model.predict_proba(reduced), labels));
    }
    return finish({fractions.begin(), fractions.end()}, std::move(scores));
}

}  // namespace safeqml
