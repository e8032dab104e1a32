#include "safeqml/safe_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "safeqml/error.hpp"

namespace safeqml {

namespace {

double sum_of_prefix_sums(std::span<const double> values) {
    double running = 0.0;
    double total = 0.0;
    for (double v : values) {
        running += v;
        total += running;
    }
    return total;
}

std::vector<double> column(const Matrix& m, Eigen::Index c) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
    return out;
}

void check_aligned(std::size_t n_labels, std::size_t n_predicted) {
    if (n_labels == 0) throw Error(ErrorCode::EmptyInput, "no samples");
    if (n_labels != n_predicted) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(n_labels) + " labels vs " +
                                                  std::to_string(n_predicted) + " predictions");
    }
}

std::size_t class_count(std::span<const int> labels, const Matrix& probs) {
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw Error(ErrorCode::LabelOutOfRange, "negative label");
        max_label = std::max(max_label, y);
    }
    if (max_label >= probs.cols()) {
        throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(max_label) +
                                                    " exceeds probability columns");
    }
    return static_cast<std::size_t>(probs.cols());
}

// Per-class RG between two probability matrices, weighted by label frequency.
double weighted_prob_rg(const Matrix& reference, const Matrix& candidate,
                        std::span<const int> labels) {
    if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "probability matrices are not index-aligned");
    }
    check_aligned(labels.size(), static_cast<std::size_t>(reference.rows()));
    const std::vector<double> w = class_weights(labels, class_count(labels, reference));
    double total = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] == 0.0) continue;
        const auto ci = static_cast<Eigen::Index>(c);
        const std::vector<double> ref = column(reference, ci);
        const std::vector<double> cand = column(candidate, ci);
        total += w[c] * rg_score(ScorePair{ref, cand});
    }
    return std::clamp(total, 0.0, 1.0);
}

}  // namespace

void ScorePair::validate() const {
    if (reference.empty()) throw Error(ErrorCode::EmptyInput, "empty score pair");
    if (reference.size() != candidate.size()) {
        throw Error(ErrorCode::ShapeMismatch, "reference and candidate lengths differ");
    }
    if (reference.size() < 2) throw Error(ErrorCode::EmptyInput, "need at least two samples");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(reference.begin(), reference.end(), finite) ||
        !std::all_of(candidate.begin(), candidate.end(), finite)) {
        throw Error(ErrorCode::InvalidSpec, "non-finite score");
    }
}

Ecdf::Ecdf(std::span<const double> values) : sorted_(values.begin(), values.end()) {
    if (sorted_.empty()) throw Error(ErrorCode::EmptyInput, "ecdf of an empty sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double u) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), u);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double cvm_divergence(const ScorePair& pair, int p) {
    pair.validate();
    if (p < 1) throw Error(ErrorCode::InvalidSpec, "CvM order must be a positive integer");
    const Ecdf f(pair.reference);
    const Ecdf g(pair.candidate);
    double acc = 0.0;
    for (double y : pair.reference) acc += std::pow(std::abs(f(y) - g(y)), p);
    return acc / static_cast<double>(pair.reference.size());
}

double gini_index(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "gini of an empty sample");
    std::vector<double> y(values.begin(), values.end());
    if (std::any_of(y.begin(), y.end(), [](double v) { return v < 0.0; })) {
        throw Error(ErrorCode::NonPositiveMean, "gini index needs nonnegative values");
    }
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    if (!(mean > 0.0)) throw Error(ErrorCode::NonPositiveMean, "mean must be positive");
    std::sort(y.begin(), y.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * y[i];
    }
    return acc / (n * n * mean);
}

double rg_score(const ScorePair& pair) {
    pair.validate();
    const std::size_t n = pair.reference.size();
    const auto [lo, hi] = std::minmax_element(pair.reference.begin(), pair.reference.end());
    if (*lo == *hi) throw Error(ErrorCode::ConstantReference, "reference values are constant");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pair.candidate[a] < pair.candidate[b];
    });

    // Reference ordered by candidate, tied candidate groups averaged.
    std::vector<double> concordance(n);
    for (std::size_t start = 0; start < n;) {
        std::size_t stop = start + 1;
        while (stop < n && pair.candidate[order[stop]] == pair.candidate[order[start]]) ++stop;
        double group = 0.0;
        for (std::size_t j = start; j < stop; ++j) group += pair.reference[order[j]];
        group /= static_cast<double>(stop - start);
        std::fill(concordance.begin() + static_cast<std::ptrdiff_t>(start),
                  concordance.begin() + static_cast<std::ptrdiff_t>(stop), group);
        start = stop;
    }

    std::vector<double> ascending(pair.reference.begin(), pair.reference.end());
    std::sort(ascending.begin(), ascending.end());
    std::vector<double> descending(ascending.rbegin(), ascending.rend());

    const double sum_c = sum_of_prefix_sums(concordance);
    const double sum_a = sum_of_prefix_sums(ascending);
    const double sum_d = sum_of_prefix_sums(descending);
    return std::clamp((sum_d - sum_c) / (sum_d - sum_a), 0.0, 1.0);
}

double rg_from_cvm(const ScorePair& pair) {
    pair.validate();
    return 1.0 - cvm_divergence(pair, 1) / gini_index(pair.reference);
}

double r_squared(const ScorePair& pair) {
    pair.validate();
    const double n = static_cast<double>(pair.reference.size());
    const double mean = std::accumulate(pair.reference.begin(), pair.reference.end(), 0.0) / n;
    double var = 0.0;
    double mse = 0.0;
    for (std::size_t i = 0; i < pair.reference.size(); ++i) {
        var += (pair.reference[i] - mean) * (pair.reference[i] - mean);
        mse += (pair.reference[i] - pair.candidate[i]) * (pair.reference[i] - pair.candidate[i]);
    }
    if (var == 0.0) throw Error(ErrorCode::ConstantReference, "reference values are constant");
    return 1.0 - (mse / n) / (var / n);
}

std::vector<double> class_weights(std::span<const int> labels, std::size_t n_classes) {
    if (labels.empty()) throw Error(ErrorCode::EmptyInput, "no labels");
    std::vector<double> w(n_classes, 0.0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
            throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
        }
        w[static_cast<std::size_t>(y)] += 1.0;
    }
    for (double& v : w) v /= static_cast<double>(labels.size());
    return w;
}

double rga_multiclass(std::span<const int> labels, const Matrix& probs) {
    check_aligned(labels.size(), static_cast<std::size_t>(probs.rows()));
    const std::vector<double> w = class_weights(labels, class_count(labels, probs));
    if (std::count_if(w.begin(), w.end(), [](double v) { return v > 0.0; }) < 2) {
        throw Error(ErrorCode::SingleClassSplit, "labels contain fewer than two classes");
    }
    double total = 0.0;
    std::vector<double> indicator(labels.size());
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] == 0.0) continue;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            indicator[i] = labels[i] == static_cast<int>(c) ? 1.0 : 0.0;
        }
        const std::vector<double> cand = column(probs, static_cast<Eigen::Index>(c));
        total += w[c] * rg_score(ScorePair{indicator, cand});
    }
    return std::clamp(total, 0.0, 1.0);
}

double rgr_score(const Matrix& probs_original, const Matrix& probs_perturbed,
                 std::span<const int> labels) {
    return weighted_prob_rg(probs_original, probs_perturbed, labels);
}

double rge_score(const Matrix& probs_full, const Matrix& probs_reduced,
                 std::span<const int> labels) {
    return weighted_prob_rg(probs_full, probs_reduced, labels);
}

double curve_area(std::span<const double> levels, std::span<const double> scores) {
    if (levels.size() != scores.size()) {
        throw Error(ErrorCode::ShapeMismatch, "levels and scores differ in length");
    }
    if (levels.size() < 2) throw Error(ErrorCode::DegenerateGrid, "need at least two levels");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i] > levels[i - 1])) {
            throw Error(ErrorCode::DegenerateGrid, "levels must be strictly ascending");
        }
    }
    double area = 0.0;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        area += 0.5 * (scores[i] + scores[i - 1]) * (levels[i] - levels[i - 1]);
    }
    return area / (levels.back() - levels.front());
}

double curve_area(const RgCurve& curve) {
    std::vector<double> levels;
    std::vector<double> scores;
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
        if (i < curve.scores.size() && curve.scores[i]) {
            levels.push_back(curve.levels[i]);
            scores.push_back(*curve.scores[i]);
        }
    }
    if (scores.size() == 1) return scores.front();
    return curve_area(levels, scores);
}

double accuracy(std::span<const int> labels, std::span<const int> predicted) {
    check_aligned(labels.size(), predicted.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predicted[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double f1_macro(std::span<const int> labels, std::span<const int> predicted) {
    check_aligned(labels.size(), predicted.size());
    int max_class = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || predicted[i] < 0) throw Error(ErrorCode::LabelOutOfRange, "negative label");
        max_class = std::max({max_class, labels[i], predicted[i]});
    }
    const std::size_t k = static_cast<std::size_t>(max_class) + 1;
    std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
    std::vector<bool> present(k, false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        present[y] = true;
        if (y == p) {
            tp[y] += 1.0;
        } else {
            fp[p] += 1.0;
            fn[y] += 1.0;
        }
    }
    double total = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (!present[c]) continue;
        ++classes;
        const double precision = tp[c] + fp[c] > 0.0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
        const double recall = tp[c] / (tp[c] + fn[c]);
        if (precision + recall > 0.0) total += 2.0 * precision * recall / (precision + recall);
    }
    return total / static_cast<double>(classes);
}

double mse_prob(std::span<const int> labels, const Matrix& probs) {
    check_aligned(labels.size(), static_cast<std::size_t>(probs.rows()));
    class_count(labels, probs);
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            const double target = c == labels[i] ? 1.0 : 0.0;
            const double diff = probs(static_cast<Eigen::Index>(i), c) - target;
            acc += diff * diff;
        }
    }
    return acc / static_cast<double>(labels.size());
}

}  // namespace safeqml
