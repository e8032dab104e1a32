#include "safeqml/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "safeqml/error.hpp"
#include "safeqml/random.hpp"
#include "safeqml/serialization.hpp"

namespace safeqml {

namespace {

// Child-seed streams inside a fold.
constexpr std::uint64_t kProbeStream = 0x100;
constexpr std::uint64_t kTrainStream = 0x200;
constexpr std::uint64_t kNoiseStream = 0x300;

std::uint64_t kind_index(ModelKind kind) { return static_cast<std::uint64_t>(kind); }

RgCurve mean_curve(const std::vector<const RgCurve*>& curves) {
    RgCurve out;
    out.levels = curves.front()->levels;
    for (std::size_t i = 0; i < out.levels.size(); ++i) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const RgCurve* c : curves) {
            if (i < c->scores.size() && c->scores[i]) {
                sum += *c->scores[i];
                ++count;
            }
        }
        out.scores.push_back(count ? std::optional<double>(sum / static_cast<double>(count))
                                   : std::nullopt);
    }
    out.area = curve_area(out);
    return out;
}

}  // namespace

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::validation_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(i);
    }
    return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidConfig, "need at least two folds");
    if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "no labels to split");
    int max_label = 0;
    for (int y : labels) {
        if (y < 0) throw Error(ErrorCode::LabelOutOfRange, "negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }

    FoldPlan plan{k, std::vector<std::size_t>(labels.size(), 0), seed};
    Rng rng(seed);
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& idx = members[c];
        if (idx.empty()) continue;
        if (idx.size() < k) {
            throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " +
                                                      std::to_string(idx.size()) +
                                                      " samples, fewer than " + std::to_string(k) +
                                                      " folds");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
    }

    // Every class gives floor(n_c / k) members to each fold; the n_c mod k
    // leftovers ("extras") are spread with folds 0..r-1 taking one extra more
    // than the rest and each fold's class mix within one sample of the global mix.
    const std::size_t n = labels.size();
    std::size_t total_extras = 0;
    for (const auto& idx : members) total_extras += idx.size() % k;
    const std::size_t large = total_extras % k;
    std::vector<std::size_t> capacity(k, total_extras / k);
    for (std::size_t f = 0; f < large; ++f) ++capacity[f];

    enum Kind { kAllLarge = 0, kLargeOnly = 1, kFree = 2 };
    auto kind_of = [&](std::size_t c) {
        const std::size_t nc = members[c].size();
        const std::size_t rc = nc % k;
        if (rc * n < nc * large) return kLargeOnly;
        if (rc * n > k * n - nc * (k - large)) return kAllLarge;
        return kFree;
    };
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (!members[c].empty()) order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int ka = kind_of(a), kb = kind_of(b);
        if (ka != kb) return ka < kb;
        return members[a].size() % k > members[b].size() % k;
    });

    for (std::size_t c : order) {
        const auto& idx = members[c];
        const std::size_t extras = idx.size() % k;
        const Kind kind = kind_of(c);
        std::vector<bool> extra(k, false);
        std::size_t given = 0;
        if (kind == kAllLarge) {
            for (std::size_t f = 0; f < large; ++f) extra[f] = true;
            given = large;
        }
        std::vector<std::size_t> candidates;
        for (std::size_t f = 0; f < k; ++f) {
            if (!extra[f] && (kind != kLargeOnly || f < large)) candidates.push_back(f);
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::size_t a, std::size_t b) { return capacity[a] > capacity[b]; });
        for (std::size_t i = 0; given < extras && i < candidates.size(); ++i, ++given) {
            extra[candidates[i]] = true;
        }
        std::size_t next = 0;
        for (std::size_t f = 0; f < k; ++f) {
            if (extra[f]) --capacity[f];
            const std::size_t take = idx.size() / k + (extra[f] ? 1 : 0);
            for (std::size_t t = 0; t < take; ++t) plan.assignments[idx[next++]] = f;
        }
    }
    return plan;
}

Scaler Scaler::fit(const Matrix& train) {
    if (train.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a scaler on no rows");
    Scaler s;
    s.mean.resize(train.cols());
    s.scale.resize(train.cols());
    const double n = static_cast<double>(train.rows());
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        const auto col = train.col(c);
        if (col.minCoeff() == col.maxCoeff()) {
            s.mean(c) = col(0);
            s.scale(c) = 1.0;
            continue;
        }
        s.mean(c) = col.sum() / n;
        const double var = (col.array() - s.mean(c)).square().sum() / n;
        s.scale(c) = std::max(std::sqrt(var), kStdFloor);
    }
    return s;
}

Matrix Scaler::transform(const Matrix& features) const {
    if (features.cols() != mean.size()) {
        throw Error(ErrorCode::ShapeMismatch, "scaler was fitted on a different feature count");
    }
    Matrix out(features.rows(), features.cols());
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        out.row(r) = ((features.row(r).transpose() - mean).array() / scale.array()).matrix().transpose();
    }
    return out;
}

Standardized standardize(const Matrix& train, const Matrix& apply_to) {
    Scaler s = Scaler::fit(train);
    Matrix t = s.transform(train);
    Matrix a = s.transform(apply_to);
    return {std::move(t), std::move(a), std::move(s)};
}

void ExperimentConfig::validate() const {
    if (kinds.empty()) throw Error(ErrorCode::InvalidConfig, "no model kinds requested");
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        for (std::size_t j = i + 1; j < kinds.size(); ++j) {
            if (kinds[i] == kinds[j]) throw Error(ErrorCode::InvalidConfig, "duplicate model kind");
        }
    }
    if (folds < 2) throw Error(ErrorCode::InvalidConfig, "need at least two folds");
    if (threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be at least 1");
    train.validate();
    NoiseGrid{curves.noise_multipliers, {}}.validate();
    for (const auto* grid : {&curves.fgsm_epsilons, &curves.removal_fractions,
                             &curves.feature_fractions}) {
        if (grid->size() < 2 || grid->front() != 0.0) {
            throw Error(ErrorCode::InvalidConfig, "curve grids need >= 2 levels starting at 0");
        }
        for (std::size_t i = 1; i < grid->size(); ++i) {
            if (!((*grid)[i] > (*grid)[i - 1])) {
                throw Error(ErrorCode::InvalidConfig, "curve grids must be strictly ascending");
            }
        }
    }
    if (curves.removal_fractions.back() > 0.95 + 1e-9) {
        throw Error(ErrorCode::InvalidConfig, "removal fractions must not exceed 0.95");
    }
    if (curves.feature_fractions.back() > 1.0 + 1e-9) {
        throw Error(ErrorCode::InvalidConfig, "feature fractions must not exceed 1");
    }
}

std::map<std::string, double> FoldMetrics::named() const {
    std::map<std::string, double> m{{"f1_macro", f1_macro},       {"accuracy", accuracy},
                                    {"mse", mse},                 {"rga", rga},
                                    {"aurga", aurga},             {"aurgr_noise", aurgr_noise},
                                    {"aurge", aurge}};
    if (aurgr_fgsm) m.emplace("aurgr_fgsm", *aurgr_fgsm);
    return m;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) { return derive_seed(seed, fold); }

std::vector<FoldResult> run_fold(const Dataset& dataset, const FoldPlan& plan, std::size_t fold,
                                 const ExperimentConfig& config) {
    const std::uint64_t fseed = fold_seed(config.seed, fold);
    const Dataset train_raw = dataset.subset(plan.train_indices(fold));
    const Dataset valid_raw = dataset.subset(plan.validation_indices(fold));

    Standardized z = standardize(train_raw.features, valid_raw.features);
    Dataset train{std::move(z.train), train_raw.labels, dataset.n_classes};
    const Matrix& valid = z.applied;
    const std::vector<int>& labels = valid_raw.labels;

    TrainConfig probe_config = config.train;
    probe_config.seed = derive_seed(fseed, kProbeStream);
    const FeatureRanking ranking = feature_importance_ranking(train, probe_config);
    const NoiseGrid noise{config.curves.noise_multipliers, column_std(valid)};

    std::vector<FoldResult> results;
    for (ModelKind kind : config.kinds) {
        TrainConfig tc = config.train;
        tc.seed = derive_seed(fseed, kTrainStream + kind_index(kind));
        const Classifier model = train_model(kind, train, tc);

        FoldResult r;
        r.kind = kind;
        r.fold = fold;
        r.fold_seed = fseed;
        const Matrix probs = model.predict_proba(valid);
        const std::vector<int> predicted = argmax_rows(probs);
        r.metrics.f1_macro = f1_macro(labels, predicted);
        r.metrics.accuracy = accuracy(labels, predicted);
        r.metrics.mse = mse_prob(labels, probs);
        r.metrics.rga = rga_multiclass(labels, probs);

        r.curves[kCurveRga] = rga_removal_curve(probs, labels, config.curves.removal_fractions);
        r.curves[kCurveNoise] = rgr_noise_curve(model, valid, noise, labels,
                                                derive_seed(fseed, kNoiseStream + kind_index(kind)));
        r.curves[kCurveFgsm] = rgr_fgsm_curve(model, valid, labels, config.curves.fgsm_epsilons);
        r.curves[kCurveRge] =
            rge_removal_curve(model, valid, labels, ranking, config.curves.feature_fractions);

        r.metrics.aurga = r.curves[kCurveRga].area;
        r.metrics.aurgr_noise = r.curves[kCurveNoise].area;
        r.metrics.aurgr_fgsm = r.curves[kCurveFgsm].area;
        r.metrics.aurge = r.curves[kCurveRge].area;
        results.push_back(std::move(r));
    }
    return results;
}

Aggregate aggregate(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "nothing to aggregate");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    Aggregate a{mean, values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
    // clamp into the fold range
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    a.mean = std::clamp(a.mean, *lo, *hi);
    return a;
}

ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
    dataset.validate();
    config.validate();
    const FoldPlan plan = stratified_kfold(dataset.labels, config.folds, config.seed);

    auto guarded = [&](std::size_t fold) {
        try {
            return run_fold(dataset, plan, fold, config);
        } catch (const Error& e) {
            throw Error(e.code(), "fold " + std::to_string(fold) + ": " + e.what());
        }
    };

    std::vector<std::vector<FoldResult>> per_fold(config.folds);
    const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, config.folds));
    if (workers == 1) {
        for (std::size_t f = 0; f < config.folds; ++f) per_fold[f] = guarded(f);
    } else {
        for (std::size_t start = 0; start < config.folds; start += workers) {
            std::vector<std::future<std::vector<FoldResult>>> jobs;
            for (std::size_t f = start; f < std::min(config.folds, start + workers); ++f) {
                jobs.push_back(std::async(std::launch::async, guarded, f));
            }
            for (std::size_t j = 0; j < jobs.size(); ++j) per_fold[start + j] = jobs[j].get();
        }
    }

    ExperimentReport report;
    report.config = config;
    report.config_hash = config_hash(config);
    report.seed = config.seed;
    report.n_samples = dataset.size();
    report.n_features = dataset.n_features();
    report.n_classes = dataset.n_classes;

    for (ModelKind kind : config.kinds) {
        std::vector<const FoldResult*> rows;
        for (const auto& fold_rows : per_fold) {
            for (const FoldResult& r : fold_rows) {
                if (r.kind == kind) {
                    report.folds.push_back(r);
                }
            }
        }
        for (const FoldResult& r : report.folds) {
            if (r.kind == kind) rows.push_back(&r);
        }

        KindSummary summary;
        summary.kind = kind;
        std::map<std::string, std::vector<double>> columns;
        for (const FoldResult* r : rows) {
            for (const auto& [name, value] : r->metrics.named()) columns[name].push_back(value);
        }
        for (const auto& [name, values] : columns) summary.metrics[name] = aggregate(values);

        for (const auto& [name, curve] : rows.front()->curves) {
            std::vector<const RgCurve*> curves;
            for (const FoldResult* r : rows) curves.push_back(&r->curves.at(name));
            summary.mean_curves[name] = mean_curve(curves);
        }
        report.summary.push_back(std::move(summary));
    }
    return report;
}

}  // namespace safeqml
