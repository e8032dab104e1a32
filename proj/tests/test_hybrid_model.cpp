#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "safeqml/error.hpp"
#include "safeqml/eval_harness.hpp"
#include "safeqml/hybrid_model.hpp"
#include "safeqml/io.hpp"
#include "safeqml/safe_metrics.hpp"

using namespace safeqml;

namespace {

double gelu_formula(double x) {
    return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
}

template <typename Model>
void fill_random(Model& model, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::span<double> block : model.parameter_blocks()) {
        for (double& v : block) v = u(rng);
    }
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
    return v;
}

/// Compares every analytic parameter and input gradient with central differences.
template <typename Model, typename Forward, typename Backward>
double max_gradient_error(Model model, const Vector& x, int label, Forward forward, Backward backward) {
    auto grads = backward(model, forward(model, x), label);
    auto loss_at = [&](const Model& m, const Vector& input) {
        return cross_entropy(forward(m, input).probs, label);
    };
    double worst = 0.0;
    auto blocks = model.parameter_blocks();
    auto grad_blocks = grads.params.parameter_blocks();
    const double h = 1e-5;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            const double saved = blocks[b][i];
            blocks[b][i] = saved + h;
            const double up = loss_at(model, x);
            blocks[b][i] = saved - h;
            const double down = loss_at(model, x);
            blocks[b][i] = saved;
            worst = std::max(worst, oracle::relative_error(grad_blocks[b][i], (up - down) / (2 * h)));
        }
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fd = (loss_at(model, xp) - loss_at(model, xm)) / (2 * h);
        worst = std::max(worst, oracle::relative_error(grads.input(i), fd));
    }
    return worst;
}

Dataset two_blobs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset ds;
    ds.n_classes = 2;
    ds.features.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 2);
        ds.labels.push_back(y);
        ds.features(static_cast<Eigen::Index>(i), 0) = (y == 0 ? -3.0 : 3.0) + g(rng);
        ds.features(static_cast<Eigen::Index>(i), 1) = g(rng);
    }
    return ds;
}

}  // namespace

// ---------- gelu / softmax / cross_entropy ----------
TEST(Gelu, ReferencePoints) {
    EXPECT_EQ(gelu(0.0), 0.0);
    EXPECT_NEAR(gelu(10.0), 10.0, 1e-6);
    EXPECT_NEAR(gelu(1.0), gelu_formula(1.0), 1e-12);
    EXPECT_NEAR(gelu(-10.0), 0.0, 1e-6);
}

TEST(Gelu, MonotoneAboveItsMinimum) {
    double prev = gelu(-0.75);
    for (double x = -0.74; x < 8.0; x += 0.01) {
        const double cur = gelu(x);
        EXPECT_GT(cur, prev) << x;
        prev = cur;
    }
}

TEST(Gelu, DerivativeMatchesFiniteDifference) {
    for (double x = -4.0; x <= 4.0; x += 0.37) {
        const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
        EXPECT_NEAR(gelu_derivative(x), fd, 1e-7) << x;
    }
}

TEST(Softmax, StableAndNormalised) {
    const Vector p = softmax((Vector(3) << 1000.0, 1000.0, -1000.0).finished());
    EXPECT_NEAR(p(0), 0.5, 1e-15);
    EXPECT_NEAR(p(1), 0.5, 1e-15);
    EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(CrossEntropy, Examples) {
    EXPECT_NEAR(cross_entropy((Vector(3) << 1, 0, 0).finished(), 0), 0.0, 1e-9);
    const Vector uniform = Vector::Constant(3, 1.0 / 3.0);
    for (int y = 0; y < 3; ++y) EXPECT_NEAR(cross_entropy(uniform, y), std::log(3.0), 1e-12);
    EXPECT_NEAR(cross_entropy((Vector(3) << 0.7, 0.2, 0.1).finished(), 1), -std::log(0.2), 1e-12);
    EXPECT_NEAR(cross_entropy((Vector(2) << 1, 0).finished(), 1), -std::log(1e-12), 1e-9);
}

// ---------- forward passes ----------
TEST(HybridForward, ZeroHeadGivesUniform) {
    std::mt19937_64 rng(1);
    HybridModel m = make_hybrid(8, 3);
    fill_random(m, rng);
    m.head.weight.setZero();
    m.head.bias.setZero();
    const Vector p = hybrid_forward(m, random_vector(8, rng)).probs;
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(p(k), 1.0 / 3.0, 1e-15);
}

TEST(HybridForward, ProbabilitiesValidAndObservablesBounded) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        HybridModel m = make_hybrid(6, 3);
        fill_random(m, rng, 3.0);
        const HybridCache c = hybrid_forward(m, random_vector(6, rng) * 5.0);
        EXPECT_NEAR(c.probs.sum(), 1.0, 1e-9);
        for (Eigen::Index k = 0; k < c.probs.size(); ++k) {
            EXPECT_GT(c.probs(k), 0.0);
            EXPECT_LT(c.probs(k), 1.0);
        }
        for (double q : c.circuit.expectations) EXPECT_LE(std::abs(q), 1.0 + 1e-12);
    }
}

TEST(HybridForward, TinyModelMatchesStepByStepOracle) {
    // d = 4, n = 2, 2 classes, fixed parameters.
    HybridModel m = make_hybrid(4, 2);
    ASSERT_EQ(m.layout.n_qubits, 2u);
    m.pre.weight << 0.5, -0.2, 0.1, 0.3,
                    -0.4, 0.6, 0.2, -0.1,
                    0.3, 0.1, -0.5, 0.2,
                    0.2, -0.3, 0.4, 0.7;
    m.pre.bias << 0.1, -0.1, 0.05, 0.0;
    const std::vector<double> angles{0.3, 1.1, -0.7, 2.0, -0.4, 0.9};
    std::copy(angles.begin(), angles.end(), m.rotations.flat().begin());
    m.head.weight << 1.5, -0.5, -0.8, 1.2;
    m.head.bias << 0.2, -0.3;
    const Vector x = (Vector(4) << 0.9, -1.3, 0.4, 2.1).finished();

    // independent chain
    Eigen::Matrix4d w;
    w << 0.5, -0.2, 0.1, 0.3, -0.4, 0.6, 0.2, -0.1, 0.3, 0.1, -0.5, 0.2, 0.2, -0.3, 0.4, 0.7;
    const Eigen::Vector4d pre = w * x + Eigen::Vector4d(0.1, -0.1, 0.05, 0.0);
    Eigen::Vector4d act;
    for (int i = 0; i < 4; ++i) act(i) = gelu_formula(pre(i));
    const Eigen::Vector4d unit = act / act.norm();
    const oracle::CVector psi = oracle::layer_unitary(2, angles) * unit.cast<std::complex<double>>();
    const std::vector<double> z = oracle::z_expectations(2, psi);
    const double l0 = 1.5 * z[0] - 0.5 * z[1] + 0.2;
    const double l1 = -0.8 * z[0] + 1.2 * z[1] - 0.3;
    const double p0 = 1.0 / (1.0 + std::exp(l1 - l0));

    const Vector p = hybrid_forward(m, x).probs;
    EXPECT_NEAR(p(0), p0, 1e-10);
    EXPECT_NEAR(p(1), 1.0 - p0, 1e-10);
}

TEST(HybridForward, ZeroPreLayerOutputThrows) {
    HybridModel m = make_hybrid(4, 2);
    try {
        hybrid_forward(m, Vector::Ones(4));
        FAIL() << "expected ZeroVector";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    }
}

TEST(Baselines, ZeroWeightsGiveUniform) {
    std::mt19937_64 rng(3);
    const Vector x = random_vector(5, rng);
    const Vector pm = mlp_forward(make_mlp(5, 3), x).probs;
    const Vector pl = linear_forward(make_linear(5, 3), x).probs;
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_NEAR(pm(k), 1.0 / 3.0, 1e-15);
        EXPECT_NEAR(pl(k), 1.0 / 3.0, 1e-15);
    }
}

TEST(Baselines, MlpMatchesDirectFormula) {
    std::mt19937_64 rng(4);
    MlpModel m = make_mlp(3, 2);
    fill_random(m, rng);
    const Vector x = random_vector(3, rng);
    Vector h = m.hidden.weight * x + m.hidden.bias;
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = gelu_formula(h(i));
    const Vector logits = m.output.weight * h + m.output.bias;
    const double p0 = 1.0 / (1.0 + std::exp(logits(1) - logits(0)));
    EXPECT_NEAR(mlp_forward(m, x).probs(0), p0, 1e-12);
}

// ---------- parameter counts ----------
TEST(ParameterCount, FullScale) {
    const HybridModel q = make_hybrid(512, 3);
    EXPECT_EQ(q.layout.n_qubits, 9u);
    EXPECT_EQ(q.parameter_count(), 262713u);
    const MlpModel mlp = make_mlp(512, 3);
    EXPECT_EQ(mlp.hidden.out(), 512u);
    EXPECT_EQ(mlp.parameter_count(), 264195u);
    EXPECT_EQ(make_linear(512, 3).parameter_count(), 1539u);
}

TEST(ParameterCount, QubitsForDimension) {
    EXPECT_EQ(qubits_for_dimension(1), 1u);
    EXPECT_EQ(qubits_for_dimension(2), 1u);
    EXPECT_EQ(qubits_for_dimension(3), 2u);
    EXPECT_EQ(qubits_for_dimension(64), 6u);
    EXPECT_EQ(qubits_for_dimension(65), 7u);
}

// ---------- backward passes ----------
TEST(HybridBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(trial % 7);
        const std::size_t classes = 2 + static_cast<std::size_t>(trial % 2);
        HybridModel m = make_hybrid(d, classes);
        fill_random(m, rng);
        const Vector x = random_vector(d, rng);
        const double err = max_gradient_error(m, x, trial % static_cast<int>(classes), hybrid_forward,
                                              hybrid_backward);
        EXPECT_LT(err, 1e-4) << "trial " << trial;
    }
}

TEST(HybridBackward, ConfidentCorrectClassHasVanishingHeadGradient) {
    std::mt19937_64 rng(6);
    HybridModel m = make_hybrid(4, 2);
    fill_random(m, rng);
    m.head.weight.setZero();
    m.head.bias << 60.0, -60.0;
    const HybridCache c = hybrid_forward(m, random_vector(4, rng));
    const auto g = hybrid_backward(m, c, 0);
    EXPECT_LT(g.params.head.bias.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(g.params.head.weight.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MlpBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        MlpModel m = make_mlp(5, 3);
        fill_random(m, rng);
        EXPECT_LT(max_gradient_error(m, random_vector(5, rng), trial % 3, mlp_forward, mlp_backward), 1e-4);
    }
}

TEST(LinearBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        LinearModel m = make_linear(4, 3);
        fill_random(m, rng);
        EXPECT_LT(max_gradient_error(m, random_vector(4, rng), trial % 3, linear_forward, linear_backward),
                  1e-4);
    }
}

// ---------- Adam ----------
namespace {
struct AdamFixture {
    std::vector<double> params;
    std::vector<double> grads;
    std::vector<std::span<double>> p;
    std::vector<std::span<const double>> g;

    AdamFixture(std::vector<double> init, std::vector<double> grad)
        : params(std::move(init)), grads(std::move(grad)) {
        p.emplace_back(params);
        g.emplace_back(grads);
    }
};
}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
    AdamFixture f({1.0, -2.0, 0.5}, {0.0, 0.0, 0.0});
    AdamState s;
    const TrainConfig cfg;
    adam_step(f.p, f.g, s, cfg);
    EXPECT_EQ(f.params, (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
    AdamFixture f({0.0, 0.0, 0.0}, {0.3, -2.0, 1e-3});
    AdamState s;
    const TrainConfig cfg;
    adam_step(f.p, f.g, s, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        const double g = f.grads[i];
        EXPECT_NEAR(f.params[i], -cfg.learning_rate * g / (std::abs(g) + cfg.adam_epsilon), 1e-15);
        EXPECT_NEAR(std::abs(f.params[i]), cfg.learning_rate, 1e-7);
    }
}

TEST(Adam, TwoStepsMatchHandRecurrence) {
    const double g = 0.7;
    AdamFixture f({1.0}, {g});
    AdamState s;
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    adam_step(f.p, f.g, s, cfg);
    adam_step(f.p, f.g, s, cfg);
    // t=1: m=0.07, v=0.00049; t=2: m=0.133, v=0.00097951
    const double m1 = 0.1 * g, v1 = 0.001 * g * g;
    const double th1 = 1.0 - 0.01 * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
    const double m2 = 0.9 * m1 + 0.1 * g, v2 = 0.999 * v1 + 0.001 * g * g;
    const double th2 = th1 - 0.01 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.998001)) + 1e-8);
    EXPECT_NEAR(f.params[0], th2, 1e-12);
    EXPECT_EQ(s.step, 2u);
}

TEST(Adam, ShapeMismatch) {
    AdamFixture f({1.0, 2.0}, {0.1});
    AdamState s;
    EXPECT_THROW(adam_step(f.p, f.g, s, TrainConfig{}), Error);
}

// ---------- training ----------
TEST(Train, LinearSeparatesBlobs) {
    const Dataset ds = two_blobs(200, 11);
    TrainConfig cfg;
    cfg.seed = 3;
    const Classifier model = train_model(ModelKind::Linear, ds, cfg);
    EXPECT_GE(training_accuracy(model, ds), 0.99);
}

TEST(Train, DeterministicParameters) {
    const Dataset ds = two_blobs(120, 12);
    TrainConfig cfg;
    cfg.seed = 9;
    cfg.epochs = 3;
    for (ModelKind kind : {ModelKind::QML, ModelKind::MLP, ModelKind::Linear}) {
        EXPECT_TRUE(train_model(kind, ds, cfg) == train_model(kind, ds, cfg)) << to_string(kind);
    }
}

TEST(Train, QmlFitsSixteenDimensionalBlobs) {
    SyntheticSpec spec;
    spec.n_samples = 300;
    spec.n_features = 16;
    spec.seed = 21;
    Dataset ds = generate_synthetic(spec);
    ds.features = Scaler::fit(ds.features).transform(ds.features);
    TrainConfig cfg;
    cfg.seed = 4;
    const Classifier model = train_model(ModelKind::QML, ds, cfg);
    EXPECT_EQ(std::get<HybridModel>(model.network()).layout.n_qubits, 4u);
    const std::vector<int> pred = argmax_rows(model.predict_proba(ds.features));
    EXPECT_GE(f1_macro(ds.labels, pred), 0.95);
}

TEST(Train, Errors) {
    Dataset empty;
    empty.n_classes = 2;
    empty.features.resize(0, 2);
    EXPECT_THROW(train_model(ModelKind::Linear, empty, TrainConfig{}), Error);
    Dataset bad = two_blobs(10, 1);
    bad.labels[3] = 5;
    try {
        train_model(ModelKind::Linear, bad, TrainConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
    }
}

TEST(Train, ConfigValidation) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = TrainConfig{};
    cfg.epochs = 0;
    EXPECT_THROW(cfg.validate(), Error);
}

// ---------- FGSM ----------
TEST(Fgsm, ZeroEpsilonIsIdentity) {
    std::mt19937_64 rng(13);
    MlpModel m = make_mlp(4, 3);
    fill_random(m, rng);
    const Classifier c(m);
    const Vector x = random_vector(4, rng);
    EXPECT_EQ(fgsm_perturb(c, x, 1, 0.0), x);
}

TEST(Fgsm, StepHasEpsilonInfinityNorm) {
    std::mt19937_64 rng(14);
    HybridModel m = make_hybrid(6, 3);
    fill_random(m, rng);
    const Classifier c(m);
    const Vector x = random_vector(6, rng);
    const Vector g = c.input_gradient(x, 2);
    const Vector delta = fgsm_perturb(c, x, 2, 0.3) - x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (g(i) != 0.0) EXPECT_NEAR(std::abs(delta(i)), 0.3, 1e-15);
        else EXPECT_EQ(delta(i), 0.0);
    }
}

TEST(Fgsm, IncreasesLossOnTrainedModel) {
    SyntheticSpec spec;
    spec.n_samples = 400;
    spec.n_features = 8;
    spec.separation = 1.0;
    spec.seed = 5;
    Dataset ds = generate_synthetic(spec);
    ds.features = Scaler::fit(ds.features).transform(ds.features);
    TrainConfig cfg;
    cfg.seed = 8;
    cfg.epochs = 5;
    const Classifier model = train_model(ModelKind::MLP, ds, cfg);
    int increased = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        const Vector x = ds.features.row(static_cast<Eigen::Index>(i)).transpose();
        const int y = ds.labels[i];
        if (model.loss(fgsm_perturb(model, x, y, 0.05), y) >= model.loss(x, y)) ++increased;
    }
    EXPECT_GE(increased, 180);
}

TEST(ArgmaxRows, LowestIndexWinsTies) {
    Matrix p(2, 3);
    p << 0.4, 0.4, 0.2, 0.1, 0.45, 0.45;
    EXPECT_EQ(argmax_rows(p), (std::vector<int>{0, 1}));
}

TEST(ModelKindNames, RoundTrip) {
    for (ModelKind k : {ModelKind::QML, ModelKind::MLP, ModelKind::Linear}) {
        EXPECT_EQ(parse_model_kind(to_string(k)), k);
    }
    EXPECT_EQ(parse_model_kind("qml"), ModelKind::QML);
    EXPECT_THROW(parse_model_kind("svm"), Error);
}
