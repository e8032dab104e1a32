#include "safeqml/hybrid_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "safeqml/error.hpp"

namespace safeqml {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kGeluCubic = 0.044715;

std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void uniform_fill(Matrix& weight, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(rng);
}

void initialize(DenseLayer& layer, Rng& rng) {
    uniform_fill(layer.weight, rng);
    layer.bias.setZero();
}

void check_features(std::size_t expected, const Vector& features) {
    if (static_cast<std::size_t>(features.size()) != expected) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(expected) +
                                                  " features, got " +
                                                  std::to_string(features.size()));
    }
}

void check_label(int label, std::size_t n_classes) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
        throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
    }
}

// dLoss/dlogits for softmax + cross-entropy.
Vector logit_gradient(const Vector& probs, int label) {
    Vector g = probs;
    g(label) -= 1.0;
    return g;
}

void dense_backward(const DenseLayer& layer, const Vector& input, const Vector& grad_out,
                    DenseLayer& grad_layer, Vector* grad_in) {
    grad_layer.weight.noalias() = grad_out * input.transpose();
    grad_layer.bias = grad_out;
    if (grad_in) *grad_in = layer.weight.transpose() * grad_out;
}

template <typename Model>
Model zeros_like(const Model& model) {
    Model z = model;
    for (std::span<double> block : z.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
    return z;
}

template <typename Model>
std::vector<std::span<const double>> const_blocks(Model& model) {
    std::vector<std::span<const double>> out;
    for (std::span<double> b : model.parameter_blocks()) out.emplace_back(b.data(), b.size());
    return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::QML: return "QML";
    case ModelKind::MLP: return "MLP";
    case ModelKind::Linear: return "Linear";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "qml") return ModelKind::QML;
    if (lower == "mlp") return ModelKind::MLP;
    if (lower == "linear") return ModelKind::Linear;
    throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "Adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "adam_epsilon must be > 0");
    if (!(l2_strength >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2_strength must be >= 0");
}

std::vector<std::span<double>> HybridModel::parameter_blocks() {
    return {as_span(pre.weight), as_span(pre.bias), rotations.flat(), as_span(head.weight),
            as_span(head.bias)};
}

std::vector<std::span<double>> MlpModel::parameter_blocks() {
    return {as_span(hidden.weight), as_span(hidden.bias), as_span(output.weight),
            as_span(output.bias)};
}

std::vector<std::span<double>> LinearModel::parameter_blocks() {
    return {as_span(output.weight), as_span(output.bias)};
}

std::size_t qubits_for_dimension(std::size_t d) {
    if (d <= 2) return 1;
    return static_cast<std::size_t>(std::bit_width(d - 1));
}

HybridModel make_hybrid(std::size_t d, std::size_t n_classes, std::size_t n_qubits) {
    if (d == 0) throw Error(ErrorCode::InvalidSpec, "input dimension must be positive");
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "need at least two classes");
    if (n_qubits == 0) n_qubits = qubits_for_dimension(d);
    HybridModel m;
    m.layout = default_layout(n_qubits);
    m.layout.validate();
    m.pre = DenseLayer(d, std::size_t{1} << n_qubits);
    m.rotations = RotationParams(n_qubits);
    m.head = DenseLayer(n_qubits, n_classes);
    return m;
}

MlpModel make_mlp(std::size_t d, std::size_t n_classes) {
    if (d == 0) throw Error(ErrorCode::InvalidSpec, "input dimension must be positive");
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "need at least two classes");
    return MlpModel{DenseLayer(d, d), DenseLayer(d, n_classes)};
}

LinearModel make_linear(std::size_t d, std::size_t n_classes) {
    if (d == 0) throw Error(ErrorCode::InvalidSpec, "input dimension must be positive");
    if (n_classes < 2) throw Error(ErrorCode::InvalidSpec, "need at least two classes");
    return LinearModel{DenseLayer(d, n_classes)};
}

void initialize(HybridModel& model, Rng& rng) {
    initialize(model.pre, rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (double& a : model.rotations.flat()) a = angle(rng);
    initialize(model.head, rng);
}

void initialize(MlpModel& model, Rng& rng) {
    initialize(model.hidden, rng);
    initialize(model.output, rng);
}

void initialize(LinearModel& model, Rng& rng) { initialize(model.output, rng); }

double gelu(double x) {
    const double k = std::sqrt(2.0 / std::numbers::pi);
    return 0.5 * x * (1.0 + std::tanh(k * (x + kGeluCubic * x * x * x)));
}

double gelu_derivative(double x) {
    const double k = std::sqrt(2.0 / std::numbers::pi);
    const double t = std::tanh(k * (x + kGeluCubic * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * k * (1.0 + 3.0 * kGeluCubic * x * x);
}

Vector softmax(const Vector& logits) {
    Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
    return p / p.sum();
}

double cross_entropy(const Vector& probs, int label) {
    check_label(label, static_cast<std::size_t>(probs.size()));
    return -std::log(std::max(probs(label), kProbFloor));
}

HybridCache hybrid_forward(const HybridModel& model, const Vector& features) {
    check_features(model.input_dim(), features);
    HybridCache c;
    c.features = features;
    c.pre_activation = model.pre.apply(features);
    c.encoder_input = c.pre_activation.unaryExpr([](double v) { return gelu(v); });
    c.circuit = circuit_forward({c.encoder_input.data(), static_cast<std::size_t>(c.encoder_input.size())},
                                model.rotations, model.layout);
    const Vector q = Eigen::Map<const Vector>(c.circuit.expectations.data(),
                                              static_cast<Eigen::Index>(c.circuit.expectations.size()));
    c.probs = softmax(model.head.apply(q));
    return c;
}

Gradients<HybridModel> hybrid_backward(const HybridModel& model, const HybridCache& cache,
                                       int label) {
    check_label(label, model.n_classes());
    Gradients<HybridModel> g{zeros_like(model), Vector()};
    const Vector g_logits = logit_gradient(cache.probs, label);
    const Vector q = Eigen::Map<const Vector>(cache.circuit.expectations.data(),
                                              static_cast<Eigen::Index>(cache.circuit.expectations.size()));
    Vector g_q;
    dense_backward(model.head, q, g_logits, g.params.head, &g_q);

    const CircuitGradients cg =
        circuit_backward(cache.circuit, static_cast<std::size_t>(cache.encoder_input.size()),
                         model.rotations, {g_q.data(), static_cast<std::size_t>(g_q.size())},
                         model.layout);
    g.params.rotations = cg.params;

    Vector g_pre(cache.pre_activation.size());
    for (Eigen::Index i = 0; i < g_pre.size(); ++i) {
        g_pre(i) = cg.input[static_cast<std::size_t>(i)] * gelu_derivative(cache.pre_activation(i));
    }
    dense_backward(model.pre, cache.features, g_pre, g.params.pre, &g.input);
    return g;
}

MlpCache mlp_forward(const MlpModel& model, const Vector& features) {
    check_features(model.input_dim(), features);
    MlpCache c;
    c.features = features;
    c.hidden_pre = model.hidden.apply(features);
    c.hidden = c.hidden_pre.unaryExpr([](double v) { return gelu(v); });
    c.probs = softmax(model.output.apply(c.hidden));
    return c;
}

Gradients<MlpModel> mlp_backward(const MlpModel& model, const MlpCache& cache, int label) {
    check_label(label, model.n_classes());
    Gradients<MlpModel> g{zeros_like(model), Vector()};
    Vector g_hidden;
    dense_backward(model.output, cache.hidden, logit_gradient(cache.probs, label), g.params.output,
                   &g_hidden);
    const Vector g_pre =
        g_hidden.cwiseProduct(cache.hidden_pre.unaryExpr([](double v) { return gelu_derivative(v); }));
    dense_backward(model.hidden, cache.features, g_pre, g.params.hidden, &g.input);
    return g;
}

LinearCache linear_forward(const LinearModel& model, const Vector& features) {
    check_features(model.input_dim(), features);
    return LinearCache{features, softmax(model.output.apply(features))};
}

Gradients<LinearModel> linear_backward(const LinearModel& model, const LinearCache& cache,
                                       int label) {
    check_label(label, model.n_classes());
    Gradients<LinearModel> g{zeros_like(model), Vector()};
    dense_backward(model.output, cache.features, logit_gradient(cache.probs, label),
                   g.params.output, &g.input);
    return g;
}

// ---------------------------------------------------------------------------

namespace {

Vector forward_probs(const HybridModel& m, const Vector& x) { return hybrid_forward(m, x).probs; }
Vector forward_probs(const MlpModel& m, const Vector& x) { return mlp_forward(m, x).probs; }
Vector forward_probs(const LinearModel& m, const Vector& x) { return linear_forward(m, x).probs; }

Gradients<HybridModel> loss_gradients(const HybridModel& m, const Vector& x, int y) {
    return hybrid_backward(m, hybrid_forward(m, x), y);
}
Gradients<MlpModel> loss_gradients(const MlpModel& m, const Vector& x, int y) {
    return mlp_backward(m, mlp_forward(m, x), y);
}
Gradients<LinearModel> loss_gradients(const LinearModel& m, const Vector& x, int y) {
    return linear_backward(m, linear_forward(m, x), y);
}

}  // namespace

ModelKind Classifier::kind() const noexcept {
    switch (net_.index()) {
    case 0: return ModelKind::QML;
    case 1: return ModelKind::MLP;
    default: return ModelKind::Linear;
    }
}

std::size_t Classifier::input_dim() const {
    return std::visit([](const auto& m) { return m.input_dim(); }, net_);
}

std::size_t Classifier::n_classes() const {
    return std::visit([](const auto& m) { return m.n_classes(); }, net_);
}

std::size_t Classifier::parameter_count() const {
    return std::visit([](const auto& m) { return m.parameter_count(); }, net_);
}

Vector Classifier::predict_proba(const Vector& features) const {
    return std::visit([&](const auto& m) { return forward_probs(m, features); }, net_);
}

Matrix Classifier::predict_proba(const Matrix& features) const {
    Matrix out(features.rows(), static_cast<Eigen::Index>(n_classes()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        out.row(r) = predict_proba(Vector(features.row(r).transpose())).transpose();
    }
    return out;
}

double Classifier::loss(const Vector& features, int label) const {
    return cross_entropy(predict_proba(features), label);
}

Vector Classifier::input_gradient(const Vector& features, int label) const {
    return std::visit([&](const auto& m) { return loss_gradients(m, features, label).input; },
                      net_);
}

Classifier make_classifier(ModelKind kind, std::size_t d, std::size_t n_classes) {
    switch (kind) {
    case ModelKind::QML: return Classifier(make_hybrid(d, n_classes));
    case ModelKind::MLP: return Classifier(make_mlp(d, n_classes));
    case ModelKind::Linear: return Classifier(make_linear(d, n_classes));
    }
    throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

// ---------------------------------------------------------------------------

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const TrainConfig& config) {
    if (params.size() != grads.size()) {
        throw Error(ErrorCode::ShapeMismatch, "parameter and gradient block counts differ");
    }
    std::size_t total = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size()) {
            throw Error(ErrorCode::ShapeMismatch, "block " + std::to_string(b) + " has " +
                                                      std::to_string(params[b].size()) +
                                                      " parameters but " +
                                                      std::to_string(grads[b].size()) + " gradients");
        }
        total += params[b].size();
    }
    if (state.step == 0 && state.first_moment.empty()) {
        state.first_moment.assign(total, 0.0);
        state.second_moment.assign(total, 0.0);
    }
    if (state.first_moment.size() != total || state.second_moment.size() != total) {
        throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match parameter count");
    }

    ++state.step;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);

    std::size_t offset = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].size(); ++i, ++offset) {
            const double g = grads[b][i];
            double& m = state.first_moment[offset];
            double& v = state.second_moment[offset];
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            const double m_hat = m / correction1;
            const double v_hat = v / correction2;
            params[b][i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
}

namespace {

template <typename Model>
void accumulate(Model& acc, Model& grad, double scale) {
    auto dst = acc.parameter_blocks();
    auto src = grad.parameter_blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += scale * src[b][i];
    }
}

template <typename Model>
void train_loop(Model& model, const Dataset& data, const TrainConfig& config, double l2,
                Rng& rng) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    AdamState adam;
    const auto params = model.parameter_blocks();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            Model batch_grad = zeros_like(model);
            for (std::size_t j = start; j < stop; ++j) {
                const std::size_t s = order[j];
                Gradients<Model> g = loss_gradients(
                    model, Vector(data.features.row(static_cast<Eigen::Index>(s)).transpose()),
                    data.labels[s]);
                accumulate(batch_grad, g.params, scale);
            }
            if constexpr (std::is_same_v<Model, LinearModel>) {
                if (l2 > 0.0) batch_grad.output.weight += l2 * model.output.weight;
            }
            adam_step(params, const_blocks(batch_grad), adam, config);
        }
    }
}

}  // namespace

Classifier train_model(ModelKind kind, const Dataset& train_set, const TrainConfig& config) {
    if (train_set.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
    train_set.validate();
    config.validate();

    Rng rng(config.seed);
    Classifier model = make_classifier(kind, train_set.n_features(),
                                       static_cast<std::size_t>(train_set.n_classes));
    std::visit(
        [&](auto& m) {
            initialize(m, rng);
            train_loop(m, train_set, config, kind == ModelKind::Linear ? config.l2_strength : 0.0,
                       rng);
        },
        model.network());
    return model;
}

double training_accuracy(const Classifier& model, const Dataset& data) {
    const std::vector<int> pred = argmax_rows(model.predict_proba(data.features));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
    return data.size() ? static_cast<double>(hits) / static_cast<double>(data.size()) : 0.0;
}

Vector fgsm_perturb(const Classifier& model, const Vector& features, int label, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be >= 0");
    if (epsilon == 0.0) return features;
    const Vector grad = model.input_gradient(features, label);
    Vector out = features;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double g = grad(i);
        out(i) += epsilon * static_cast<double>((g > 0.0) - (g < 0.0));
    }
    return out;
}

std::vector<int> argmax_rows(const Matrix& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c) {
            if (probs(r, c) > probs(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace safeqml
