#pragma once

/**
 * The hybrid classifier and its two classical ablation baselines, sharing one
 * cross-entropy / Adam training loop.
 *
 *   QML:    z -> gelu(W z + b) -> amplitude encode -> entangling layer
 *             -> <Z_i> -> W_c q + b_c -> softmax
 *   MLP:    z -> gelu(W1 z + b1) -> W2 h + b2 -> softmax   (hidden width = d)
 *   Linear: z -> W z + b -> softmax, trained with an L2 penalty on W
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "safeqml/dataset.hpp"
#include "safeqml/quantum_sim.hpp"
#include "safeqml/random.hpp"

namespace safeqml {

enum class ModelKind { QML, MLP, Linear };

std::string_view to_string(ModelKind kind) noexcept;
/// Case-insensitive; throws InvalidConfig for unknown names.
ModelKind parse_model_kind(std::string_view name);

struct TrainConfig {
    double learning_rate = 3e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Penalty (l2/2)*||W||^2 added to the Linear baseline's loss. The QML and
    /// MLP models are trained without it.
    double l2_strength = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// y = W x + b, W stored row-major (out x in).
struct DenseLayer {
    Matrix weight;
    Vector bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out)
        : weight(Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in))),
          bias(Vector::Zero(static_cast<Eigen::Index>(out))) {}

    std::size_t in() const noexcept { return static_cast<std::size_t>(weight.cols()); }
    std::size_t out() const noexcept { return static_cast<std::size_t>(weight.rows()); }
    std::size_t parameter_count() const noexcept { return out() * in() + out(); }

    Vector apply(const Vector& x) const { return weight * x + bias; }

    bool operator==(const DenseLayer& o) const {
        return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
               weight == o.weight && bias.size() == o.bias.size() && bias == o.bias;
    }
};

struct HybridModel {
    DenseLayer pre;            ///< d -> 2^n
    RotationParams rotations;  ///< n x 3
    CircuitLayout layout;
    DenseLayer head;           ///< n -> n_classes

    std::size_t input_dim() const noexcept { return pre.in(); }
    std::size_t n_classes() const noexcept { return head.out(); }
    std::size_t parameter_count() const noexcept {
        return pre.parameter_count() + rotations.flat().size() + head.parameter_count();
    }
    std::vector<std::span<double>> parameter_blocks();
    bool operator==(const HybridModel&) const = default;
};

struct MlpModel {
    DenseLayer hidden;  ///< d -> d
    DenseLayer output;  ///< d -> n_classes

    std::size_t input_dim() const noexcept { return hidden.in(); }
    std::size_t n_classes() const noexcept { return output.out(); }
    std::size_t parameter_count() const noexcept {
        return hidden.parameter_count() + output.parameter_count();
    }
    std::vector<std::span<double>> parameter_blocks();
    bool operator==(const MlpModel&) const = default;
};

struct LinearModel {
    DenseLayer output;  ///< d -> n_classes

    std::size_t input_dim() const noexcept { return output.in(); }
    std::size_t n_classes() const noexcept { return output.out(); }
    std::size_t parameter_count() const noexcept { return output.parameter_count(); }
    std::vector<std::span<double>> parameter_blocks();
    bool operator==(const LinearModel&) const = default;
};

/// Smallest n with 2^n >= d (at least 1).
std::size_t qubits_for_dimension(std::size_t d);

/// Zero-initialised architectures. `n_qubits == 0` picks qubits_for_dimension(d).
HybridModel make_hybrid(std::size_t d, std::size_t n_classes, std::size_t n_qubits = 0);
MlpModel make_mlp(std::size_t d, std::size_t n_classes);
LinearModel make_linear(std::size_t d, std::size_t n_classes);

/// Angles uniform in [0, 2pi), weights uniform in +-1/sqrt(fan_in), biases 0.
void initialize(HybridModel& model, Rng& rng);
void initialize(MlpModel& model, Rng& rng);
void initialize(LinearModel& model, Rng& rng);

// ---------------------------------------------------------------------------
// Elementwise pieces

/// tanh approximation of GELU.
double gelu(double x);
double gelu_derivative(double x);

/// Numerically stable softmax.
Vector softmax(const Vector& logits);

/// -log(max(probs[label], 1e-12)).
double cross_entropy(const Vector& probs, int label);

// ---------------------------------------------------------------------------
// Forward / backward

struct HybridCache {
    Vector features;
    Vector pre_activation;
    Vector encoder_input;  ///< gelu(pre_activation)
    CircuitForward circuit;
    Vector probs;
};

struct MlpCache {
    Vector features;
    Vector hidden_pre;
    Vector hidden;
    Vector probs;
};

struct LinearCache {
    Vector features;
    Vector probs;
};

template <typename Model>
struct Gradients {
    Model params;  ///< same shapes as the model, holding dLoss/dparam
    Vector input;  ///< dLoss/dfeatures
};

HybridCache hybrid_forward(const HybridModel& model, const Vector& features);
MlpCache mlp_forward(const MlpModel& model, const Vector& features);
LinearCache linear_forward(const LinearModel& model, const Vector& features);

/// Gradients of cross_entropy(forward(features), label). The Linear L2 term
/// is a training-loop concern and is not included here.
Gradients<HybridModel> hybrid_backward(const HybridModel& model, const HybridCache& cache,
                                       int label);
Gradients<MlpModel> mlp_backward(const MlpModel& model, const MlpCache& cache, int label);
Gradients<LinearModel> linear_backward(const LinearModel& model, const LinearCache& cache,
                                       int label);

// ---------------------------------------------------------------------------
// Kind-erased classifier

class Classifier {
  public:
    using Network = std::variant<HybridModel, MlpModel, LinearModel>;

    Classifier() = default;
    explicit Classifier(Network net) : net_(std::move(net)) {}

    ModelKind kind() const noexcept;
    std::size_t input_dim() const;
    std::size_t n_classes() const;
    std::size_t parameter_count() const;

    const Network& network() const noexcept { return net_; }
    Network& network() noexcept { return net_; }

    Vector predict_proba(const Vector& features) const;
    /// One probability row per sample.
    Matrix predict_proba(const Matrix& features) const;

    /// Cross-entropy loss at one sample.
    double loss(const Vector& features, int label) const;
    /// dLoss/dfeatures at one sample.
    Vector input_gradient(const Vector& features, int label) const;

    bool operator==(const Classifier&) const = default;

  private:
    Network net_{LinearModel{}};
};

/// Architecture for `kind` with zero parameters.
Classifier make_classifier(ModelKind kind, std::size_t d, std::size_t n_classes);

// ---------------------------------------------------------------------------
// Optimisation

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update over parameter blocks. Block sizes of
/// params and grads must agree; the state is sized on first use and must
/// match afterwards (ShapeMismatch otherwise).
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const TrainConfig& config);

/// Epochs of shuffled minibatch cross-entropy Adam updates from a seeded
/// initialisation. Deterministic in (kind, data, config).
/// Throws EmptyDataset and LabelOutOfRange.
Classifier train_model(ModelKind kind, const Dataset& train_set, const TrainConfig& config);

/// Fraction of correctly classified samples; convenience for tests and tools.
double training_accuracy(const Classifier& model, const Dataset& data);

/// features + epsilon * sign(dLoss/dfeatures), sign(0) = 0.
Vector fgsm_perturb(const Classifier& model, const Vector& features, int label, double epsilon);

/// Per-row argmax with lowest-index tie-breaking.
std::vector<int> argmax_rows(const Matrix& probs);

}  // namespace safeqml
