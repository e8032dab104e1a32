#include "safeqml/quantum_sim.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "safeqml/error.hpp"

namespace safeqml {

namespace {

constexpr double kZeroNormThreshold = 1e-30;

void check_qubit(const StateVector& state, std::size_t qubit) {
    if (qubit >= state.n_qubits()) {
        throw Error(ErrorCode::QubitOutOfRange, "qubit " + std::to_string(qubit) +
                                                    " on a " + std::to_string(state.n_qubits()) +
                                                    "-qubit state");
    }
}

std::size_t mask_of(const StateVector& state, std::size_t qubit) {
    return std::size_t{1} << (state.n_qubits() - 1 - qubit);
}

void apply_matrix(StateVector& state, std::size_t qubit, const std::array<Complex, 4>& m) {
    const std::size_t bit = mask_of(state, qubit);
    for (std::size_t k = 0; k < state.size(); ++k) {
        if (k & bit) continue;
        const Complex a0 = state[k];
        const Complex a1 = state[k | bit];
        state[k] = m[0] * a0 + m[1] * a1;
        state[k | bit] = m[2] * a0 + m[3] * a1;
    }
}

void apply_rz(StateVector& state, std::size_t qubit, double theta) {
    const Complex lo = std::polar(1.0, -theta / 2);
    const Complex hi = std::polar(1.0, theta / 2);
    const std::size_t bit = mask_of(state, qubit);
    for (std::size_t k = 0; k < state.size(); ++k) state[k] *= (k & bit) ? hi : lo;
}

void apply_ry(StateVector& state, std::size_t qubit, double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    apply_matrix(state, qubit, {Complex(c), Complex(-s), Complex(s), Complex(c)});
}

void apply_cnot_inplace(StateVector& state, std::size_t control, std::size_t target) {
    const std::size_t cbit = mask_of(state, control);
    const std::size_t tbit = mask_of(state, target);
    for (std::size_t k = 0; k < state.size(); ++k) {
        if ((k & cbit) && !(k & tbit)) std::swap(state[k], state[k | tbit]);
    }
}

// Re<a, -i/2 * P b> for P = Z or Y acting on `qubit`.
double generator_overlap_z(const StateVector& a, const StateVector& b, std::size_t qubit) {
    const std::size_t bit = mask_of(b, qubit);
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const Complex zb = (k & bit) ? -b[k] : b[k];
        acc += std::real(std::conj(a[k]) * Complex(0, -0.5) * zb);
    }
    return acc;
}

double generator_overlap_y(const StateVector& a, const StateVector& b, std::size_t qubit) {
    const std::size_t bit = mask_of(b, qubit);
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        if (k & bit) continue;
        // Y = [[0, -i], [i, 0]]
        const Complex yb0 = Complex(0, -1) * b[k | bit];
        const Complex yb1 = Complex(0, 1) * b[k];
        acc += std::real(std::conj(a[k]) * Complex(0, -0.5) * yb0);
        acc += std::real(std::conj(a[k | bit]) * Complex(0, -0.5) * yb1);
    }
    return acc;
}

void check_layer_inputs(const StateVector& state, const RotationParams& params,
                        const CircuitLayout& layout) {
    layout.validate();
    if (params.n_qubits() != state.n_qubits() || layout.n_qubits != state.n_qubits()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "rotation params cover " + std::to_string(params.n_qubits()) +
                        " qubits, layout " + std::to_string(layout.n_qubits) + ", state " +
                        std::to_string(state.n_qubits()));
    }
}

std::size_t ring_target(std::size_t control, const CircuitLayout& layout) {
    return (control + layout.entangler_range) % layout.n_qubits;
}

}  // namespace

StateVector::StateVector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amplitudes_(std::size_t{1} << n_qubits) {
    if (n_qubits == 0) throw Error(ErrorCode::InvalidSpec, "a state needs at least one qubit");
    amplitudes_[0] = 1.0;
}

StateVector::StateVector(std::vector<Complex> amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 2 || !std::has_single_bit(amplitudes_.size())) {
        throw Error(ErrorCode::ShapeMismatch,
                    "amplitude count " + std::to_string(amplitudes_.size()) +
                        " is not a power of two >= 2");
    }
    n_qubits_ = static_cast<std::size_t>(std::countr_zero(amplitudes_.size()));
}

StateVector StateVector::basis_state(std::size_t n_qubits, std::size_t index) {
    StateVector s(n_qubits);
    if (index >= s.size()) throw Error(ErrorCode::DimensionOverflow, "basis index out of range");
    s[0] = 0.0;
    s[index] = 1.0;
    return s;
}

double StateVector::norm() const noexcept {
    double acc = 0.0;
    for (const Complex& a : amplitudes_) acc += std::norm(a);
    return std::sqrt(acc);
}

RotationParams::RotationParams(std::size_t n_qubits, std::vector<double> angles)
    : angles_(std::move(angles)) {
    if (angles_.size() != 3 * n_qubits) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(3 * n_qubits) +
                                                  " angles, got " + std::to_string(angles_.size()));
    }
    for (double a : angles_) {
        if (!std::isfinite(a)) throw Error(ErrorCode::InvalidSpec, "non-finite rotation angle");
    }
}

void CircuitLayout::validate() const {
    if (n_qubits == 0) throw Error(ErrorCode::InvalidSpec, "layout needs at least one qubit");
    if (entangler_range == 0) throw Error(ErrorCode::InvalidSpec, "entangler range must be >= 1");
    if (n_qubits > 1 && entangler_range >= n_qubits) {
        throw Error(ErrorCode::InvalidSpec, "entangler range must be smaller than n_qubits");
    }
}

CircuitLayout default_layout(std::size_t n_qubits) {
    return CircuitLayout{.n_qubits = n_qubits, .entangler_range = 1};
}

StateVector amplitude_encode(std::span<const double> x, std::size_t n_qubits) {
    if (n_qubits == 0 || n_qubits >= 8 * sizeof(std::size_t) - 1) {
        throw Error(ErrorCode::InvalidSpec, "unsupported qubit count");
    }
    const std::size_t dim = std::size_t{1} << n_qubits;
    if (x.size() > dim) {
        throw Error(ErrorCode::DimensionOverflow, std::to_string(x.size()) +
                                                      " features do not fit in " +
                                                      std::to_string(n_qubits) + " qubits");
    }
    const double norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (!(norm > kZeroNormThreshold)) {
        throw Error(ErrorCode::ZeroVector, "cannot normalise a vector of norm " +
                                               std::to_string(norm));
    }
    std::vector<Complex> amps(dim);
    for (std::size_t k = 0; k < x.size(); ++k) amps[k] = x[k] / norm;
    return StateVector(std::move(amps));
}

std::array<Complex, 4> rotation_matrix(double alpha, double beta, double gamma) {
    const double c = std::cos(beta / 2);
    const double s = std::sin(beta / 2);
    // RZ(gamma) * RY(beta) * RZ(alpha)
    return {std::polar(1.0, -(alpha + gamma) / 2) * c, -std::polar(1.0, (alpha - gamma) / 2) * s,
            std::polar(1.0, (gamma - alpha) / 2) * s, std::polar(1.0, (alpha + gamma) / 2) * c};
}

StateVector apply_rotation(StateVector state, std::size_t qubit, double alpha, double beta,
                           double gamma) {
    check_qubit(state, qubit);
    apply_matrix(state, qubit, rotation_matrix(alpha, beta, gamma));
    return state;
}

StateVector apply_cnot(StateVector state, std::size_t control, std::size_t target) {
    check_qubit(state, control);
    check_qubit(state, target);
    if (control == target) {
        throw Error(ErrorCode::ControlEqualsTarget, "control and target are both " +
                                                        std::to_string(control));
    }
    apply_cnot_inplace(state, control, target);
    return state;
}

StateVector strongly_entangling_layer(StateVector state, const RotationParams& params,
                                      const CircuitLayout& layout) {
    check_layer_inputs(state, params, layout);
    const std::size_t n = layout.n_qubits;
    for (std::size_t q = 0; q < n; ++q) {
        apply_matrix(state, q, rotation_matrix(params(q, 0), params(q, 1), params(q, 2)));
    }
    if (n > 1) {
        for (std::size_t q = 0; q < n; ++q) apply_cnot_inplace(state, q, ring_target(q, layout));
    }
    return state;
}

StateVector adjoint_entangling_layer(StateVector state, const RotationParams& params,
                                     const CircuitLayout& layout) {
    check_layer_inputs(state, params, layout);
    const std::size_t n = layout.n_qubits;
    if (n > 1) {
        for (std::size_t q = n; q-- > 0;) apply_cnot_inplace(state, q, ring_target(q, layout));
    }
    for (std::size_t q = n; q-- > 0;) {
        // R^dagger = RZ(-alpha) RY(-beta) RZ(-gamma)
        apply_rz(state, q, -params(q, 2));
        apply_ry(state, q, -params(q, 1));
        apply_rz(state, q, -params(q, 0));
    }
    return state;
}

std::vector<double> pauli_z_expectations(const StateVector& state) {
    std::vector<double> q(state.n_qubits(), 0.0);
    for (std::size_t k = 0; k < state.size(); ++k) {
        const double p = std::norm(state[k]);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (k & mask_of(state, i)) ? -p : p;
    }
    return q;
}

CircuitForward circuit_forward(std::span<const double> input, const RotationParams& params,
                               const CircuitLayout& layout) {
    CircuitForward fwd;
    StateVector encoded = amplitude_encode(input, layout.n_qubits);
    fwd.input_norm = std::sqrt(std::inner_product(input.begin(), input.end(), input.begin(), 0.0));
    fwd.encoded.resize(encoded.size());
    for (std::size_t k = 0; k < encoded.size(); ++k) fwd.encoded[k] = encoded[k].real();
    fwd.output = strongly_entangling_layer(std::move(encoded), params, layout);
    fwd.expectations = pauli_z_expectations(fwd.output);
    return fwd;
}

CircuitGradients circuit_backward(std::span<const double> input, const RotationParams& params,
                                  std::span<const double> upstream,
                                  const CircuitLayout& layout) {
    return circuit_backward(circuit_forward(input, params, layout), input.size(), params,
                            upstream, layout);
}

CircuitGradients circuit_backward(const CircuitForward& forward, std::size_t input_size,
                                  const RotationParams& params, std::span<const double> upstream,
                                  const CircuitLayout& layout) {
    const std::size_t n = layout.n_qubits;
    if (upstream.size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "upstream gradient must have one entry per qubit");
    }
    CircuitGradients grads{std::vector<double>(input_size, 0.0), RotationParams(n)};

    // L = sum_k w_k |psi_k|^2  =>  dL = Re<2 w psi, dpsi>
    StateVector psi = forward.output;
    StateVector lambda = psi;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) w += (k & mask_of(psi, i)) ? -upstream[i] : upstream[i];
        lambda[k] = 2.0 * w * psi[k];
    }

    // Walk the gates backwards, un-computing psi as we go. For G(t) = exp(-i t P / 2)
    // the parameter derivative is Re<lambda_after, (-i/2) P psi_after>.
    if (n > 1) {
        for (std::size_t q = n; q-- > 0;) {
            const std::size_t t = ring_target(q, layout);
            apply_cnot_inplace(psi, q, t);
            apply_cnot_inplace(lambda, q, t);
        }
    }
    for (std::size_t q = n; q-- > 0;) {
        grads.params(q, 2) = generator_overlap_z(lambda, psi, q);
        apply_rz(psi, q, -params(q, 2));
        apply_rz(lambda, q, -params(q, 2));

        grads.params(q, 1) = generator_overlap_y(lambda, psi, q);
        apply_ry(psi, q, -params(q, 1));
        apply_ry(lambda, q, -params(q, 1));

        grads.params(q, 0) = generator_overlap_z(lambda, psi, q);
        apply_rz(psi, q, -params(q, 0));
        apply_rz(lambda, q, -params(q, 0));
    }

    // Encoded amplitudes are real, so only Re(lambda) reaches them. Then undo
    // the normalisation: d(x/|x|) = (I - xhat xhat^T) dx / |x|.
    double radial = 0.0;
    for (std::size_t k = 0; k < input_size; ++k) radial += lambda[k].real() * forward.encoded[k];
    for (std::size_t k = 0; k < input_size; ++k) {
        grads.input[k] = (lambda[k].real() - radial * forward.encoded[k]) / forward.input_norm;
    }
    return grads;
}

}  // namespace safeqml
