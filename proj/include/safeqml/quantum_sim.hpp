#pragma once

/**
 * Dense statevector simulation of the single strongly-entangling layer used
 * by the hybrid classifier: amplitude encoding, three-angle rotations,
 * a CNOT ring, Pauli-Z readout and reverse-mode gradients through all of it.
 *
 * Conventions:
 *  - qubit 0 is the most significant bit of the basis index;
 *  - R(alpha, beta, gamma) = RZ(gamma) * RY(beta) * RZ(alpha) with
 *    RZ(t) = diag(e^{-it/2}, e^{+it/2}) and
 *    RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]].
 */

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace safeqml {

using Complex = std::complex<double>;

/// Pure state of `n_qubits` qubits stored as 2^n complex amplitudes.
class StateVector {
  public:
    /// |0...0>
    explicit StateVector(std::size_t n_qubits);

    /// Takes ownership of the amplitudes; their count must be a power of two.
    /// Normalisation is not enforced; cotangent vectors use this type too.
    /// Every gate preserves whatever norm it is given.
    explicit StateVector(std::vector<Complex> amplitudes);

    static StateVector basis_state(std::size_t n_qubits, std::size_t index);

    std::size_t n_qubits() const noexcept { return n_qubits_; }
    std::size_t size() const noexcept { return amplitudes_.size(); }

    std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
    std::span<Complex> amplitudes() noexcept { return amplitudes_; }

    const Complex& operator[](std::size_t k) const { return amplitudes_[k]; }
    Complex& operator[](std::size_t k) { return amplitudes_[k]; }

    double norm() const noexcept;

  private:
    std::size_t n_qubits_;
    std::vector<Complex> amplitudes_;
};

/// Variational angles, one (alpha, beta, gamma) triple per qubit, stored
/// row-major as an n_qubits x 3 array.
class RotationParams {
  public:
    RotationParams() = default;
    explicit RotationParams(std::size_t n_qubits) : angles_(3 * n_qubits, 0.0) {}
    RotationParams(std::size_t n_qubits, std::vector<double> angles);

    std::size_t n_qubits() const noexcept { return angles_.size() / 3; }

    double& operator()(std::size_t qubit, std::size_t axis) { return angles_[3 * qubit + axis]; }
    double operator()(std::size_t qubit, std::size_t axis) const { return angles_[3 * qubit + axis]; }

    std::span<double> flat() noexcept { return angles_; }
    std::span<const double> flat() const noexcept { return angles_; }

    bool operator==(const RotationParams&) const = default;

  private:
    std::vector<double> angles_;
};

struct CircuitLayout {
    std::size_t n_qubits = 1;
    /// CNOT i -> (i + entangler_range) mod n.
    std::size_t entangler_range = 1;

    /// Throws InvalidSpec when the range is incompatible with n_qubits.
    void validate() const;

    /// Basis-index bit that carries `qubit` (qubit 0 is the MSB).
    std::size_t bit_mask(std::size_t qubit) const noexcept {
        return std::size_t{1} << (n_qubits - 1 - qubit);
    }

    bool operator==(const CircuitLayout&) const = default;
};

/// Zero-pads x to 2^n_qubits and normalises it.
/// Throws ZeroVector when ||x|| <= 1e-30 and DimensionOverflow when x is too long.
StateVector amplitude_encode(std::span<const double> x, std::size_t n_qubits);

StateVector apply_rotation(StateVector state, std::size_t qubit, double alpha, double beta,
                           double gamma);
StateVector apply_cnot(StateVector state, std::size_t control, std::size_t target);

/// The 2x2 matrix of R(alpha, beta, gamma), row-major.
std::array<Complex, 4> rotation_matrix(double alpha, double beta, double gamma);

/// Rotations on every qubit, then the CNOT ring in ascending control order.
StateVector strongly_entangling_layer(StateVector state, const RotationParams& params,
                                      const CircuitLayout& layout);

/// Adjoint of strongly_entangling_layer. Applied to a cotangent this is the
/// vector-Jacobian product of the layer with respect to its input state.
StateVector adjoint_entangling_layer(StateVector state, const RotationParams& params,
                                     const CircuitLayout& layout);

/// <Z_i> for every qubit.
std::vector<double> pauli_z_expectations(const StateVector& state);

/// Forward pass x -> encode -> layer -> <Z>, keeping what the backward pass needs.
struct CircuitForward {
    std::vector<double> encoded;  ///< x / ||x||, zero-padded to 2^n
    double input_norm = 0.0;
    StateVector output{1};
    std::vector<double> expectations;
};

CircuitForward circuit_forward(std::span<const double> input, const RotationParams& params,
                               const CircuitLayout& layout);

struct CircuitGradients {
    std::vector<double> input;   ///< d q . upstream / d x, same length as x
    RotationParams params;       ///< d q . upstream / d angles
};

/// Exact reverse-mode derivative of x -> <Z> contracted with `upstream`.
CircuitGradients circuit_backward(std::span<const double> input, const RotationParams& params,
                                  std::span<const double> upstream,
                                  const CircuitLayout& layout);

/// Same as above but reuses a forward pass computed on `input`.
CircuitGradients circuit_backward(const CircuitForward& forward, std::size_t input_size,
                                  const RotationParams& params, std::span<const double> upstream,
                                  const CircuitLayout& layout);

/// Layout with the default entangler range for `n_qubits`.
CircuitLayout default_layout(std::size_t n_qubits);

}  // namespace safeqml
