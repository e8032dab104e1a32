#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "safeqml/error.hpp"
#include "safeqml/quantum_sim.hpp"

using namespace safeqml;

namespace {

oracle::CVector dense(const StateVector& s) {
    oracle::CVector v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) v(static_cast<Eigen::Index>(k)) = s[k];
    return v;
}

StateVector from_dense(const oracle::CVector& v) {
    return StateVector(std::vector<Complex>(v.data(), v.data() + v.size()));
}

void expect_state_eq(const StateVector& s, const std::vector<Complex>& ref, double tol = 1e-12) {
    ASSERT_EQ(s.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
        EXPECT_NEAR(s[k].real(), ref[k].real(), tol) << "k=" << k;
        EXPECT_NEAR(s[k].imag(), ref[k].imag(), tol) << "k=" << k;
    }
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

RotationParams random_params(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    RotationParams p(n);
    for (double& a : p.flat()) a = u(rng);
    return p;
}

}  // namespace

// ---------- amplitude_encode ----------
TEST(AmplitudeEncode, BasisState) {
    const std::vector<double> x{1, 0, 0, 0};
    expect_state_eq(amplitude_encode(x, 2), {1, 0, 0, 0});
}

TEST(AmplitudeEncode, ThreeFourFive) {
    const std::vector<double> x{3, 4};
    expect_state_eq(amplitude_encode(x, 1), {0.6, 0.8});
}

TEST(AmplitudeEncode, ZeroPadsThenNormalises) {
    const std::vector<double> x{1, 1, 1};
    const double s = 1.0 / std::sqrt(3.0);
    const StateVector psi = amplitude_encode(x, 2);
    expect_state_eq(psi, {s, s, s, 0});
    EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
}

TEST(AmplitudeEncode, Errors) {
    const std::vector<double> zero{0, 0, 0};
    expect_error(ErrorCode::ZeroVector, [&] { amplitude_encode(zero, 2); });
    const std::vector<double> tiny{1e-31, 0};
    expect_error(ErrorCode::ZeroVector, [&] { amplitude_encode(tiny, 1); });
    const std::vector<double> five{1, 2, 3, 4, 5};
    expect_error(ErrorCode::DimensionOverflow, [&] { amplitude_encode(five, 2); });
}

// ---------- apply_rotation ----------
TEST(Rotation, ZeroAnglesIsIdentity) {
    std::mt19937_64 rng(1);
    const StateVector psi = from_dense(oracle::random_state(3, rng));
    const StateVector out = apply_rotation(psi, 1, 0, 0, 0);
    for (std::size_t k = 0; k < psi.size(); ++k) EXPECT_EQ(out[k], psi[k]);
}

TEST(Rotation, RyPiFlipsZeroToOne) {
    const StateVector out = apply_rotation(StateVector(1), 0, 0, std::numbers::pi, 0);
    expect_state_eq(out, {0, 1});
}

TEST(Rotation, MatchesDenseOracle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = oracle::random_state(3, rng);
        const std::size_t q = static_cast<std::size_t>(trial % 3);
        const double a = u(rng), b = u(rng), g = u(rng);
        const oracle::CMatrix r = oracle::rz(g) * oracle::ry(b) * oracle::rz(a);
        const oracle::CVector ref = oracle::single_qubit(3, q, r) * v;
        const StateVector out = apply_rotation(from_dense(v), q, a, b, g);
        EXPECT_LT((dense(out) - ref).norm(), 1e-12);
        EXPECT_NEAR(out.norm(), 1.0, 1e-12);
    }
}

TEST(Rotation, QubitOutOfRange) {
    expect_error(ErrorCode::QubitOutOfRange, [] { apply_rotation(StateVector(2), 2, 0.1, 0.2, 0.3); });
}

// ---------- apply_cnot ----------
TEST(Cnot, TruthTable) {
    // |10> -> |11>, |01> -> |01> with control 0 (the MSB)
    expect_state_eq(apply_cnot(StateVector::basis_state(2, 0b10), 0, 1), {0, 0, 0, 1});
    expect_state_eq(apply_cnot(StateVector::basis_state(2, 0b01), 0, 1), {0, 1, 0, 0});
}

TEST(Cnot, UniformSuperpositionUnchanged) {
    const StateVector psi(std::vector<Complex>(4, 0.5));
    const StateVector out = apply_cnot(psi, 0, 1);
    const oracle::CVector ref = oracle::cnot(2, 0, 1) * dense(psi);
    EXPECT_LT((dense(out) - ref).norm(), 1e-15);
    expect_state_eq(out, {0.5, 0.5, 0.5, 0.5});
}

TEST(Cnot, Errors) {
    expect_error(ErrorCode::ControlEqualsTarget, [] { apply_cnot(StateVector(2), 1, 1); });
    expect_error(ErrorCode::QubitOutOfRange, [] { apply_cnot(StateVector(2), 0, 2); });
}

// ---------- strongly_entangling_layer ----------
TEST(Layer, ZeroAnglesTwoQubitsIsCnotPair) {
    // CNOT(0,1) then CNOT(1,0): |00>->|00>, |01>->|11>, |10>->|01>, |11>->|10>
    const CircuitLayout layout = default_layout(2);
    const RotationParams zero(2);
    const std::size_t expected[4] = {0b00, 0b11, 0b01, 0b10};
    for (std::size_t in = 0; in < 4; ++in) {
        const StateVector out = strongly_entangling_layer(StateVector::basis_state(2, in), zero, layout);
        std::vector<Complex> ref(4, 0.0);
        ref[expected[in]] = 1.0;
        expect_state_eq(out, ref);
    }
}

TEST(Layer, ZeroAnglesKeepAllZeros) {
    for (std::size_t n = 1; n <= 5; ++n) {
        const StateVector out = strongly_entangling_layer(StateVector(n), RotationParams(n), default_layout(n));
        std::vector<Complex> ref(out.size(), 0.0);
        ref[0] = 1.0;
        expect_state_eq(out, ref);
    }
}

TEST(Layer, MatchesDenseOracle) {
    std::mt19937_64 rng(3);
    for (std::size_t n = 1; n <= 4; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            const RotationParams p = random_params(n, rng);
            const auto v = oracle::random_state(n, rng);
            const oracle::CMatrix u =
                oracle::layer_unitary(n, std::vector<double>(p.flat().begin(), p.flat().end()));
            const StateVector out = strongly_entangling_layer(from_dense(v), p, default_layout(n));
            EXPECT_LT((dense(out) - u * v).cwiseAbs().maxCoeff(), 1e-12) << "n=" << n;
        }
    }
}

TEST(Layer, AdjointInvertsLayer) {
    std::mt19937_64 rng(4);
    const RotationParams p = random_params(4, rng);
    const auto v = oracle::random_state(4, rng);
    const StateVector back = adjoint_entangling_layer(
        strongly_entangling_layer(from_dense(v), p, default_layout(4)), p, default_layout(4));
    EXPECT_LT((dense(back) - v).norm(), 1e-12);
}

TEST(Layer, ShapeMismatch) {
    expect_error(ErrorCode::ShapeMismatch,
                 [] { strongly_entangling_layer(StateVector(3), RotationParams(2), default_layout(3)); });
}

TEST(Layout, RangeMustBeBelowQubitCount) {
    EXPECT_THROW((CircuitLayout{3, 3}.validate()), Error);
    EXPECT_NO_THROW((CircuitLayout{3, 2}.validate()));
    EXPECT_NO_THROW((CircuitLayout{1, 1}.validate()));
}

// ---------- pauli_z_expectations ----------
TEST(PauliZ, ComputationalStates) {
    const auto q00 = pauli_z_expectations(StateVector::basis_state(2, 0b00));
    EXPECT_EQ(q00, (std::vector<double>{1, 1}));
    const auto q01 = pauli_z_expectations(StateVector::basis_state(2, 0b01));
    EXPECT_EQ(q01, (std::vector<double>{1, -1}));
}

TEST(PauliZ, UniformSuperpositionIsZero) {
    const auto q = pauli_z_expectations(StateVector(std::vector<Complex>(4, 0.5)));
    EXPECT_NEAR(q[0], 0.0, 1e-15);
    EXPECT_NEAR(q[1], 0.0, 1e-15);
}

TEST(PauliZ, MatchesDenseObservable) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto v = oracle::random_state(3, rng);
        const auto q = pauli_z_expectations(from_dense(v));
        const auto ref = oracle::z_expectations(3, v);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_NEAR(q[i], ref[i], 1e-12);
            EXPECT_LE(std::abs(q[i]), 1.0 + 1e-12);
        }
    }
}

// ---------- circuit_backward ----------
TEST(CircuitBackward, ZeroCotangentGivesZeroGradients) {
    std::mt19937_64 rng(6);
    const RotationParams p = random_params(3, rng);
    const std::vector<double> x{0.3, -1.2, 0.5, 0.9, 0.1};
    const std::vector<double> up(3, 0.0);
    const CircuitGradients g = circuit_backward(x, p, up, default_layout(3));
    for (double v : g.input) EXPECT_EQ(v, 0.0);
    for (double v : g.params.flat()) EXPECT_EQ(v, 0.0);
}

TEST(CircuitBackward, SingleQubitBetaMatchesFiniteDifference) {
    const RotationParams p(1);
    const std::vector<double> x{1, 0};
    const std::vector<double> up{1};
    const CircuitGradients g = circuit_backward(x, p, up, default_layout(1));
    auto q0 = [&](std::vector<double>& angles) {
        return circuit_forward(x, RotationParams(1, angles), default_layout(1)).expectations[0];
    };
    const double fd = oracle::central_difference(q0, {0, 0, 0}, 1);
    EXPECT_NEAR(g.params(0, 1), fd, 1e-6);
}

TEST(CircuitBackward, RandomInstancesMatchFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3;
        const RotationParams p = random_params(n, rng);
        std::vector<double> x(6), up(n);
        for (double& v : x) v = normal(rng);
        for (double& v : up) v = normal(rng);
        const CircuitLayout layout = default_layout(n);
        const CircuitGradients g = circuit_backward(x, p, up, layout);

        auto contracted = [&](const std::vector<double>& input, const RotationParams& params) {
            const auto q = circuit_forward(input, params, layout).expectations;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += up[i] * q[i];
            return s;
        };
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = oracle::central_difference(
                [&](std::vector<double>& xi) { return contracted(xi, p); }, x, i);
            EXPECT_LT(oracle::relative_error(g.input[i], fd), 1e-4) << "input " << i;
        }
        const std::vector<double> angles(p.flat().begin(), p.flat().end());
        for (std::size_t i = 0; i < angles.size(); ++i) {
            const double fd = oracle::central_difference(
                [&](std::vector<double>& a) { return contracted(x, RotationParams(n, a)); }, angles, i);
            EXPECT_LT(oracle::relative_error(g.params.flat()[i], fd), 1e-4) << "angle " << i;
        }
    }
}

TEST(CircuitBackward, AdjointPreservesCotangentNorm) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const RotationParams p = random_params(4, rng);
        oracle::CVector cot = oracle::random_state(4, rng) * 3.7;
        const StateVector back = adjoint_entangling_layer(from_dense(cot), p, default_layout(4));
        EXPECT_NEAR(back.norm(), cot.norm(), 1e-10);
    }
}
