#include "pinnverse/lindblad.hpp"
#include "pinnverse/liouvillian.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pinnverse;

namespace {

Eigen::VectorXd times_on(double t_final, int n) { return uniform_grid(t_final, n); }

}  // namespace

TEST(Lindblad, PlusStateExpectations) {
  const Eigen::VectorXd s = expectation_values(plus_plus_state(2), ObservableBasis(2));
  // only strings made of identities and sigma_1 have unit expectation
  for (int a = 0; a < 15; ++a) {
    const PauliString p = PauliString::from_index(2, a + 1);
    const bool x_only = (p.label(0) == 0 || p.label(0) == 1) && (p.label(1) == 0 || p.label(1) == 1);
    EXPECT_NEAR(s[a], x_only ? 1.0 : 0.0, 1e-15) << p.name();
  }
}

TEST(Lindblad, LarmorPrecession) {
  // H = J3 sigma_3 rotates <sigma_1> as cos(2 J3 t)
  ParameterSet p = ParameterSet::zeros(1, 3);
  p.j(3) = 1.7;
  const Eigen::VectorXd t = times_on(2.0, 41);
  const Trajectory traj = evolve(plus_plus_state(1), p, ChannelSet::one_qubit_finite_t(), t);
  for (int c = 0; c < t.size(); ++c) {
    EXPECT_NEAR(traj.values(0, c), std::cos(2.0 * 1.7 * t[c]), 1e-10);
    EXPECT_NEAR(traj.values(1, c), std::sin(2.0 * 1.7 * t[c]), 1e-10);
    EXPECT_NEAR(traj.values(2, c), 0.0, 1e-12);
  }
}

TEST(Lindblad, DephasingEnvelope) {
  ParameterSet p = ParameterSet::zeros(1, 3);
  p.j(3) = 0.9;
  p.gamma[0] = 0.4;  // sigma_3 channel
  const Eigen::VectorXd t = times_on(3.0, 31);
  const Trajectory traj = evolve(plus_plus_state(1), p, ChannelSet::one_qubit_finite_t(), t);
  for (int c = 0; c < t.size(); ++c) {
    EXPECT_NEAR(traj.values(0, c), std::exp(-0.8 * t[c]) * std::cos(1.8 * t[c]), 1e-10);
  }
}

TEST(Lindblad, AmplitudeDampingRelaxesToGround) {
  // sigma_- drives <sigma_3> -> -1 at rate gamma and <sigma_1> at gamma / 2
  ParameterSet p = ParameterSet::zeros(1, 3);
  p.gamma[1] = 0.6;
  const Eigen::VectorXd t = times_on(4.0, 21);
  const Trajectory traj = evolve(plus_plus_state(1), p, ChannelSet::one_qubit_finite_t(), t);
  for (int c = 0; c < t.size(); ++c) {
    EXPECT_NEAR(traj.values(2, c), std::exp(-0.6 * t[c]) - 1.0, 1e-10);
    EXPECT_NEAR(traj.values(0, c), std::exp(-0.3 * t[c]), 1e-10);
  }
}

TEST(Lindblad, IsingCouplingOnTwoQubits) {
  // H = J sigma_3 x sigma_3 from |++>: <sigma_1 x 1> = cos(2 J t), sigma_1 x sigma_1 conserved
  ParameterSet p = ParameterSet::zeros(2, 4);
  p.j(3, 3) = 2.2;
  const Eigen::VectorXd t = times_on(1.0, 26);
  const Trajectory traj = evolve(plus_plus_state(2), p, ChannelSet::two_qubit_standard(), t);
  const int x1 = ObservableBasis(2).position(PauliString({1, 0}));
  const int x1x2 = ObservableBasis(2).position(PauliString({1, 1}));
  for (int c = 0; c < t.size(); ++c) {
    EXPECT_NEAR(traj.values(x1, c), std::cos(4.4 * t[c]), 1e-10);
    EXPECT_NEAR(traj.values(x1x2, c), 1.0, 1e-10);  // commutes with the coupling
  }
}

TEST(Lindblad, RhsPreservesTraceAndHermiticity) {
  const ParameterSet p = sample_random_parameters(2, 11, ParameterMask::all(2, 4), 2 * std::numbers::pi, 4);
  const ChannelSet ch = ChannelSet::two_qubit_standard();
  const ComplexMatrix d = lindblad_rhs(plus_plus_state(2).rho, build_hamiltonian(p), ch, p.gamma);
  EXPECT_LT(std::abs(d.trace()), 1e-13);
  EXPECT_LT(hermitian_defect(d), 1e-13);
}

TEST(Lindblad, PurityNeverIncreasesUnderDephasing) {
  ParameterSet p = ParameterSet::zeros(2, 4);
  p.gamma << 0.0, 1.0, 0.0, 0.5;
  p.j(1, 0) = 3.0;
  const Eigen::VectorXd t = times_on(1.0, 11);
  const Trajectory traj = evolve(plus_plus_state(2), p, ChannelSet::two_qubit_standard(), t);
  double prev = 2.0;
  for (int c = 0; c < t.size(); ++c) {
    // Tr(rho^2) = (1 + |s|^2) / 4 for two qubits
    const double purity = (1.0 + traj.values.col(c).squaredNorm()) / 4.0;
    EXPECT_LE(purity, prev + 1e-12);
    prev = purity;
  }
  EXPECT_NEAR((1.0 + traj.values.col(0).squaredNorm()) / 4.0, 1.0, 1e-14);
}

TEST(Lindblad, ZeroParametersFreezeTheState) {
  const Trajectory traj =
      evolve(plus_plus_state(2), ParameterSet::zeros(2, 4), ChannelSet::two_qubit_standard(), times_on(1.0, 5));
  for (int c = 1; c < 5; ++c) EXPECT_EQ(traj.values.col(c), traj.values.col(0));
}

TEST(Lindblad, TimesMustBeIncreasingFromZero) {
  Eigen::VectorXd t(3);
  t << 0.0, 0.5, 0.5;
  EXPECT_THROW(evolve(plus_plus_state(1), ParameterSet::zeros(1, 3), ChannelSet::one_qubit_finite_t(), t),
               std::invalid_argument);
}

TEST(Lindblad, UniformGrid) {
  const Eigen::VectorXd t = uniform_grid(2.0, 5);
  ASSERT_EQ(t.size(), 5);
  EXPECT_DOUBLE_EQ(t[0], 0.0);
  EXPECT_DOUBLE_EQ(t[2], 1.0);
  EXPECT_DOUBLE_EQ(t[4], 2.0);
}

TEST(Lindblad, NoiseStatistics) {
  Trajectory zero;
  zero.n_qubits = 2;
  zero.times = uniform_grid(1.0, 200);
  zero.values = Eigen::MatrixXd::Zero(15, 200);
  const Trajectory noisy = add_gaussian_noise(zero, 0.02, 5);
  const double n = static_cast<double>(noisy.values.size());
  const double mean = noisy.values.sum() / n;
  const double sd = std::sqrt((noisy.values.array() - mean).square().sum() / (n - 1.0));
  EXPECT_GT(sd, 0.015);
  EXPECT_LT(sd, 0.025);
  EXPECT_LT(std::abs(mean), 0.003);
  EXPECT_EQ(zero.values.cwiseAbs().maxCoeff(), 0.0);  // input untouched
}

TEST(Lindblad, NoiseIsSeedDeterministic) {
  Trajectory base;
  base.n_qubits = 1;
  base.times = uniform_grid(1.0, 10);
  base.values = Eigen::MatrixXd::Ones(3, 10);
  EXPECT_EQ(add_gaussian_noise(base, 0.1, 3).values, add_gaussian_noise(base, 0.1, 3).values);
  EXPECT_NE(add_gaussian_noise(base, 0.1, 3).values, add_gaussian_noise(base, 0.1, 4).values);
  EXPECT_EQ(add_gaussian_noise(base, 0.0, 3).values, base.values);
}

TEST(Lindblad, SampledParameterRanges) {
  const double w0 = 2.0 * std::numbers::pi;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ParameterSet p = sample_random_parameters(2, seed, ParameterMask::all(2, 4), w0, 4);
    EXPECT_EQ(p.J[0], 0.0);
    EXPECT_LE(p.J.cwiseAbs().maxCoeff(), w0);
    EXPECT_GE(p.gamma.minCoeff(), 0.0);
    EXPECT_LE(p.gamma.maxCoeff(), w0);
  }
}

TEST(Lindblad, MaskZeroesEntriesWithoutShiftingTheStream) {
  const double w0 = 2.0 * std::numbers::pi;
  const ParameterSet all = sample_random_parameters(2, 9, ParameterMask::all(2, 4), w0, 4);
  const ParameterSet tb = sample_random_parameters(2, 9, ParameterMask::two_body(4), w0, 4);
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      if (mu != 0 && nu != 0) {
        EXPECT_EQ(tb.j(mu, nu), all.j(mu, nu));
      } else {
        EXPECT_EQ(tb.j(mu, nu), 0.0);
      }
    }
  }
  EXPECT_EQ(tb.gamma, all.gamma);
}

TEST(Lindblad, ParameterValidation) {
  ParameterSet p = ParameterSet::zeros(2, 4);
  p.gamma[2] = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  ParameterSet q = ParameterSet::zeros(2, 4);
  q.J[0] = 1.0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(Lindblad, ChannelPresets) {
  const ChannelSet two = ChannelSet::two_qubit_standard();
  ASSERT_EQ(two.size(), 4);
  EXPECT_EQ(two.dim(), 4);
  EXPECT_LT((two[0].op - kron(lowering_raising(Ladder::Minus), ComplexMatrix::Identity(2, 2))).norm(), 1e-15);
  EXPECT_LT((two[3].op - kron(ComplexMatrix::Identity(2, 2), pauli_matrix(3))).norm(), 1e-15);
  const ChannelSet one = ChannelSet::one_qubit_finite_t();
  ASSERT_EQ(one.size(), 3);
  EXPECT_LT((one[2].op - lowering_raising(Ladder::Plus)).norm(), 1e-15);
}
