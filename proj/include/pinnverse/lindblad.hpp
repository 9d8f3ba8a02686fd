#pragma once

#include "pinnverse/pauli.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnverse {

/// Physical unknowns of the model.
///
/// `J` has one entry per Pauli string index (4^n entries, lexicographic) and the
/// all-identity entry is pinned to zero. `gamma` holds one decay rate per
/// Lindblad channel. J is an angular frequency (hbar = 1).
struct ParameterSet {
  int n_qubits = 2;
  Eigen::VectorXd J;
  Eigen::VectorXd gamma;

  static ParameterSet zeros(int n_qubits, int n_channels);

  /// J for a (mu, nu) pair, or for a single-qubit label when nu < 0.
  double& j(int mu, int nu = -1);
  double j(int mu, int nu = -1) const;

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

/// Which parameters are free. Masked J entries are pinned to zero.
struct ParameterMask {
  std::vector<bool> J;
  std::vector<bool> gamma;

  static ParameterMask all(int n_qubits, int n_channels);
  static ParameterMask none(int n_qubits, int n_channels);
  /// Only the two-body entries (mu, nu both nonzero) of J, plus every gamma.
  static ParameterMask two_body(int n_channels);

  int trainable_j() const;
  int trainable_gamma() const;
};

struct Channel {
  ComplexMatrix op;
  std::string label;
};

class ChannelSet {
 public:
  ChannelSet() = default;
  explicit ChannelSet(std::vector<Channel> channels);

  /// [sigma_- x 1, sigma_3 x 1, 1 x sigma_-, 1 x sigma_3]
  static ChannelSet two_qubit_standard();
  /// [sigma_3, sigma_-, sigma_+]: dephasing plus finite-temperature amplitude damping.
  static ChannelSet one_qubit_finite_t();
  static ChannelSet standard_for(int n_qubits);

  int size() const { return static_cast<int>(channels_.size()); }
  int dim() const;
  const Channel& operator[](int k) const { return channels_.at(static_cast<std::size_t>(k)); }
  auto begin() const { return channels_.begin(); }
  auto end() const { return channels_.end(); }

 private:
  std::vector<Channel> channels_;
};

struct DensityMatrix {
  ComplexMatrix rho;
};

/// Time grid plus one row of expectation values per basis observable.
struct Trajectory {
  int n_qubits = 2;
  Eigen::VectorXd times;
  Eigen::MatrixXd values;  // rows: observables, cols: times

  int n_observables() const { return static_cast<int>(values.rows()); }
  int n_times() const { return static_cast<int>(times.size()); }
  void validate() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Number of RK4 steps covering [0, times.back()].
inline constexpr int kDefaultInternalSteps = 4096;

DensityMatrix plus_plus_state(int n_qubits);
Eigen::VectorXd expectation_values(const DensityMatrix& rho, const ObservableBasis& basis);

/// Equally spaced grid on [0, t_final] including both endpoints.
Eigen::VectorXd uniform_grid(double t_final, int count);

/// i[rho, H] + sum_k gamma_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2).
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian, const ChannelSet& channels,
                           const Eigen::VectorXd& gamma);

/// Fixed-step RK4 on the density matrix; samples Tr(rho S_a) at `times`.
Trajectory evolve(const DensityMatrix& rho0, const ParameterSet& params, const ChannelSet& channels,
                  const Eigen::VectorXd& times, int internal_steps = kDefaultInternalSteps);

/// Adds iid N(0, sigma^2) to every entry. The input is left untouched.
Trajectory add_gaussian_noise(const Trajectory& traj, double sigma, std::uint64_t seed);

/// J uniform on [-omega0, omega0] where the mask allows (else 0), gamma uniform on [0, omega0].
ParameterSet sample_random_parameters(int n_qubits, std::uint64_t seed, const ParameterMask& mask, double omega0,
                                      int n_channels);

/// Substeps per output interval so the internal step never exceeds t_final / internal_steps.
int substeps_for_interval(double dt, double t_final, int internal_steps);

}  // namespace pinnverse
