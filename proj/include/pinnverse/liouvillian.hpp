#pragma once

#include "pinnverse/lindblad.hpp"
#include "pinnverse/pauli.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <vector>

namespace pinnverse {

/// Derivative of (A, b) with respect to one physical parameter. Since A and b
/// are linear in (J, gamma), these are constants.
struct GeneratorTerm {
  Eigen::MatrixXd dA;
  Eigen::VectorXd db;
};

/// Unit-parameter generators for every J entry and every channel rate.
///
/// `d_dj` is indexed by Pauli string index (entry 0 stays zero); `d_dgamma` by channel.
struct GeneratorTerms {
  int n_qubits = 2;
  std::vector<GeneratorTerm> d_dj;
  std::vector<GeneratorTerm> d_dgamma;

  int dim() const { return d_dj.empty() ? 0 : static_cast<int>(d_dj.front().dA.rows()); }
};

/// d<s>/dt = A <s> + b in the observable basis.
struct AffineGenerator {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::shared_ptr<const GeneratorTerms> parameter_gradients;

  int dim() const { return static_cast<int>(A.rows()); }
};

/// H = sum_{idx != 0} J[idx] S_idx (hbar = 1).
ComplexMatrix build_hamiltonian(const ParameterSet& params);

/// Heisenberg-picture generator of one observable:
/// M_a = -i[S_a, H] + sum_k gamma_k (L_k^dag S_a L_k - {S_a, L_k^dag L_k}/2).
ComplexMatrix heisenberg_operator(const ComplexMatrix& s, const ComplexMatrix& hamiltonian, const ChannelSet& channels,
                                  const Eigen::VectorXd& gamma);

/// Builds (A, b) by decomposing each M_a in the Pauli basis. Throws std::logic_error
/// when a coefficient carries an imaginary part above 1e-10.
AffineGenerator build_generator(const ParameterSet& params, const ChannelSet& channels, const ObservableBasis& basis);

std::shared_ptr<const GeneratorTerms> build_generator_terms(int n_qubits, const ChannelSet& channels,
                                                            const ObservableBasis& basis);

/// A = sum_theta theta dA/dtheta, b likewise.
AffineGenerator assemble_generator(std::shared_ptr<const GeneratorTerms> terms, const ParameterSet& params);

Eigen::VectorXd rhs(const AffineGenerator& gen, const Eigen::VectorXd& s);

/// Fixed-step RK4 on ds/dt = A s + b with the same stepping as `evolve`.
Trajectory evolve_pauli(const AffineGenerator& gen, int n_qubits, const Eigen::VectorXd& s0,
                        const Eigen::VectorXd& times, int internal_steps = kDefaultInternalSteps);

/// CSV dump: header `row,<obs...>,b`, one line per observable row.
void write_generator_csv(std::ostream& out, const AffineGenerator& gen, const ObservableBasis& basis);

}  // namespace pinnverse
