#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace pinnverse {

using Complex = std::complex<double>;
/// Dense complex operator on 1 or 2 qubits (dimension 2 or 4).
using ComplexMatrix = Eigen::MatrixXcd;

/// Tensor product of single-qubit Pauli labels, one label in {0,1,2,3} per qubit.
///
/// Strings are indexed lexicographically: for two qubits (mu, nu) maps to
/// 4*mu + nu, so index 0 is always the identity.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<int> labels);

  static PauliString from_index(int n_qubits, int index);

  int n_qubits() const { return static_cast<int>(labels_.size()); }
  int label(int qubit) const { return labels_.at(static_cast<std::size_t>(qubit)); }
  const std::vector<int>& labels() const { return labels_; }
  int index() const;
  bool is_identity() const;

  /// Column name used in trajectory files: `S_mu_nu` for two qubits,
  /// `sx`/`sy`/`sz` for one qubit.
  std::string name() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::vector<int> labels_;
};

/// The 4^n - 1 non-identity Pauli strings in lexicographic order.
class ObservableBasis {
 public:
  explicit ObservableBasis(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  int dim() const { return 1 << n_qubits_; }
  int size() const { return static_cast<int>(strings_.size()); }

  const PauliString& string(int a) const { return strings_.at(static_cast<std::size_t>(a)); }
  const ComplexMatrix& matrix(int a) const { return matrices_.at(static_cast<std::size_t>(a)); }
  const std::vector<PauliString>& strings() const { return strings_; }

  /// Position of a non-identity string in the basis (its string index minus one).
  int position(const PauliString& s) const;
  std::vector<std::string> names() const;

 private:
  int n_qubits_;
  std::vector<PauliString> strings_;
  std::vector<ComplexMatrix> matrices_;
};

enum class Ladder { Minus, Plus };

ComplexMatrix pauli_matrix(int label);
ComplexMatrix pauli_string_matrix(const PauliString& s);

/// sigma_- = (sigma_1 - i sigma_2)/2 and its adjoint sigma_+.
ComplexMatrix lowering_raising(Ladder which);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// max |M - M^dagger| over entries.
double hermitian_defect(const ComplexMatrix& m);

struct PauliDecomposition {
  Eigen::VectorXcd coeffs;  // one per basis element
  Complex identity_coeff{0.0, 0.0};
};

/// coeffs[a] = Tr(S_a M) / 2^n, identity_coeff = Tr(M) / 2^n.
PauliDecomposition pauli_decompose(const ComplexMatrix& m, const ObservableBasis& basis);
ComplexMatrix pauli_reconstruct(const PauliDecomposition& d, const ObservableBasis& basis);

}  // namespace pinnverse
