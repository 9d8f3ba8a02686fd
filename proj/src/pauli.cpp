#include "pinnverse/pauli.hpp"

#include <stdexcept>

namespace pinnverse {

namespace {

void require_same_dims(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

int pow4(int n) { return 1 << (2 * n); }

}  // namespace

PauliString::PauliString(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty() || labels_.size() > 2) {
    throw std::invalid_argument("PauliString: only 1 or 2 qubits are supported");
  }
  for (int l : labels_) {
    if (l < 0 || l > 3) throw std::invalid_argument("PauliString: label out of range");
  }
}

PauliString PauliString::from_index(int n_qubits, int index) {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("PauliString: only 1 or 2 qubits are supported");
  if (index < 0 || index >= pow4(n_qubits)) throw std::invalid_argument("PauliString: index out of range");
  std::vector<int> labels(static_cast<std::size_t>(n_qubits));
  for (int q = n_qubits - 1; q >= 0; --q) {
    labels[static_cast<std::size_t>(q)] = index % 4;
    index /= 4;
  }
  return PauliString(std::move(labels));
}

int PauliString::index() const {
  int idx = 0;
  for (int l : labels_) idx = 4 * idx + l;
  return idx;
}

bool PauliString::is_identity() const {
  for (int l : labels_) {
    if (l != 0) return false;
  }
  return true;
}

std::string PauliString::name() const {
  if (labels_.size() == 1) {
    static const char* kNames[] = {"s0", "sx", "sy", "sz"};
    return kNames[labels_[0]];
  }
  std::string out = "S";
  for (int l : labels_) out += "_" + std::to_string(l);
  return out;
}

ObservableBasis::ObservableBasis(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("ObservableBasis: only 1 or 2 qubits are supported");
  for (int idx = 1; idx < pow4(n_qubits); ++idx) {
    strings_.push_back(PauliString::from_index(n_qubits, idx));
    matrices_.push_back(pauli_string_matrix(strings_.back()));
  }
}

int ObservableBasis::position(const PauliString& s) const {
  if (s.n_qubits() != n_qubits_ || s.is_identity()) {
    throw std::invalid_argument("ObservableBasis: string " + s.name() + " is not a basis element");
  }
  return s.index() - 1;
}

std::vector<std::string> ObservableBasis::names() const {
  std::vector<std::string> out;
  out.reserve(strings_.size());
  for (const auto& s : strings_) out.push_back(s.name());
  return out;
}

ComplexMatrix pauli_matrix(int label) {
  const Complex i(0.0, 1.0);
  ComplexMatrix m(2, 2);
  switch (label) {
    case 0: m << 1.0, 0.0, 0.0, 1.0; break;
    case 1: m << 0.0, 1.0, 1.0, 0.0; break;
    case 2: m << 0.0, -i, i, 0.0; break;
    case 3: m << 1.0, 0.0, 0.0, -1.0; break;
    default: throw std::invalid_argument("pauli_matrix: label must be in {0,1,2,3}, got " + std::to_string(label));
  }
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
  }
  return out;
}

ComplexMatrix pauli_string_matrix(const PauliString& s) {
  ComplexMatrix out = pauli_matrix(s.label(0));
  for (int q = 1; q < s.n_qubits(); ++q) out = kron(out, pauli_matrix(s.label(q)));
  return out;
}

ComplexMatrix lowering_raising(Ladder which) {
  const Complex i(0.0, 1.0);
  ComplexMatrix minus = 0.5 * (pauli_matrix(1) - i * pauli_matrix(2));
  return which == Ladder::Minus ? minus : ComplexMatrix(minus.adjoint());
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dims(a, b, "matmul");
  return a * b;
}

ComplexMatrix adjoint(const ComplexMatrix& a) { return a.adjoint(); }

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dims(a, b, "commutator");
  return a * b - b * a;
}

ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dims(a, b, "anticommutator");
  return a * b + b * a;
}

double hermitian_defect(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

PauliDecomposition pauli_decompose(const ComplexMatrix& m, const ObservableBasis& basis) {
  if (m.rows() != basis.dim() || m.cols() != basis.dim()) {
    throw std::invalid_argument("pauli_decompose: matrix dimension " + std::to_string(m.rows()) +
                                " does not match basis dimension " + std::to_string(basis.dim()));
  }
  const double norm = 1.0 / basis.dim();
  PauliDecomposition d;
  d.coeffs.resize(basis.size());
  for (int a = 0; a < basis.size(); ++a) {
    d.coeffs[a] = (basis.matrix(a) * m).trace() * norm;
  }
  d.identity_coeff = m.trace() * norm;
  return d;
}

ComplexMatrix pauli_reconstruct(const PauliDecomposition& d, const ObservableBasis& basis) {
  if (d.coeffs.size() != basis.size()) throw std::invalid_argument("pauli_reconstruct: coefficient count mismatch");
  ComplexMatrix out = d.identity_coeff * ComplexMatrix::Identity(basis.dim(), basis.dim());
  for (int a = 0; a < basis.size(); ++a) out += d.coeffs[a] * basis.matrix(a);
  return out;
}

}  // namespace pinnverse
