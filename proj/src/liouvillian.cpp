#include "pinnverse/liouvillian.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pinnverse {

namespace {

constexpr double kImagTol = 1e-10;

double checked_real(Complex c, int row, const char* what) {
  if (std::abs(c.imag()) > kImagTol) {
    throw std::logic_error(std::string("build_generator: imaginary ") + what + " coefficient in row " +
                           std::to_string(row) + " (convention mismatch)");
  }
  return c.real();
}

}  // namespace

ComplexMatrix build_hamiltonian(const ParameterSet& params) {
  const int dim = 1 << params.n_qubits;
  if (params.J.size() != dim * dim) throw std::invalid_argument("build_hamiltonian: J size inconsistent with n_qubits");
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index idx = 1; idx < params.J.size(); ++idx) {
    if (params.J[idx] == 0.0) continue;
    h += params.J[idx] * pauli_string_matrix(PauliString::from_index(params.n_qubits, static_cast<int>(idx)));
  }
  return h;
}

ComplexMatrix heisenberg_operator(const ComplexMatrix& s, const ComplexMatrix& hamiltonian, const ChannelSet& channels,
                                  const Eigen::VectorXd& gamma) {
  const Complex i(0.0, 1.0);
  ComplexMatrix m = -i * commutator(s, hamiltonian);
  for (int k = 0; k < channels.size(); ++k) {
    if (gamma[k] == 0.0) continue;
    const ComplexMatrix& l = channels[k].op;
    m += gamma[k] * (l.adjoint() * s * l - 0.5 * anticommutator(s, l.adjoint() * l));
  }
  return m;
}

AffineGenerator build_generator(const ParameterSet& params, const ChannelSet& channels, const ObservableBasis& basis) {
  params.validate();
  if (params.n_qubits != basis.n_qubits()) throw std::invalid_argument("build_generator: basis/parameter qubit mismatch");
  if (params.gamma.size() != channels.size()) throw std::invalid_argument("build_generator: one gamma per channel required");
  if (channels.size() > 0 && channels.dim() != basis.dim()) {
    throw std::invalid_argument("build_generator: channel dimension mismatch");
  }
  const ComplexMatrix h = build_hamiltonian(params);
  const int n = basis.size();
  AffineGenerator gen;
  gen.A.resize(n, n);
  gen.b.resize(n);
  for (int a = 0; a < n; ++a) {
    const PauliDecomposition d = pauli_decompose(heisenberg_operator(basis.matrix(a), h, channels, params.gamma), basis);
    for (int c = 0; c < n; ++c) gen.A(a, c) = checked_real(d.coeffs[c], a, "A");
    gen.b[a] = checked_real(d.identity_coeff, a, "b");
  }
  gen.parameter_gradients = build_generator_terms(params.n_qubits, channels, basis);
  return gen;
}

std::shared_ptr<const GeneratorTerms> build_generator_terms(int n_qubits, const ChannelSet& channels,
                                                            const ObservableBasis& basis) {
  auto terms = std::make_shared<GeneratorTerms>();
  terms->n_qubits = n_qubits;
  const int n = basis.size();
  const int n_j = n + 1;
  const Eigen::VectorXd no_gamma = Eigen::VectorXd::Zero(channels.size());

  auto term_from = [&](const ComplexMatrix& h, const Eigen::VectorXd& gamma) {
    GeneratorTerm t{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
    for (int a = 0; a < n; ++a) {
      const PauliDecomposition d = pauli_decompose(heisenberg_operator(basis.matrix(a), h, channels, gamma), basis);
      for (int c = 0; c < n; ++c) t.dA(a, c) = checked_real(d.coeffs[c], a, "A");
      t.db[a] = checked_real(d.identity_coeff, a, "b");
    }
    return t;
  };

  terms->d_dj.push_back({Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)});
  for (int idx = 1; idx < n_j; ++idx) {
    terms->d_dj.push_back(term_from(basis.matrix(idx - 1), no_gamma));
  }
  const ComplexMatrix zero_h = ComplexMatrix::Zero(basis.dim(), basis.dim());
  for (int k = 0; k < channels.size(); ++k) {
    Eigen::VectorXd unit = no_gamma;
    unit[k] = 1.0;
    terms->d_dgamma.push_back(term_from(zero_h, unit));
  }
  return terms;
}

AffineGenerator assemble_generator(std::shared_ptr<const GeneratorTerms> terms, const ParameterSet& params) {
  if (static_cast<std::size_t>(params.J.size()) != terms->d_dj.size() ||
      static_cast<std::size_t>(params.gamma.size()) != terms->d_dgamma.size()) {
    throw std::invalid_argument("assemble_generator: parameter layout mismatch");
  }
  const int n = terms->dim();
  AffineGenerator gen{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), terms};
  for (Eigen::Index idx = 1; idx < params.J.size(); ++idx) {
    gen.A += params.J[idx] * terms->d_dj[static_cast<std::size_t>(idx)].dA;
  }
  for (Eigen::Index k = 0; k < params.gamma.size(); ++k) {
    const auto& t = terms->d_dgamma[static_cast<std::size_t>(k)];
    gen.A += params.gamma[k] * t.dA;
    gen.b += params.gamma[k] * t.db;
  }
  return gen;
}

Eigen::VectorXd rhs(const AffineGenerator& gen, const Eigen::VectorXd& s) {
  if (s.size() != gen.A.cols()) throw std::invalid_argument("rhs: state length mismatch");
  return gen.A * s + gen.b;
}

Trajectory evolve_pauli(const AffineGenerator& gen, int n_qubits, const Eigen::VectorXd& s0,
                        const Eigen::VectorXd& times, int internal_steps) {
  if (times.size() == 0 || times[0] != 0.0) throw std::invalid_argument("evolve_pauli: times must start at 0");
  if (s0.size() != gen.A.rows()) throw std::invalid_argument("evolve_pauli: initial vector length mismatch");
  const double t_final = times[times.size() - 1];
  Trajectory traj;
  traj.n_qubits = n_qubits;
  traj.times = times;
  traj.values.resize(s0.size(), times.size());

  Eigen::VectorXd s = s0;
  Eigen::VectorXd k1, k2, k3, k4;
  for (Eigen::Index n = 0; n < times.size(); ++n) {
    if (n > 0) {
      const double dt = times[n] - times[n - 1];
      if (!(dt > 0.0)) throw std::invalid_argument("evolve_pauli: times must be strictly increasing");
      const int steps = substeps_for_interval(dt, t_final, internal_steps);
      const double h = dt / steps;
      for (int k = 0; k < steps; ++k) {
        k1.noalias() = gen.A * s + gen.b;
        k2.noalias() = gen.A * (s + 0.5 * h * k1) + gen.b;
        k3.noalias() = gen.A * (s + 0.5 * h * k2) + gen.b;
        k4.noalias() = gen.A * (s + h * k3) + gen.b;
        s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    if (!s.allFinite()) throw IntegrationError("non-finite Pauli vector", times[n]);
    traj.values.col(n) = s;
  }
  return traj;
}

void write_generator_csv(std::ostream& out, const AffineGenerator& gen, const ObservableBasis& basis) {
  out << "row";
  for (const auto& name : basis.names()) out << ',' << name;
  out << ",b\n";
  out << std::setprecision(17);
  for (int a = 0; a < gen.dim(); ++a) {
    out << basis.string(a).name();
    for (int c = 0; c < gen.dim(); ++c) out << ',' << gen.A(a, c);
    out << ',' << gen.b[a] << '\n';
  }
}

}  // namespace pinnverse
