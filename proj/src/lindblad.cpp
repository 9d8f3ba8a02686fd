#include "pinnverse/lindblad.hpp"

#include "pinnverse/liouvillian.hpp"
#include "pinnverse/rng.hpp"

#include <cmath>

namespace pinnverse {

namespace {

constexpr double kTraceTol = 1e-9;
constexpr double kHermitianTol = 1e-10;
constexpr double kPositivityTol = 1e-8;
constexpr double kImagTol = 1e-10;

int pow4(int n) { return 1 << (2 * n); }

void check_state(const ComplexMatrix& rho, double t) {
  if (!rho.allFinite()) throw IntegrationError("non-finite density matrix", t);
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > kTraceTol) throw IntegrationError("trace drift", t);
  if (hermitian_defect(rho) > kHermitianTol) throw IntegrationError("hermiticity loss", t);
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kPositivityTol) throw IntegrationError("positivity violation", t);
}

}  // namespace

ParameterSet ParameterSet::zeros(int n_qubits, int n_channels) {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("ParameterSet: only 1 or 2 qubits are supported");
  ParameterSet p;
  p.n_qubits = n_qubits;
  p.J = Eigen::VectorXd::Zero(pow4(n_qubits));
  p.gamma = Eigen::VectorXd::Zero(n_channels);
  return p;
}

double& ParameterSet::j(int mu, int nu) {
  const int idx = nu < 0 ? mu : 4 * mu + nu;
  return J[idx];
}

double ParameterSet::j(int mu, int nu) const {
  const int idx = nu < 0 ? mu : 4 * mu + nu;
  return J[idx];
}

void ParameterSet::validate() const {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("ParameterSet: only 1 or 2 qubits are supported");
  if (J.size() != pow4(n_qubits)) throw std::invalid_argument("ParameterSet: J must have 4^n entries");
  if (J[0] != 0.0) throw std::invalid_argument("ParameterSet: identity coefficient must be 0");
  if (!J.allFinite() || !gamma.allFinite()) throw std::invalid_argument("ParameterSet: non-finite entry");
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    if (gamma[k] < 0.0) throw std::invalid_argument("ParameterSet: negative decay rate gamma_" + std::to_string(k + 1));
  }
}

ParameterMask ParameterMask::all(int n_qubits, int n_channels) {
  ParameterMask m;
  m.J.assign(static_cast<std::size_t>(pow4(n_qubits)), true);
  m.J[0] = false;
  m.gamma.assign(static_cast<std::size_t>(n_channels), true);
  return m;
}

ParameterMask ParameterMask::none(int n_qubits, int n_channels) {
  ParameterMask m;
  m.J.assign(static_cast<std::size_t>(pow4(n_qubits)), false);
  m.gamma.assign(static_cast<std::size_t>(n_channels), false);
  return m;
}

ParameterMask ParameterMask::two_body(int n_channels) {
  ParameterMask m = none(2, n_channels);
  for (int mu = 1; mu < 4; ++mu) {
    for (int nu = 1; nu < 4; ++nu) m.J[static_cast<std::size_t>(4 * mu + nu)] = true;
  }
  m.gamma.assign(static_cast<std::size_t>(n_channels), true);
  return m;
}

int ParameterMask::trainable_j() const {
  int n = 0;
  for (std::size_t i = 1; i < J.size(); ++i) n += J[i] ? 1 : 0;
  return n;
}

int ParameterMask::trainable_gamma() const {
  int n = 0;
  for (bool g : gamma) n += g ? 1 : 0;
  return n;
}

ChannelSet::ChannelSet(std::vector<Channel> channels) : channels_(std::move(channels)) {
  for (const auto& c : channels_) {
    if (c.op.rows() != channels_.front().op.rows() || c.op.rows() != c.op.cols()) {
      throw std::invalid_argument("ChannelSet: operators must be square with a common dimension");
    }
  }
}

ChannelSet ChannelSet::two_qubit_standard() {
  const ComplexMatrix id = pauli_matrix(0);
  const ComplexMatrix minus = lowering_raising(Ladder::Minus);
  const ComplexMatrix z = pauli_matrix(3);
  return ChannelSet({{kron(minus, id), "sigma_minus_1"},
                     {kron(z, id), "sigma_z_1"},
                     {kron(id, minus), "sigma_minus_2"},
                     {kron(id, z), "sigma_z_2"}});
}

ChannelSet ChannelSet::one_qubit_finite_t() {
  return ChannelSet({{pauli_matrix(3), "sigma_z"},
                     {lowering_raising(Ladder::Minus), "sigma_minus"},
                     {lowering_raising(Ladder::Plus), "sigma_plus"}});
}

ChannelSet ChannelSet::standard_for(int n_qubits) {
  return n_qubits == 1 ? one_qubit_finite_t() : two_qubit_standard();
}

int ChannelSet::dim() const { return channels_.empty() ? 0 : static_cast<int>(channels_.front().op.rows()); }

void Trajectory::validate() const {
  if (values.cols() != times.size()) throw std::invalid_argument("Trajectory: column count must match time count");
  if (values.rows() != pow4(n_qubits) - 1) throw std::invalid_argument("Trajectory: row count must be 4^n - 1");
  for (Eigen::Index i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("Trajectory: times must be strictly increasing");
  }
}

DensityMatrix plus_plus_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("plus_plus_state: only 1 or 2 qubits are supported");
  const int dim = 1 << n_qubits;
  return {ComplexMatrix::Constant(dim, dim, Complex(1.0 / dim, 0.0))};
}

Eigen::VectorXd expectation_values(const DensityMatrix& rho, const ObservableBasis& basis) {
  if (rho.rho.rows() != basis.dim()) throw std::invalid_argument("expectation_values: dimension mismatch");
  Eigen::VectorXd out(basis.size());
  for (int a = 0; a < basis.size(); ++a) {
    const Complex v = (rho.rho * basis.matrix(a)).trace();
    if (std::abs(v.imag()) > kImagTol) throw std::runtime_error("expectation_values: non-real expectation value");
    out[a] = v.real();
  }
  return out;
}

Eigen::VectorXd uniform_grid(double t_final, int count) {
  if (count < 1) throw std::invalid_argument("uniform_grid: count must be positive");
  if (count == 1) return Eigen::VectorXd::Constant(1, 0.0);
  Eigen::VectorXd g(count);
  for (int i = 0; i < count; ++i) g[i] = t_final * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian, const ChannelSet& channels,
                           const Eigen::VectorXd& gamma) {
  if (rho.rows() != hamiltonian.rows() || rho.cols() != hamiltonian.cols()) {
    throw std::invalid_argument("lindblad_rhs: rho and H dimension mismatch");
  }
  if (gamma.size() != channels.size()) throw std::invalid_argument("lindblad_rhs: one gamma per channel required");
  if (channels.size() > 0 && channels.dim() != rho.rows()) {
    throw std::invalid_argument("lindblad_rhs: channel dimension mismatch");
  }
  const Complex i(0.0, 1.0);
  ComplexMatrix out = i * (rho * hamiltonian - hamiltonian * rho);
  for (int k = 0; k < channels.size(); ++k) {
    if (gamma[k] < 0.0) throw std::invalid_argument("lindblad_rhs: negative decay rate");
    if (gamma[k] == 0.0) continue;
    const ComplexMatrix& l = channels[k].op;
    const ComplexMatrix ldl = l.adjoint() * l;
    out += gamma[k] * (l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

int substeps_for_interval(double dt, double t_final, int internal_steps) {
  const double h_max = t_final / internal_steps;
  return std::max(1, static_cast<int>(std::ceil(dt / h_max - 1e-9)));
}

Trajectory evolve(const DensityMatrix& rho0, const ParameterSet& params, const ChannelSet& channels,
                  const Eigen::VectorXd& times, int internal_steps) {
  params.validate();
  if (times.size() == 0 || times[0] != 0.0) throw std::invalid_argument("evolve: times must start at 0");
  if (params.gamma.size() != channels.size()) throw std::invalid_argument("evolve: one gamma per channel required");
  const ObservableBasis basis(params.n_qubits);
  if (rho0.rho.rows() != basis.dim()) throw std::invalid_argument("evolve: initial state dimension mismatch");

  const ComplexMatrix h = build_hamiltonian(params);
  const double t_final = times[times.size() - 1];

  Trajectory traj;
  traj.n_qubits = params.n_qubits;
  traj.times = times;
  traj.values.resize(basis.size(), times.size());

  ComplexMatrix rho = rho0.rho;
  auto f = [&](const ComplexMatrix& r) { return lindblad_rhs(r, h, channels, params.gamma); };
  for (Eigen::Index n = 0; n < times.size(); ++n) {
    if (n > 0) {
      const double dt = times[n] - times[n - 1];
      if (!(dt > 0.0)) throw std::invalid_argument("evolve: times must be strictly increasing");
      const int steps = substeps_for_interval(dt, t_final, internal_steps);
      const double step = dt / steps;
      for (int s = 0; s < steps; ++s) {
        const ComplexMatrix k1 = f(rho);
        const ComplexMatrix k2 = f(rho + 0.5 * step * k1);
        const ComplexMatrix k3 = f(rho + 0.5 * step * k2);
        const ComplexMatrix k4 = f(rho + step * k3);
        rho += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    check_state(rho, times[n]);
    traj.values.col(n) = expectation_values({rho}, basis);
  }
  return traj;
}

Trajectory add_gaussian_noise(const Trajectory& traj, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: sigma must be nonnegative");
  Trajectory out = traj;
  if (sigma == 0.0) return out;
  Rng rng = make_rng(seed);
  boost::random::normal_distribution<double> normal(0.0, sigma);
  // time-major so that extending the observable set never reorders earlier draws
  for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.values.rows(); ++r) out.values(r, c) += normal(rng);
  }
  return out;
}

ParameterSet sample_random_parameters(int n_qubits, std::uint64_t seed, const ParameterMask& mask, double omega0,
                                      int n_channels) {
  ParameterSet p = ParameterSet::zeros(n_qubits, n_channels);
  if (mask.J.size() != static_cast<std::size_t>(p.J.size())) {
    throw std::invalid_argument("sample_random_parameters: mask size mismatch");
  }
  Rng rng = make_rng(seed);
  // every entry consumes a draw so masks do not shift the stream
  for (Eigen::Index idx = 1; idx < p.J.size(); ++idx) {
    const double v = uniform(rng, -omega0, omega0);
    if (mask.J[static_cast<std::size_t>(idx)]) p.J[idx] = v;
  }
  for (int k = 0; k < n_channels; ++k) p.gamma[k] = uniform(rng, 0.0, omega0);
  return p;
}

}  // namespace pinnverse
