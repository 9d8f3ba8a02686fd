#pragma once

#include "pinnverse/lindblad.hpp"
#include "pinnverse/liouvillian.hpp"
#include "pinnverse/net.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pinnverse {

struct FitConfig {
  int n_physics = 200;  // N_t
  int n_data = 50;      // N_c; data with more columns is subsampled to this many
  double t_final = 1.0;
  long max_steps = 10000;  // Adam steps
  double lr = 5e-3;
  double lr_decay = 0.5;
  long lr_decay_every = 2000;
  /// The residual term is down-weighted: the data fit leads and the physics
  /// term only has to select parameters consistent with it.
  double lambda_m = 1e-4;
  double lambda_d = 1.0;
  std::optional<ParameterMask> mask;  // unset: everything trainable
  int restarts = 1;
  std::uint64_t seed = 0;
  long plateau_window = 2000;
  double plateau_rel_tol = 1e-10;
  long log_every = 500;
  std::vector<int> hidden_layers{32, 32, 32};
  Activation activation = Activation::Sin;
  double input_scale = 10.0;
  /// Quasi-Newton refinement iterations run after the Adam phase (0 disables it).
  long lbfgs_steps = 10000;
  int lbfgs_history = 20;
  /// Initial decay-rate guess as a fraction of omega0 (r_k = sqrt(fraction * omega0)).
  double gamma_init_fraction = 0.1;
  /// Initial Pauli vector; unset means the |+>^n product state.
  std::optional<Eigen::VectorXd> s0;

  double omega0() const;
  void validate() const;
};

/// Maps between the raw trainable vector and a ParameterSet under a mask.
///
/// Layout: trainable J entries in string-index order, then one raw r_k per
/// trainable channel, with gamma_k = r_k^2.
class PhysLayout {
 public:
  PhysLayout(int n_qubits, int n_channels, const ParameterMask& mask);

  int size() const { return static_cast<int>(j_index_.size() + gamma_index_.size()); }
  int n_qubits() const { return n_qubits_; }
  int n_channels() const { return n_channels_; }
  const ParameterMask& mask() const { return mask_; }
  const std::vector<int>& j_index() const { return j_index_; }
  const std::vector<int>& gamma_index() const { return gamma_index_; }

  ParameterSet to_parameters(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd initial_raw(double gamma_init) const;

 private:
  int n_qubits_;
  int n_channels_;
  ParameterMask mask_;
  std::vector<int> j_index_;
  std::vector<int> gamma_index_;
};

struct LossValue {
  double total = 0.0;
  double physics = 0.0;
  double data = 0.0;
};

/// Composite loss lambda_m * L_m + lambda_d * L_d over a fixed set of physics
/// and data collocation times, with the hard initial condition
/// s(t) = s0 + (t/T) NN(t/T).
class PinnLoss {
 public:
  PinnLoss(std::shared_ptr<const GeneratorTerms> terms, PhysLayout layout, Eigen::VectorXd s0, double t_final,
           Eigen::VectorXd physics_times, Trajectory data, double lambda_m = 1.0, double lambda_d = 1.0);

  LossValue value(const NetState& state) const;
  LossValue value_and_gradient(const NetState& state, Gradients& grads) const;

  /// Trial solution and its time derivative at arbitrary times.
  Trajectory trial_trajectory(const NetState& state, const Eigen::VectorXd& times) const;

  const PhysLayout& layout() const { return layout_; }
  const Eigen::VectorXd& s0() const { return s0_; }
  const GeneratorTerms& terms() const { return *terms_; }

 private:
  LossValue evaluate(const NetState& state, Gradients* grads) const;

  std::shared_ptr<const GeneratorTerms> terms_;
  PhysLayout layout_;
  Eigen::VectorXd s0_;
  double t_final_;
  Eigen::VectorXd physics_times_;
  Trajectory data_;
  double lambda_m_;
  double lambda_d_;
  std::vector<double> taus_;
};

/// L_m alone (lambda_m = 1) for the given state and physics times.
double physics_loss(const NetState& state, const PinnLoss& loss);
/// L_d alone (lambda_d = 1).
double data_loss(const NetState& state, const PinnLoss& loss);

struct LossRecord {
  long step = 0;
  double total = 0.0;
  double physics = 0.0;
  double data = 0.0;
};

struct RestartResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  long steps = 0;
  LossValue final_loss;
  ParameterSet recovered;
};

struct ParameterErrors {
  Eigen::VectorXd j_abs, j_pct;  // pct is NaN where truth is 0
  Eigen::VectorXd gamma_abs, gamma_pct;
  std::optional<double> mape_j;
  std::optional<double> mape_gamma;
  std::optional<double> mape_all;
};

struct FitReport {
  ParameterSet recovered;
  ParameterMask mask;
  int best_restart = -1;
  std::vector<LossRecord> history;
  std::vector<RestartResult> runs;
  std::optional<ParameterSet> truth;
  std::optional<ParameterErrors> errors;
  Eigen::VectorXd s0;
  double t_final = 1.0;
  Trajectory reconstruction;
  NetState network;  // best restart's trained network and raw parameters
  double wall_seconds = 0.0;
};

class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picks `count` equally spaced columns (endpoints included) from a trajectory.
Trajectory select_collocation(const Trajectory& data, int count);

/// Jointly trains the trajectory network and the physical parameters with Adam,
/// over `config.restarts` independent seeds; the lowest final loss wins.
FitReport fit(const Trajectory& data, const ChannelSet& channels, const FitConfig& config,
              const std::optional<ParameterSet>& truth = std::nullopt);

/// Integrates the recovered parameters from the report's initial vector.
Trajectory reconstruct(const FitReport& report, const Eigen::VectorXd& times, const ChannelSet& channels);

ParameterErrors parameter_errors(const ParameterSet& truth, const ParameterSet& recovered);

/// Report JSON. Everything except the "timing" object is a pure function of the inputs and seeds.
nlohmann::json report_to_json(const FitReport& report);

}  // namespace pinnverse
