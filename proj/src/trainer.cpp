#include "pinnverse/trainer.hpp"

#include "pinnverse/metrics.hpp"
#include "pinnverse/optim.hpp"
#include "pinnverse/rng.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <numbers>

namespace pinnverse {

double FitConfig::omega0() const { return 2.0 * std::numbers::pi / t_final; }

void FitConfig::validate() const {
  if (n_physics < 2) throw std::invalid_argument("FitConfig: N_t must be at least 2");
  if (n_data < 1) throw std::invalid_argument("FitConfig: N_c must be at least 1");
  if (!(t_final > 0.0)) throw std::invalid_argument("FitConfig: T must be positive");
  if (max_steps < 0) throw std::invalid_argument("FitConfig: max_steps must be nonnegative");
  if (!(lr > 0.0)) throw std::invalid_argument("FitConfig: learning rate must be positive");
  if (lr_decay_every < 1) throw std::invalid_argument("FitConfig: lr_decay_every must be positive");
  if (lambda_m < 0.0 || lambda_d < 0.0) throw std::invalid_argument("FitConfig: loss weights must be nonnegative");
  if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be at least 1");
  if (log_every < 1) throw std::invalid_argument("FitConfig: log_every must be positive");
  if (lbfgs_steps < 0) throw std::invalid_argument("FitConfig: lbfgs_steps must be nonnegative");
  if (lbfgs_history < 1) throw std::invalid_argument("FitConfig: lbfgs_history must be positive");
  if (gamma_init_fraction < 0.0) throw std::invalid_argument("FitConfig: gamma_init_fraction must be nonnegative");
}

PhysLayout::PhysLayout(int n_qubits, int n_channels, const ParameterMask& mask)
    : n_qubits_(n_qubits), n_channels_(n_channels), mask_(mask) {
  const std::size_t n_j = static_cast<std::size_t>(1) << (2 * n_qubits);
  if (mask.J.size() != n_j || mask.gamma.size() != static_cast<std::size_t>(n_channels)) {
    throw std::invalid_argument("PhysLayout: mask shape does not match the model");
  }
  for (std::size_t i = 1; i < n_j; ++i) {
    if (mask.J[i]) j_index_.push_back(static_cast<int>(i));
  }
  for (int k = 0; k < n_channels; ++k) {
    if (mask.gamma[static_cast<std::size_t>(k)]) gamma_index_.push_back(k);
  }
}

ParameterSet PhysLayout::to_parameters(const Eigen::VectorXd& raw) const {
  if (raw.size() != size()) throw std::invalid_argument("PhysLayout: raw vector has the wrong length");
  ParameterSet p = ParameterSet::zeros(n_qubits_, n_channels_);
  Eigen::Index pos = 0;
  for (int idx : j_index_) p.J[idx] = raw[pos++];
  for (int k : gamma_index_) {
    const double r = raw[pos++];
    p.gamma[k] = r * r;
  }
  return p;
}

Eigen::VectorXd PhysLayout::initial_raw(double gamma_init) const {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(size());
  raw.tail(static_cast<Eigen::Index>(gamma_index_.size())).setConstant(std::sqrt(gamma_init));
  return raw;
}

PinnLoss::PinnLoss(std::shared_ptr<const GeneratorTerms> terms, PhysLayout layout, Eigen::VectorXd s0, double t_final,
                   Eigen::VectorXd physics_times, Trajectory data, double lambda_m, double lambda_d)
    : terms_(std::move(terms)),
      layout_(std::move(layout)),
      s0_(std::move(s0)),
      t_final_(t_final),
      physics_times_(std::move(physics_times)),
      data_(std::move(data)),
      lambda_m_(lambda_m),
      lambda_d_(lambda_d) {
  const int n_obs = terms_->dim();
  if (s0_.size() != n_obs) throw std::invalid_argument("PinnLoss: initial vector length mismatch");
  if (data_.values.rows() != n_obs) {
    throw std::invalid_argument("PinnLoss: data has " + std::to_string(data_.values.rows()) +
                                " observables, basis has " + std::to_string(n_obs));
  }
  if (data_.values.cols() != data_.times.size()) throw std::invalid_argument("PinnLoss: malformed data trajectory");
  for (Eigen::Index i = 0; i < data_.times.size(); ++i) {
    if (data_.times[i] < 0.0 || data_.times[i] > t_final_ * (1.0 + 1e-12)) {
      throw std::invalid_argument("PinnLoss: data time outside [0, T]");
    }
  }
  taus_.reserve(static_cast<std::size_t>(physics_times_.size() + data_.times.size()));
  for (Eigen::Index i = 0; i < physics_times_.size(); ++i) taus_.push_back(physics_times_[i] / t_final_);
  for (Eigen::Index i = 0; i < data_.times.size(); ++i) taus_.push_back(data_.times[i] / t_final_);
}

LossValue PinnLoss::value(const NetState& state) const { return evaluate(state, nullptr); }

LossValue PinnLoss::value_and_gradient(const NetState& state, Gradients& grads) const {
  return evaluate(state, &grads);
}

LossValue PinnLoss::evaluate(const NetState& state, Gradients* grads) const {
  const ParameterSet params = layout_.to_parameters(state.raw_phys);
  const AffineGenerator gen = assemble_generator(terms_, params);
  const ForwardTape tape = forward(state, taus_);

  const Eigen::Index n_phys = physics_times_.size();
  const Eigen::Index n_data = data_.times.size();
  const Eigen::Index batch = n_phys + n_data;
  const Eigen::Map<const Eigen::RowVectorXd> tau(taus_.data(), batch);
  const double inv_t = 1.0 / t_final_;

  // trial form: s = s0 + tau N, ds/dt = (N + tau N') / T
  Eigen::MatrixXd s = tape.value.array().rowwise() * tau.array();
  s.colwise() += s0_;

  const auto s_phys = s.leftCols(n_phys);
  Eigen::MatrixXd residual =
      (tape.value.leftCols(n_phys) + (tape.dt.leftCols(n_phys).array().rowwise() * tau.head(n_phys).array()).matrix()) *
      inv_t;
  residual.noalias() -= gen.A * s_phys;
  residual.colwise() -= gen.b;
  const Eigen::MatrixXd mismatch = s.rightCols(n_data) - data_.values;

  LossValue loss;
  loss.physics = residual.squaredNorm();
  loss.data = mismatch.squaredNorm();
  loss.total = lambda_m_ * loss.physics + lambda_d_ * loss.data;
  if (grads == nullptr) return loss;

  // upstream gradients with respect to s and ds/dt
  Eigen::MatrixXd g_s(s.rows(), batch);
  Eigen::MatrixXd g_sdot = Eigen::MatrixXd::Zero(s.rows(), batch);
  g_s.leftCols(n_phys).noalias() = (-2.0 * lambda_m_) * gen.A.transpose() * residual;
  g_s.rightCols(n_data) = (2.0 * lambda_d_) * mismatch;
  g_sdot.leftCols(n_phys) = (2.0 * lambda_m_) * residual;

  const Eigen::MatrixXd g_value =
      (g_s.array().rowwise() * tau.array()).matrix() + g_sdot * inv_t;
  const Eigen::MatrixXd g_dt = (g_sdot.array().rowwise() * tau.array()).matrix() * inv_t;
  grads->weights = backward(state, tape, g_value, g_dt);

  // dL/dtheta = -2 lambda_m sum_j r_j . (dA s_j + db)
  const Eigen::MatrixXd rs = residual * s_phys.transpose();
  const Eigen::VectorXd r_sum = residual.rowwise().sum();
  grads->raw_phys.resize(layout_.size());
  Eigen::Index pos = 0;
  for (int idx : layout_.j_index()) {
    const GeneratorTerm& t = terms_->d_dj[static_cast<std::size_t>(idx)];
    grads->raw_phys[pos++] = -2.0 * lambda_m_ * ((t.dA.array() * rs.array()).sum() + t.db.dot(r_sum));
  }
  for (int k : layout_.gamma_index()) {
    const GeneratorTerm& t = terms_->d_dgamma[static_cast<std::size_t>(k)];
    const double d_gamma = -2.0 * lambda_m_ * ((t.dA.array() * rs.array()).sum() + t.db.dot(r_sum));
    grads->raw_phys[pos] = 2.0 * state.raw_phys[pos] * d_gamma;
    ++pos;
  }
  return loss;
}

Trajectory PinnLoss::trial_trajectory(const NetState& state, const Eigen::VectorXd& times) const {
  std::vector<double> taus(static_cast<std::size_t>(times.size()));
  for (Eigen::Index i = 0; i < times.size(); ++i) taus[static_cast<std::size_t>(i)] = times[i] / t_final_;
  const ForwardTape tape = forward(state, taus);
  Trajectory out;
  out.n_qubits = layout_.n_qubits();
  out.times = times;
  out.values = tape.value.array().rowwise() *
               Eigen::Map<const Eigen::RowVectorXd>(taus.data(), static_cast<Eigen::Index>(taus.size())).array();
  out.values.colwise() += s0_;
  return out;
}

double physics_loss(const NetState& state, const PinnLoss& loss) { return loss.value(state).physics; }

double data_loss(const NetState& state, const PinnLoss& loss) { return loss.value(state).data; }

Trajectory select_collocation(const Trajectory& data, int count) {
  const int n = data.n_times();
  if (count < 1) throw std::invalid_argument("select_collocation: count must be positive");
  if (count >= n) return data;
  Trajectory out;
  out.n_qubits = data.n_qubits;
  out.times.resize(count);
  out.values.resize(data.values.rows(), count);
  for (int i = 0; i < count; ++i) {
    const int col = count == 1 ? 0
                               : static_cast<int>(std::lround(static_cast<double>(i) * (n - 1) / (count - 1)));
    out.times[i] = data.times[col];
    out.values.col(i) = data.values.col(col);
  }
  return out;
}

namespace {

struct TrainOutcome {
  NetState state;
  std::vector<LossRecord> history;
  long steps = 0;
  LossValue final_loss;
};

TrainOutcome train_one(const PinnLoss& loss, const FitConfig& config, std::uint64_t seed) {
  NetConfig net;
  net.output_dim = loss.terms().dim();
  net.hidden_layers = config.hidden_layers;
  net.activation = config.activation;
  net.input_scale = config.input_scale;
  net.seed = seed;
  TrainOutcome out{init(net, loss.layout().initial_raw(config.gamma_init_fraction * config.omega0())), {}, 0, {}};

  AdamState opt;
  AdamOptions adam;
  Gradients grads;
  double window_best = std::numeric_limits<double>::infinity();
  double best = window_best;
  for (long step = 0; step < config.max_steps; ++step) {
    const LossValue lv = loss.value_and_gradient(out.state, grads);
    if (!std::isfinite(lv.total) || !grads.weights.allFinite() || !grads.raw_phys.allFinite()) {
      throw FitFailure("loss diverged at step " + std::to_string(step));
    }
    if (step % config.log_every == 0) out.history.push_back({step, lv.total, lv.physics, lv.data});
    best = std::min(best, lv.total);
    if (step > 0 && step % config.plateau_window == 0) {
      if (std::isfinite(window_best) && window_best - best <= config.plateau_rel_tol * window_best) {
        out.steps = step;
        break;
      }
      window_best = best;
    }
    adam.lr = config.lr * std::pow(config.lr_decay, static_cast<double>(step / config.lr_decay_every));
    adam_step(out.state, grads, opt, adam);
    out.steps = step + 1;
  }
  if (config.lbfgs_steps > 0) {
    const Eigen::Index nw = out.state.weights.size();
    const Eigen::Index np = out.state.raw_phys.size();
    NetState trial = out.state;
    Gradients g;
    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      trial.weights = x.head(nw);
      trial.raw_phys = x.tail(np);
      const double v = loss.value_and_gradient(trial, g).total;
      grad.resize(nw + np);
      grad << g.weights, g.raw_phys;
      return v;
    };
    Eigen::VectorXd x(nw + np);
    x << out.state.weights, out.state.raw_phys;
    LbfgsOptions lo;
    lo.history = config.lbfgs_history;
    lo.max_iterations = config.lbfgs_steps;
    lo.window = config.plateau_window;
    lo.rel_tol = config.plateau_rel_tol;
    const long adam_steps = out.steps;
    const LbfgsResult r = lbfgs_minimize(objective, x, lo, [&](long it, double) {
      if (it % config.log_every == 0) {
        trial.weights = x.head(nw);
        trial.raw_phys = x.tail(np);
        const LossValue lv = loss.value(trial);
        out.history.push_back({adam_steps + it, lv.total, lv.physics, lv.data});
      }
    });
    out.state.weights = x.head(nw);
    out.state.raw_phys = x.tail(np);
    out.steps = adam_steps + r.iterations;
  }
  out.final_loss = loss.value(out.state);
  if (!std::isfinite(out.final_loss.total)) throw FitFailure("non-finite final loss");
  out.history.push_back({out.steps, out.final_loss.total, out.final_loss.physics, out.final_loss.data});
  return out;
}

}  // namespace

FitReport fit(const Trajectory& data, const ChannelSet& channels, const FitConfig& config,
              const std::optional<ParameterSet>& truth) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  data.validate();
  const int n_qubits = data.n_qubits;
  const ObservableBasis basis(n_qubits);
  const ParameterMask mask = config.mask.value_or(ParameterMask::all(n_qubits, channels.size()));
  const PhysLayout layout(n_qubits, channels.size(), mask);
  const Eigen::VectorXd s0 = config.s0.value_or(expectation_values(plus_plus_state(n_qubits), basis));

  const Trajectory collocation = select_collocation(data, config.n_data);
  const PinnLoss loss(build_generator_terms(n_qubits, channels, basis), layout, s0, config.t_final,
                      uniform_grid(config.t_final, config.n_physics), collocation, config.lambda_m, config.lambda_d);

  FitReport report;
  report.mask = mask;
  report.truth = truth;
  report.s0 = s0;
  report.t_final = config.t_final;

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<LossRecord> best_history;
  for (int r = 0; r < config.restarts; ++r) {
    RestartResult run;
    run.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    try {
      TrainOutcome outcome = train_one(loss, config, run.seed);
      run.ok = true;
      run.steps = outcome.steps;
      run.final_loss = outcome.final_loss;
      run.recovered = layout.to_parameters(outcome.state.raw_phys);
      if (outcome.final_loss.total < best_loss) {
        best_loss = outcome.final_loss.total;
        report.best_restart = r;
        best_history = std::move(outcome.history);
        report.network = std::move(outcome.state);
      }
    } catch (const FitFailure& e) {
      run.ok = false;
      run.error = e.what();
      run.recovered = ParameterSet::zeros(n_qubits, channels.size());
    }
    report.runs.push_back(std::move(run));
  }
  if (report.best_restart < 0) throw FitFailure("fit: every restart diverged");

  report.recovered = report.runs[static_cast<std::size_t>(report.best_restart)].recovered;
  report.history = std::move(best_history);
  if (truth) report.errors = parameter_errors(*truth, report.recovered);
  report.reconstruction = reconstruct(report, collocation.times, channels);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Trajectory reconstruct(const FitReport& report, const Eigen::VectorXd& times, const ChannelSet& channels) {
  const ObservableBasis basis(report.recovered.n_qubits);
  const AffineGenerator gen =
      assemble_generator(build_generator_terms(report.recovered.n_qubits, channels, basis), report.recovered);
  if (times.size() > 0 && times[0] == 0.0) return evolve_pauli(gen, report.recovered.n_qubits, report.s0, times);
  // integrate from the preparation time and drop the extra leading sample
  Eigen::VectorXd padded(times.size() + 1);
  padded << 0.0, times;
  Trajectory full = evolve_pauli(gen, report.recovered.n_qubits, report.s0, padded);
  full.times = times;
  full.values = full.values.rightCols(times.size()).eval();
  return full;
}

ParameterErrors parameter_errors(const ParameterSet& truth, const ParameterSet& recovered) {
  ParameterErrors e;
  const auto pct = [](const Eigen::VectorXd& exact, const Eigen::VectorXd& abs_err) {
    Eigen::VectorXd out(exact.size());
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      out[i] = exact[i] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : abs_err[i] / std::abs(exact[i]);
    }
    return out;
  };
  const Eigen::VectorXd j_true = truth.J.tail(truth.J.size() - 1);
  const Eigen::VectorXd j_pred = recovered.J.tail(recovered.J.size() - 1);
  e.j_abs = (j_true - j_pred).cwiseAbs();
  e.j_pct = pct(j_true, e.j_abs);
  e.gamma_abs = (truth.gamma - recovered.gamma).cwiseAbs();
  e.gamma_pct = pct(truth.gamma, e.gamma_abs);
  const auto try_mape = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> std::optional<double> {
    if (mape_support(a) == 0) return std::nullopt;
    return mape(a, b);
  };
  e.mape_j = try_mape(j_true, j_pred);
  e.mape_gamma = try_mape(truth.gamma, recovered.gamma);
  Eigen::VectorXd all_true(j_true.size() + truth.gamma.size());
  Eigen::VectorXd all_pred(all_true.size());
  all_true << j_true, truth.gamma;
  all_pred << j_pred, recovered.gamma;
  e.mape_all = try_mape(all_true, all_pred);
  return e;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      a.push_back(v[i]);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

nlohmann::json params_json(const ParameterSet& p) {
  return {{"n_qubits", p.n_qubits}, {"J", vec_json(p.J)}, {"gamma", vec_json(p.gamma)}};
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json report_to_json(const FitReport& report) {
  nlohmann::json j;
  j["parameters"] = params_json(report.recovered);
  j["trainable"] = {{"J", report.mask.J}, {"gamma", report.mask.gamma}};
  if (report.truth) j["truth"] = params_json(*report.truth);
  if (report.errors) {
    const auto& e = *report.errors;
    j["errors"] = {{"J_abs", vec_json(e.j_abs)},         {"J_pct", vec_json(e.j_pct)},
                   {"gamma_abs", vec_json(e.gamma_abs)}, {"gamma_pct", vec_json(e.gamma_pct)},
                   {"mape_J", opt_json(e.mape_j)},       {"mape_gamma", opt_json(e.mape_gamma)},
                   {"mape_all", opt_json(e.mape_all)}};
  }
  j["best_restart"] = report.best_restart;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    nlohmann::json jr = {{"seed", r.seed}, {"ok", r.ok}, {"steps", r.steps}};
    if (r.ok) {
      jr["final_loss"] = {{"total", r.final_loss.total}, {"physics", r.final_loss.physics}, {"data", r.final_loss.data}};
      jr["parameters"] = params_json(r.recovered);
      if (report.truth) {
        const ParameterErrors e = parameter_errors(*report.truth, r.recovered);
        jr["mape_J"] = opt_json(e.mape_j);
        jr["mape_gamma"] = opt_json(e.mape_gamma);
      }
    } else {
      jr["error"] = r.error;
    }
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : report.history) hist.push_back({h.step, h.total, h.physics, h.data});
  j["loss_history"] = {{"columns", {"step", "total", "physics", "data"}}, {"rows", std::move(hist)}};
  j["s0"] = vec_json(report.s0);
  j["t_final"] = report.t_final;
  j["timing"] = {{"wall_seconds", report.wall_seconds}};
  return j;
}

}  // namespace pinnverse
