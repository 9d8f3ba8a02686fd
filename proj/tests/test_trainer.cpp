#include "pinnverse/trainer.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <numbers>

using namespace pinnverse;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Problem {
  ChannelSet channels;
  ObservableBasis basis;
  ParameterSet truth;
  Trajectory data;
};

Problem two_qubit_problem(std::uint64_t seed, int n_data = 12) {
  Problem p{ChannelSet::two_qubit_standard(), ObservableBasis(2), {}, {}};
  p.truth = sample_random_parameters(2, seed, ParameterMask::all(2, 4), kTwoPi, 4);
  p.data = evolve(plus_plus_state(2), p.truth, p.channels, uniform_grid(1.0, n_data));
  return p;
}

PinnLoss make_loss(const Problem& p, const ParameterMask& mask, int n_phys, double lm, double ld) {
  return PinnLoss(build_generator_terms(p.basis.n_qubits(), p.channels, p.basis),
                  PhysLayout(p.basis.n_qubits(), p.channels.size(), mask),
                  expectation_values(plus_plus_state(p.basis.n_qubits()), p.basis), 1.0, uniform_grid(1.0, n_phys),
                  p.data, lm, ld);
}

NetState random_state(const PinnLoss& loss, std::uint64_t seed) {
  NetConfig c;
  c.output_dim = loss.terms().dim();
  c.hidden_layers = {6, 5};
  c.activation = Activation::Sin;
  c.input_scale = 2.0;
  c.seed = seed;
  Eigen::VectorXd raw(loss.layout().size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = 0.3 + 0.2 * std::sin(1.3 * static_cast<double>(i));
  NetState s = init(c, raw);
  for (Eigen::Index i = 0; i < s.weights.size(); ++i) s.weights[i] += 0.05 * std::cos(0.7 * static_cast<double>(i));
  return s;
}

void check_gradient(const PinnLoss& loss, const NetState& state) {
  Gradients g;
  loss.value_and_gradient(state, g);
  const auto fd = [&](NetState plus, NetState minus, double h) {
    return (loss.value(plus).total - loss.value(minus).total) / (2 * h);
  };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < state.raw_phys.size(); ++i) {
    NetState p = state, m = state;
    p.raw_phys[i] += h;
    m.raw_phys[i] -= h;
    const double num = fd(p, m, h);
    EXPECT_LE(std::abs(g.raw_phys[i] - num), std::max(1e-4 * std::abs(num), 1e-8)) << "raw " << i;
  }
  for (Eigen::Index i = 0; i < state.weights.size(); i += 3) {
    NetState p = state, m = state;
    p.weights[i] += h;
    m.weights[i] -= h;
    const double num = fd(p, m, h);
    EXPECT_LE(std::abs(g.weights[i] - num), std::max(1e-4 * std::abs(num), 1e-8)) << "weight " << i;
  }
}

FitConfig quick_config() {
  FitConfig c;
  c.hidden_layers = {16, 16};
  c.max_steps = 1500;
  c.lbfgs_steps = 1500;
  c.n_physics = 60;
  c.lr_decay_every = 500;
  c.log_every = 250;
  return c;
}

}  // namespace

TEST(Trainer, LayoutMapsRawToParameters) {
  const PhysLayout layout(2, 4, ParameterMask::two_body(4));
  EXPECT_EQ(layout.size(), 9 + 4);
  Eigen::VectorXd raw = Eigen::VectorXd::LinSpaced(13, 1.0, 13.0);
  const ParameterSet p = layout.to_parameters(raw);
  EXPECT_EQ(p.j(1, 1), 1.0);
  EXPECT_EQ(p.j(3, 3), 9.0);
  EXPECT_EQ(p.j(1, 0), 0.0);
  EXPECT_EQ(p.gamma[0], 100.0);  // r^2
  EXPECT_EQ(p.gamma[3], 169.0);
  const Eigen::VectorXd init = layout.initial_raw(0.25);
  EXPECT_EQ(init.head(9).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(init[12], 0.5);
}

TEST(Trainer, LayoutRejectsMismatchedMask) {
  EXPECT_THROW(PhysLayout(1, 3, ParameterMask::all(2, 4)), std::invalid_argument);
}

TEST(Trainer, ZeroNetworkLossByHand) {
  // with a zero network the trial solution is the constant s0
  const Problem p = two_qubit_problem(3);
  const PinnLoss loss = make_loss(p, ParameterMask::all(2, 4), 20, 0.5, 2.0);
  NetState s = random_state(loss, 1);
  s.weights.setZero();
  const ParameterSet params = loss.layout().to_parameters(s.raw_phys);
  const AffineGenerator gen = build_generator(params, p.channels, p.basis);
  const Eigen::VectorXd s0 = loss.s0();
  const double phys = 20.0 * (gen.A * s0 + gen.b).squaredNorm();
  const double data = (p.data.values.colwise() - s0).squaredNorm();
  const LossValue v = loss.value(s);
  EXPECT_NEAR(v.physics, phys, 1e-10 * phys);
  EXPECT_NEAR(v.data, data, 1e-12 * std::max(1.0, data));
  EXPECT_NEAR(v.total, 0.5 * phys + 2.0 * data, 1e-10 * v.total);
  EXPECT_NEAR(physics_loss(s, loss), phys, 1e-10 * phys);
  EXPECT_NEAR(data_loss(s, loss), data, 1e-12 * std::max(1.0, data));
}

TEST(Trainer, HardInitialCondition) {
  const Problem p = two_qubit_problem(4);
  const PinnLoss loss = make_loss(p, ParameterMask::all(2, 4), 10, 1.0, 1.0);
  const NetState s = random_state(loss, 2);
  const Trajectory at0 = loss.trial_trajectory(s, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(at0.values.col(0), loss.s0());
}

TEST(Trainer, GradientAllParameters) {
  const Problem p = two_qubit_problem(5);
  const PinnLoss loss = make_loss(p, ParameterMask::all(2, 4), 15, 0.7, 1.3);
  check_gradient(loss, random_state(loss, 3));
}

TEST(Trainer, GradientTwoBodyMask) {
  const Problem p = two_qubit_problem(6);
  const PinnLoss loss = make_loss(p, ParameterMask::two_body(4), 15, 1.0, 1.0);
  check_gradient(loss, random_state(loss, 4));
}

TEST(Trainer, GradientSingleQubit) {
  Problem p{ChannelSet::one_qubit_finite_t(), ObservableBasis(1), ParameterSet::zeros(1, 3), {}};
  p.truth.J << 0.0, 0.2, -1.5, 0.1;
  p.truth.gamma << 0.1, 0.05, 0.01;
  p.data = evolve(plus_plus_state(1), p.truth, p.channels, uniform_grid(1.0, 9));
  const PinnLoss loss = make_loss(p, ParameterMask::all(1, 3), 25, 2.0, 1.0);
  check_gradient(loss, random_state(loss, 5));
}

TEST(Trainer, CollocationSelectionKeepsEndpoints) {
  const Problem p = two_qubit_problem(7, 101);
  const Trajectory c = select_collocation(p.data, 11);
  ASSERT_EQ(c.n_times(), 11);
  EXPECT_EQ(c.times[0], 0.0);
  EXPECT_EQ(c.times[10], 1.0);
  EXPECT_DOUBLE_EQ(c.times[5], 0.5);
  EXPECT_EQ(c.values.col(3), p.data.values.col(30));
  EXPECT_EQ(select_collocation(p.data, 500).n_times(), 101);
}

TEST(Trainer, FrozenDynamicsGivesVanishingParameters) {
  // constant data at the initial |+> state: no precession, no decay
  Trajectory data;
  data.n_qubits = 1;
  data.times = uniform_grid(1.0, 20);
  data.values = Eigen::MatrixXd::Zero(3, 20);
  data.values.row(0).setOnes();
  FitConfig c = quick_config();
  const FitReport r = fit(data, ChannelSet::one_qubit_finite_t(), c);
  // J_1 generates rotations about the state's own axis, so the data cannot pin it
  EXPECT_LT(std::abs(r.recovered.j(2)), 1e-2);
  EXPECT_LT(std::abs(r.recovered.j(3)), 1e-2);
  EXPECT_LT(r.recovered.gamma.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Trainer, RecoversSingleQubitPrecessionAndDephasing) {
  ParameterSet truth = ParameterSet::zeros(1, 3);
  truth.j(3) = 4.0;
  truth.gamma[0] = 0.8;
  const ChannelSet ch = ChannelSet::one_qubit_finite_t();
  const Trajectory data = evolve(plus_plus_state(1), truth, ch, uniform_grid(1.0, 40));
  ParameterMask mask = ParameterMask::none(1, 3);
  mask.J[3] = true;
  mask.gamma[0] = true;
  FitConfig c = quick_config();
  c.mask = mask;
  const FitReport r = fit(data, ch, c, truth);
  EXPECT_NEAR(r.recovered.j(3), 4.0, 0.04);
  EXPECT_NEAR(r.recovered.gamma[0], 0.8, 0.02);
  EXPECT_EQ(r.recovered.gamma[1], 0.0);
  ASSERT_TRUE(r.errors.has_value());
  EXPECT_LT(*r.errors->mape_all, 0.02);
  EXPECT_LT((r.reconstruction.values - data.values).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Trainer, FitIsDeterministic) {
  const Problem p = two_qubit_problem(8, 20);
  FitConfig c = quick_config();
  c.max_steps = 200;
  c.lbfgs_steps = 100;
  c.restarts = 2;
  c.seed = 42;
  const FitReport a = fit(p.data, p.channels, c, p.truth);
  const FitReport b = fit(p.data, p.channels, c, p.truth);
  EXPECT_EQ(a.recovered.J, b.recovered.J);
  EXPECT_EQ(a.recovered.gamma, b.recovered.gamma);
  nlohmann::json ja = report_to_json(a), jb = report_to_json(b);
  ja.erase("timing");
  jb.erase("timing");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(a.runs.size(), 2u);
  EXPECT_NE(a.runs[0].seed, a.runs[1].seed);
}

TEST(Trainer, ReportJsonLayout) {
  const Problem p = two_qubit_problem(9, 10);
  FitConfig c = quick_config();
  c.max_steps = 20;
  c.lbfgs_steps = 0;
  const nlohmann::json j = report_to_json(fit(p.data, p.channels, c, p.truth));
  for (const char* key : {"parameters", "trainable", "truth", "errors", "best_restart", "runs", "loss_history", "s0",
                          "t_final", "timing"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["parameters"]["J"].size(), 16u);
  EXPECT_EQ(j["errors"]["J_pct"].size(), 15u);
}

TEST(Trainer, EveryRestartFailingIsReported) {
  Problem p = two_qubit_problem(10, 10);
  p.data.values(3, 4) = std::numeric_limits<double>::quiet_NaN();
  FitConfig c = quick_config();
  c.restarts = 2;
  EXPECT_THROW(fit(p.data, p.channels, c), FitFailure);
}

TEST(Trainer, ConfigValidation) {
  FitConfig c;
  c.n_physics = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FitConfig{};
  c.restarts = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FitConfig{};
  c.t_final = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_NO_THROW(FitConfig{}.validate());
  EXPECT_DOUBLE_EQ(FitConfig{}.omega0(), kTwoPi);
}

TEST(Trainer, ParameterErrorsSkipZeroTruth) {
  ParameterSet truth = ParameterSet::zeros(1, 3), rec = ParameterSet::zeros(1, 3);
  truth.J << 0.0, 2.0, 0.0, -1.0;
  rec.J << 0.0, 2.2, 0.5, -1.1;
  truth.gamma << 0.5, 0.0, 0.0;
  rec.gamma << 0.4, 0.1, 0.0;
  const ParameterErrors e = parameter_errors(truth, rec);
  EXPECT_TRUE(std::isnan(e.j_pct[1]));
  EXPECT_NEAR(*e.mape_j, 0.1, 1e-12);
  EXPECT_NEAR(*e.mape_gamma, 0.2, 1e-12);
  EXPECT_NEAR(*e.mape_all, (0.1 * 2 + 0.2) / 3.0, 1e-12);
  EXPECT_NEAR(e.gamma_abs[1], 0.1, 1e-15);
}
