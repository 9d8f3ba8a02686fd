#include "pinnverse/net.hpp"

#include "pinnverse/rng.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>

using namespace pinnverse;

namespace {

NetState small_net(std::uint64_t seed, Activation act, double scale = 1.0) {
  NetConfig c;
  c.output_dim = 4;
  c.hidden_layers = {8, 6};
  c.activation = act;
  c.input_scale = scale;
  c.seed = seed;
  return init(c);
}

// Scalar test functional of both network outputs: sum(w1 . value + w2 . dt^2).
double functional(const NetState& s, const std::vector<double>& t, const Eigen::MatrixXd& w1,
                  const Eigen::MatrixXd& w2) {
  const ForwardTape tape = forward(s, t);
  return (w1.array() * tape.value.array()).sum() + (w2.array() * tape.dt.array().square()).sum();
}

}  // namespace

TEST(Net, TimeDerivativeMatchesCentralDifferences) {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Activation act = trial % 2 == 0 ? Activation::Tanh : Activation::Sin;
    const NetState net = small_net(static_cast<std::uint64_t>(trial), act, trial % 3 == 0 ? 5.0 : 1.0);
    const double t = uniform(rng, 0.0, 1.0);
    const double h = 1e-5;
    const DualOutput at = forward_with_dt(net, t);
    const Eigen::VectorXd fd = (forward_with_dt(net, t + h).value - forward_with_dt(net, t - h).value) / (2 * h);
    const double rel = (at.dt - fd).norm() / std::max(fd.norm(), 1e-8);
    EXPECT_LT(rel, 1e-6) << "trial " << trial;
  }
}

TEST(Net, BatchedForwardMatchesSinglePoints) {
  const NetState net = small_net(3, Activation::Sin);
  const std::vector<double> t{0.0, 0.3, 0.9};
  const ForwardTape tape = forward(net, t);
  for (int c = 0; c < 3; ++c) {
    const DualOutput one = forward_with_dt(net, t[static_cast<std::size_t>(c)]);
    EXPECT_LT((tape.value.col(c) - one.value).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((tape.dt.col(c) - one.dt).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Net, WeightGradientMatchesFiniteDifferences) {
  for (Activation act : {Activation::Tanh, Activation::Sin}) {
    NetState net = small_net(5, act, 3.0);
    // give the biases nonzero values so their gradients are exercised too
    for (Eigen::Index i = 0; i < net.weights.size(); ++i) net.weights[i] += 0.01 * std::sin(1.7 * i);
    const std::vector<double> t{0.1, 0.45, 0.8};
    Eigen::MatrixXd w1(4, 3), w2(4, 3);
    for (int i = 0; i < 12; ++i) {
      w1.data()[i] = std::cos(0.9 * i);
      w2.data()[i] = 0.3 + 0.1 * i;
    }
    const ForwardTape tape = forward(net, t);
    const Eigen::MatrixXd g_dt = 2.0 * w2.array() * tape.dt.array();
    const Eigen::VectorXd grad = backward(net, tape, w1, g_dt);
    for (Eigen::Index i = 0; i < net.weights.size(); ++i) {
      const double h = 1e-6;
      NetState p = net, m = net;
      p.weights[i] += h;
      m.weights[i] -= h;
      const double fd = (functional(p, t, w1, w2) - functional(m, t, w1, w2)) / (2 * h);
      EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "weight " << i;
    }
  }
}

TEST(Net, BackwardRejectsMismatchedShapes) {
  const NetState net = small_net(1, Activation::Tanh);
  const std::vector<double> t{0.5};
  const ForwardTape tape = forward(net, t);
  EXPECT_THROW(backward(net, tape, Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(3, 1)), UnsupportedPrimitive);
}

TEST(Net, NonSmoothActivationIsRejected) {
  EXPECT_THROW(parse_activation("relu"), UnsupportedPrimitive);
  EXPECT_EQ(parse_activation("sin"), Activation::Sin);
  EXPECT_EQ(activation_name(Activation::Tanh), "tanh");
}

TEST(Net, InitShapesAndDeterminism) {
  NetConfig c;
  c.hidden_layers = {5, 7};
  c.output_dim = 3;
  c.seed = 9;
  const NetState a = init(c, Eigen::VectorXd::Ones(2));
  ASSERT_EQ(a.layers.size(), 3u);
  EXPECT_EQ(a.weights.size(), 5 * 2 + 7 * 6 + 3 * 8);
  EXPECT_EQ(a.output_dim(), 3);
  EXPECT_EQ(a.weights, init(c, Eigen::VectorXd::Ones(2)).weights);
  c.seed = 10;
  EXPECT_NE(a.weights, init(c).weights);
  // Glorot-uniform bound on the last layer
  const double bound = std::sqrt(6.0 / (7 + 3));
  const auto last = a.weights.segment(static_cast<Eigen::Index>(a.weight_offset(2)), 21);
  EXPECT_LE(last.cwiseAbs().maxCoeff(), bound);
}

TEST(Net, AdamMinimizesAQuadratic) {
  NetState s;
  s.weights = Eigen::VectorXd::Zero(1);
  s.raw_phys = Eigen::VectorXd::Constant(1, -1.0);
  AdamState opt;
  AdamOptions o;
  o.lr = 0.05;
  for (int i = 0; i < 3000; ++i) {
    Gradients g{2.0 * (s.weights.array() - 3.0).matrix(), 2.0 * (s.raw_phys.array() + 2.0).matrix()};
    adam_step(s, g, opt, o);
  }
  EXPECT_NEAR(s.weights[0], 3.0, 1e-3);
  EXPECT_NEAR(s.raw_phys[0], -2.0, 1e-3);
  EXPECT_EQ(opt.step, 3000);
}

TEST(Net, AdamFirstStepHasLearningRateSize) {
  // bias correction makes the first update lr * sign(g)
  NetState s;
  s.weights = Eigen::VectorXd::Zero(2);
  AdamState opt;
  AdamOptions o;
  o.lr = 0.1;
  Eigen::VectorXd g(2);
  g << 5.0, -0.001;
  adam_step(s, Gradients{g, Eigen::VectorXd()}, opt, o);
  EXPECT_NEAR(s.weights[0], -0.1, 1e-6);
  EXPECT_NEAR(s.weights[1], 0.1, 1e-4);
}

TEST(Net, CheckpointRoundTrip) {
  NetState net = small_net(4, Activation::Sin);
  net.raw_phys = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "pinnverse_ckpt_test.json";
  save_checkpoint(net, path.string());
  const NetState back = load_checkpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.weights, net.weights);
  EXPECT_EQ(back.raw_phys, net.raw_phys);
  EXPECT_EQ(back.activation, net.activation);
  ASSERT_EQ(back.layers.size(), net.layers.size());
  const DualOutput a = forward_with_dt(net, 0.37), b = forward_with_dt(back, 0.37);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.dt, b.dt);
}

TEST(Net, CheckpointFormatIsChecked) {
  nlohmann::json j = checkpoint_to_json(small_net(2, Activation::Tanh));
  EXPECT_EQ(j["format"], kCheckpointFormat);
  nlohmann::json wrong = j;
  wrong["format"] = "something-else/9";
  EXPECT_THROW(checkpoint_from_json(wrong), std::invalid_argument);
  nlohmann::json broken = j;
  broken["layers"][1]["in"] = 3;
  EXPECT_THROW(checkpoint_from_json(broken), std::invalid_argument);
}
