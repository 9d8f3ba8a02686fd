#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnverse {

enum class Activation { Tanh, Sin };

/// Raised for loss-graph pieces the network cannot differentiate through
/// (non-smooth activations, malformed upstream gradients).
class UnsupportedPrimitive : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

struct NetConfig {
  int input_dim = 1;
  int output_dim = 15;
  std::vector<int> hidden_layers{64, 64, 64, 64};
  Activation activation = Activation::Tanh;
  /// Multiplier on the first layer's init range; widens the frequency content at init.
  double input_scale = 1.0;
  std::uint64_t seed = 0;
};

struct LayerShape {
  int in = 0;
  int out = 0;
};

/// Trajectory network parameters plus the raw physical parameters trained with it.
///
/// Layer weights are stored flat, layer by layer: W (out x in, row-major) then bias.
struct NetState {
  std::vector<LayerShape> layers;
  Activation activation = Activation::Tanh;
  Eigen::VectorXd weights;
  Eigen::VectorXd raw_phys;

  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t weight_offset(std::size_t layer) const;
};

struct Gradients {
  Eigen::VectorXd weights;
  Eigen::VectorXd raw_phys;
};

/// Value of the network and its derivative with respect to the (normalized) time input.
struct DualOutput {
  Eigen::VectorXd value;
  Eigen::VectorXd dt;
};

/// Batched forward pass, kept for the reverse sweep.
///
/// Each entry of `inputs` holds [a | da] side by side (2B columns): the layer input
/// and its time derivative. `value`/`dt` are the network outputs (out x B).
struct ForwardTape {
  int batch = 0;
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> slope;      // act'(z)
  std::vector<Eigen::MatrixXd> curvature;  // act''(z) * dz
  Eigen::MatrixXd value;
  Eigen::MatrixXd dt;
};

NetState init(const NetConfig& config, Eigen::VectorXd raw_phys = {});

DualOutput forward_with_dt(const NetState& state, double t);
ForwardTape forward(const NetState& state, std::span<const double> t);

/// Reverse sweep: given dL/d(value) and dL/d(dt) per column, returns dL/d(weights).
Eigen::VectorXd backward(const NetState& state, const ForwardTape& tape, const Eigen::MatrixXd& grad_value,
                         const Eigen::MatrixXd& grad_dt);

struct AdamOptions {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

/// One bias-corrected Adam update over the concatenation [weights, raw_phys].
void adam_step(NetState& state, const Gradients& grads, AdamState& opt, const AdamOptions& options);

inline constexpr const char* kCheckpointFormat = "pinnverse-netstate/1";

nlohmann::json checkpoint_to_json(const NetState& state);
NetState checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const NetState& state, const std::string& path);
NetState load_checkpoint(const std::string& path);

}  // namespace pinnverse
