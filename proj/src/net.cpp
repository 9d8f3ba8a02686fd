#include "pinnverse/net.hpp"

#include "pinnverse/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace pinnverse {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t layer_size(const LayerShape& s) {
  return static_cast<std::size_t>(s.out) * static_cast<std::size_t>(s.in + 1);
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sin") return Activation::Sin;
  throw UnsupportedPrimitive("activation '" + name + "' is not supported (need a smooth activation: tanh or sin)");
}

std::string activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "sin"; }

std::size_t NetState::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layer_size(layers[l]);
  return off;
}

NetState init(const NetConfig& config, Eigen::VectorXd raw_phys) {
  if (config.input_dim != 1) throw std::invalid_argument("init: the trajectory network takes a single time input");
  if (config.output_dim < 1) throw std::invalid_argument("init: output_dim must be positive");
  NetState state;
  state.activation = config.activation;
  int fan_in = config.input_dim;
  for (int w : config.hidden_layers) {
    if (w < 1) throw std::invalid_argument("init: hidden widths must be positive");
    state.layers.push_back({fan_in, w});
    fan_in = w;
  }
  state.layers.push_back({fan_in, config.output_dim});

  std::size_t total = 0;
  for (const auto& s : state.layers) total += layer_size(s);
  state.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));

  Rng rng = make_rng(config.seed);
  std::size_t off = 0;
  for (const auto& s : state.layers) {
    const double limit = std::sqrt(6.0 / (s.in + s.out)) * (off == 0 ? config.input_scale : 1.0);
    for (int k = 0; k < s.out * s.in; ++k) state.weights[static_cast<Eigen::Index>(off + k)] = uniform(rng, -limit, limit);
    off += layer_size(s);  // biases start at zero
  }
  state.raw_phys = std::move(raw_phys);
  return state;
}

ForwardTape forward(const NetState& state, std::span<const double> t) {
  const int batch = static_cast<int>(t.size());
  const std::size_t n_layers = state.layers.size();
  ForwardTape tape;
  tape.batch = batch;
  tape.inputs.resize(n_layers);
  tape.slope.resize(n_layers - 1);
  tape.curvature.resize(n_layers - 1);

  Eigen::MatrixXd a(1, 2 * batch);
  for (int c = 0; c < batch; ++c) {
    a(0, c) = t[static_cast<std::size_t>(c)];
    a(0, batch + c) = 1.0;
  }

  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerShape& s = state.layers[l];
    const RowMajorMap w(state.weights.data() + off, s.out, s.in);
    const Eigen::Map<const Eigen::VectorXd> bias(state.weights.data() + off + static_cast<std::size_t>(s.out * s.in), s.out);
    off += layer_size(s);

    tape.inputs[l] = std::move(a);
    Eigen::MatrixXd z(s.out, 2 * batch);
    z.noalias() = w * tape.inputs[l];
    z.leftCols(batch).colwise() += bias;

    if (l + 1 == n_layers) {
      tape.value = z.leftCols(batch);
      tape.dt = z.rightCols(batch);
      break;
    }

    Eigen::MatrixXd next(s.out, 2 * batch);
    auto zv = z.leftCols(batch).array();
    auto dz = z.rightCols(batch).array();
    if (state.activation == Activation::Tanh) {
      next.leftCols(batch).array() = zv.tanh();
      const auto h = next.leftCols(batch).array();
      tape.slope[l] = (1.0 - h.square()).matrix();
      tape.curvature[l] = (-2.0 * h * tape.slope[l].array() * dz).matrix();
    } else {
      next.leftCols(batch).array() = zv.sin();
      tape.slope[l] = zv.cos().matrix();
      tape.curvature[l] = (-next.leftCols(batch).array() * dz).matrix();
    }
    next.rightCols(batch).array() = tape.slope[l].array() * dz;
    a = std::move(next);
  }
  return tape;
}

DualOutput forward_with_dt(const NetState& state, double t) {
  const double ts[1] = {t};
  ForwardTape tape = forward(state, ts);
  return {tape.value.col(0), tape.dt.col(0)};
}

Eigen::VectorXd backward(const NetState& state, const ForwardTape& tape, const Eigen::MatrixXd& grad_value,
                         const Eigen::MatrixXd& grad_dt) {
  const int batch = tape.batch;
  if (grad_value.rows() != state.output_dim() || grad_value.cols() != batch || grad_dt.rows() != grad_value.rows() ||
      grad_dt.cols() != batch) {
    throw UnsupportedPrimitive("backward: upstream gradient shape does not match the forward tape");
  }
  if (tape.inputs.size() != state.layers.size()) throw UnsupportedPrimitive("backward: tape built for another network");

  Eigen::VectorXd grads = Eigen::VectorXd::Zero(state.weights.size());
  // g holds [dL/dz | dL/d(dz)] for the current layer
  Eigen::MatrixXd g(state.output_dim(), 2 * batch);
  g.leftCols(batch) = grad_value;
  g.rightCols(batch) = grad_dt;

  for (std::size_t l = state.layers.size(); l-- > 0;) {
    const LayerShape& s = state.layers[l];
    const std::size_t off = state.weight_offset(l);
    const RowMajorMap w(state.weights.data() + off, s.out, s.in);
    RowMajorMutMap gw(grads.data() + off, s.out, s.in);
    Eigen::Map<Eigen::VectorXd> gb(grads.data() + off + static_cast<std::size_t>(s.out * s.in), s.out);

    gw.noalias() = g * tape.inputs[l].transpose();
    gb = g.leftCols(batch).rowwise().sum();
    if (l == 0) break;

    Eigen::MatrixXd ga(s.in, 2 * batch);
    ga.noalias() = w.transpose() * g;
    // through h = act(z), dh = act'(z) dz
    const auto& slope = tape.slope[l - 1].array();
    const auto& curv = tape.curvature[l - 1].array();
    Eigen::MatrixXd gz(s.in, 2 * batch);
    gz.leftCols(batch).array() = ga.leftCols(batch).array() * slope + ga.rightCols(batch).array() * curv;
    gz.rightCols(batch).array() = ga.rightCols(batch).array() * slope;
    g = std::move(gz);
  }
  return grads;
}

void adam_step(NetState& state, const Gradients& grads, AdamState& opt, const AdamOptions& options) {
  const Eigen::Index nw = state.weights.size();
  const Eigen::Index np = state.raw_phys.size();
  if (grads.weights.size() != nw || grads.raw_phys.size() != np) {
    throw std::invalid_argument("adam_step: gradient shape does not match the state");
  }
  if (opt.m.size() == 0) {
    opt.m = Eigen::VectorXd::Zero(nw + np);
    opt.v = Eigen::VectorXd::Zero(nw + np);
  }
  if (opt.m.size() != nw + np) throw std::invalid_argument("adam_step: optimizer state shape mismatch");

  ++opt.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(opt.step));
  auto update = [&](Eigen::Ref<Eigen::VectorXd> param, const Eigen::VectorXd& g, Eigen::Index base) {
    auto m = opt.m.segment(base, g.size());
    auto v = opt.v.segment(base, g.size());
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseAbs2();
    param.array() -= options.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options.eps);
  };
  update(state.weights, grads.weights, 0);
  if (np > 0) update(state.raw_phys, grads.raw_phys, nw);
}

nlohmann::json checkpoint_to_json(const NetState& state) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["activation"] = activation_name(state.activation);
  j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    const LayerShape& s = state.layers[l];
    const std::size_t off = state.weight_offset(l);
    const double* p = state.weights.data() + off;
    const std::size_t nw = static_cast<std::size_t>(s.out * s.in);
    j["layers"].push_back({{"in", s.in},
                           {"out", s.out},
                           {"weights", std::vector<double>(p, p + nw)},
                           {"bias", std::vector<double>(p + nw, p + nw + static_cast<std::size_t>(s.out))}});
  }
  j["raw_phys"] = std::vector<double>(state.raw_phys.data(), state.raw_phys.data() + state.raw_phys.size());
  return j;
}

NetState checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kCheckpointFormat) {
    throw std::invalid_argument("checkpoint: unsupported format tag '" + j.value("format", "") + "'");
  }
  NetState state;
  state.activation = parse_activation(j.at("activation").get<std::string>());
  std::vector<double> flat;
  for (const auto& layer : j.at("layers")) {
    const LayerShape s{layer.at("in").get<int>(), layer.at("out").get<int>()};
    const auto w = layer.at("weights").get<std::vector<double>>();
    const auto b = layer.at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(s.in * s.out) || b.size() != static_cast<std::size_t>(s.out)) {
      throw std::invalid_argument("checkpoint: layer array size does not match its shape");
    }
    if (!state.layers.empty() && state.layers.back().out != s.in) {
      throw std::invalid_argument("checkpoint: consecutive layer shapes do not chain");
    }
    state.layers.push_back(s);
    flat.insert(flat.end(), w.begin(), w.end());
    flat.insert(flat.end(), b.begin(), b.end());
  }
  if (state.layers.empty()) throw std::invalid_argument("checkpoint: no layers");
  state.weights = Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  const auto raw = j.at("raw_phys").get<std::vector<double>>();
  state.raw_phys = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  return state;
}

void save_checkpoint(const NetState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(state).dump(1) << '\n';
}

NetState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace pinnverse
