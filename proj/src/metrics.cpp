#include "pinnverse/metrics.hpp"

#include <cmath>

namespace pinnverse {

double mape(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted) {
  if (exact.size() != predicted.size()) throw std::invalid_argument("mape: length mismatch");
  double sum = 0.0;
  int d = 0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    if (exact[i] == 0.0) continue;
    sum += std::abs(exact[i] - predicted[i]) / std::abs(exact[i]);
    ++d;
  }
  if (d == 0) throw UndefinedMetric("mape: every exact value is zero");
  return sum / d;
}

int mape_support(const Eigen::VectorXd& exact) {
  return static_cast<int>((exact.array() != 0.0).count());
}

MetricSet ae_mae(const Trajectory& experiment, const Trajectory& model) {
  if (experiment.times.size() != model.times.size() || experiment.values.rows() != model.values.rows() ||
      experiment.values.cols() != model.values.cols()) {
    throw std::invalid_argument("ae_mae: trajectories have different shapes");
  }
  if ((experiment.times - model.times).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + experiment.times.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("ae_mae: time grids are not aligned");
  }
  MetricSet m;
  m.ae = (experiment.values - model.values).cwiseAbs();
  m.mae = m.ae.rowwise().mean();
  return m;
}

double reconstruction_mape(const Trajectory& reference, const Trajectory& model) {
  if (reference.values.rows() != model.values.rows() || reference.values.cols() != model.values.cols()) {
    throw std::invalid_argument("reconstruction_mape: trajectories have different shapes");
  }
  const double denom = reference.values.cwiseAbs().sum();
  if (denom == 0.0) throw UndefinedMetric("reconstruction_mape: reference trajectory is identically zero");
  return (reference.values - model.values).cwiseAbs().sum() / denom;
}

}  // namespace pinnverse
