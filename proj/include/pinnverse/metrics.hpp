#pragma once

#include "pinnverse/lindblad.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace pinnverse {

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mean absolute percentage error as a fraction. Entries whose exact value is
/// 0 are excluded from the average; throws UndefinedMetric if nothing is left.
double mape(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted);

/// Number of entries mape() actually averages over.
int mape_support(const Eigen::VectorXd& exact);

/// Per-time absolute errors and their time average, one row per observable.
struct MetricSet {
  Eigen::MatrixXd ae;
  Eigen::VectorXd mae;
};

MetricSet ae_mae(const Trajectory& experiment, const Trajectory& model);

/// Trajectory-reconstruction error: sum |ref - model| / sum |ref| over all
/// observables and times. Stays finite when individual values cross zero.
double reconstruction_mape(const Trajectory& reference, const Trajectory& model);

}  // namespace pinnverse
