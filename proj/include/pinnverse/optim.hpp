#pragma once

#include <Eigen/Dense>

#include <functional>

namespace pinnverse {

/// Objective: returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  int history = 20;
  long max_iterations = 1000;
  int max_line_search = 30;
  double armijo = 1e-4;
  /// Stop once the relative decrease over `window` iterations falls below this.
  double rel_tol = 1e-12;
  long window = 200;
};

struct LbfgsResult {
  double value = 0.0;
  long iterations = 0;
  long evaluations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking (Armijo) line search. Pairs that fail
/// the curvature condition are skipped so the inverse-Hessian estimate stays
/// positive definite. `x` is updated in place; non-finite trial points are
/// treated as line-search failures.
LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd& x, const LbfgsOptions& options,
                           const std::function<void(long, double)>& on_iteration = {});

}  // namespace pinnverse
