#include "pinnverse/optim.hpp"

#include <cmath>
#include <deque>

namespace pinnverse {

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd& x, const LbfgsOptions& options,
                           const std::function<void(long, double)>& on_iteration) {
  LbfgsResult res;
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  ++res.evaluations;
  res.value = fx;
  if (!std::isfinite(fx)) return res;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd x_new(x.size()), g_new(x.size());
  std::vector<double> alpha(static_cast<std::size_t>(options.history));
  double window_start = fx;

  for (long it = 0; it < options.max_iterations; ++it) {
    // two-loop recursion
    Eigen::VectorXd d = -g;
    const int m = static_cast<int>(s_hist.size());
    for (int i = m - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] = rho_hist[static_cast<std::size_t>(i)] * s_hist[static_cast<std::size_t>(i)].dot(d);
      d -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (m > 0) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)].dot(d);
      d += (alpha[static_cast<std::size_t>(i)] - beta) * s_hist[static_cast<std::size_t>(i)];
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // lost descent: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope = -g.squaredNorm();
      if (slope == 0.0) {
        res.converged = true;
        break;
      }
    }

    double step = m == 0 ? std::min(1.0, 1.0 / std::sqrt(g.squaredNorm())) : 1.0;
    bool accepted = false;
    double f_new = fx;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = x + step * d;
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    res.value = fx;
    res.iterations = it + 1;
    if (on_iteration) on_iteration(it + 1, fx);

    if ((it + 1) % options.window == 0) {
      if (window_start - fx <= options.rel_tol * std::abs(window_start)) {
        res.converged = true;
        break;
      }
      window_start = fx;
    }
  }
  return res;
}

}  // namespace pinnverse
