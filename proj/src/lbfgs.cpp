#include "planedepth/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "planedepth/error.hpp"

namespace planedepth {

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& config) {
  if (config.memory < 1 || config.max_iterations < 0 || config.max_line_search < 1 || !(config.f_tol >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "L-BFGS: invalid configuration");
  }
  LbfgsResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.f = objective(r.x, g);
  if (!std::isfinite(r.f) || !g.allFinite()) throw Error(ErrorKind::NonFinite, "L-BFGS: non-finite objective at start");
  r.history.push_back(r.f);

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  Eigen::VectorXd x_new(r.x.size()), g_new(r.x.size()), d(r.x.size());
  std::vector<double> a(config.memory);

  for (;;) {
    if (r.x.size() == 0 || g.lpNorm<Eigen::Infinity>() < config.grad_tol) {
      r.converged = true;
      r.stop_reason = "gradient tolerance reached";
      return r;
    }
    if (r.iterations >= config.max_iterations) {
      r.stop_reason = "iteration limit reached";
      return r;
    }

    // Two-loop recursion.
    d = -g;
    const int m = static_cast<int>(S.size());
    for (int k = m - 1; k >= 0; --k) {
      a[k] = rho[k] * S[k].dot(d);
      d -= a[k] * Y[k];
    }
    if (m > 0) d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (int k = 0; k < m; ++k) {
      const double b = rho[k] * Y[k].dot(d);
      d += (a[k] - b) * S[k];
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    if (S.empty()) step = std::min(1.0, 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300));
    bool accepted = false;
    double f_new = r.f;
    for (int ls = 0; ls < config.max_line_search; ++ls) {
      x_new = r.x + step * d;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.f + config.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || f_new > r.f) {
      r.stop_reason = "line search could not decrease the objective";
      return r;
    }

    const double decrease = r.f - f_new;
    Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    r.x.swap(x_new);
    g.swap(g_new);
    r.f = f_new;
    ++r.iterations;
    r.history.push_back(r.f);
    if (sy > 1e-300) {
      if (static_cast<int>(S.size()) == config.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    if (decrease <= config.f_tol * std::max(std::abs(r.f), 1.0)) {
      r.converged = true;
      r.stop_reason = "relative decrease below f_tol";
      return r;
    }
  }
}

}  // namespace planedepth
