#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace planedepth {

struct LbfgsConfig {
  int max_iterations = 500;
  /// Stop once the gradient infinity norm falls below this.
  double grad_tol = 1e-8;
  int memory = 10;
  int max_line_search = 60;
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
  /// Also stop once an accepted step lowers f by at most
  /// f_tol * max(|f|, 1); gradients of large energies bottom out in
  /// round-off above any fixed grad_tol. 0 disables.
  double f_tol = 1e-13;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  /// f at the start point and after every accepted step.
  std::vector<double> history;
  std::string stop_reason;
};

/// Objective returning f(x) and writing the gradient into g.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

/// Limited-memory BFGS with backtracking line search. Accepted steps never
/// increase f.
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& config = {});

}  // namespace planedepth
