#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace bevsim {

struct LbfgsOptions {
  int max_steps = 20;
  double threshold = 0.0;   // stop once the loss drops below this
  int history = 10;         // limited-memory pair count
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 40;
  // Cap on the first trial step's infinity norm. Unbounded quasi-Newton
  // trials can jump reparameterized variables (log-mass, logit-restitution)
  // into flat boundary regions they cannot leave.
  double max_step_norm = 1.0;
};

struct LbfgsResult {
  std::vector<double> best_x;
  double best_loss = 0.0;
  std::vector<double> trace;  // best-so-far loss per accepted iterate
  int iterations = 0;
  int evaluations = 0;
  bool reached_threshold = false;
  int line_search_failures = 0;
};

/// Objective returns (loss, gradient) at a point.
using Objective = std::function<std::pair<double, std::vector<double>>(
    const std::vector<double>&)>;

/// Limited-memory BFGS (two-loop recursion) with Armijo backtracking.
/// Stops at max_steps or once the loss falls below the threshold; always
/// returns the best iterate seen. A failed line search falls back to one
/// steepest-descent step with the last accepted step length. Throws
/// NonFiniteObjective when no finite progress is possible.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace bevsim
