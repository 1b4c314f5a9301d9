#include "bevsim/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "bevsim/errors.hpp"

namespace bevsim {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

bool finite(double x) { return std::isfinite(x); }

bool finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x,
                           const LbfgsOptions& opt) {
  const std::size_t n = x.size();
  LbfgsResult result;

  auto [f, g] = objective(x);
  ++result.evaluations;
  if (!finite(f) || !finite(g)) throw NonFiniteObjective();

  result.best_x = x;
  result.best_loss = f;
  result.trace.push_back(f);
  if (f < opt.threshold) {
    result.reached_threshold = true;
    return result;
  }

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  double last_accepted_step = opt.initial_step;

  for (int iter = 0; iter < opt.max_steps; ++iter) {
    // Two-loop recursion for d = -H·g.
    std::vector<double> q = g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      const double yy = dot(y_hist.back(), y_hist.back());
      if (yy > 0.0) gamma = dot(s_hist.back(), y_hist.back()) / yy;
    }
    for (auto& qi : q) qi *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += (alpha[k] - beta) * s_hist[k][i];
    }
    std::vector<double> direction(n);
    for (std::size_t i = 0; i < n; ++i) direction[i] = -q[i];

    double slope = dot(g, direction);
    if (!(slope < 0.0)) {
      // Not a descent direction (stale curvature); drop to steepest descent.
      for (std::size_t i = 0; i < n; ++i) direction[i] = -g[i];
      slope = dot(g, direction);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }

    // Armijo backtracking, with the first trial capped in infinity norm.
    double step = opt.initial_step;
    if (opt.max_step_norm > 0.0) {
      double dmax = 0.0;
      for (double di : direction) dmax = std::max(dmax, std::abs(di));
      if (dmax * step > opt.max_step_norm) step = opt.max_step_norm / dmax;
    }
    double f_new = f;
    std::vector<double> x_new, g_new;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_new = x;
      for (std::size_t i = 0; i < n; ++i) x_new[i] += step * direction[i];
      auto [ft, gt] = objective(x_new);
      ++result.evaluations;
      if (finite(ft) && finite(gt) && ft <= f + opt.armijo_c * step * slope) {
        f_new = ft;
        g_new = std::move(gt);
        accepted = true;
        break;
      }
      step *= opt.shrink;
    }

    if (!accepted) {
      // Fallback: one steepest-descent step with the last accepted length.
      ++result.line_search_failures;
      x_new = x;
      for (std::size_t i = 0; i < n; ++i) x_new[i] -= last_accepted_step * g[i];
      auto [ft, gt] = objective(x_new);
      ++result.evaluations;
      if (!finite(ft) || !finite(gt)) throw NonFiniteObjective();
      f_new = ft;
      g_new = std::move(gt);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    } else {
      last_accepted_step = step;
      std::vector<double> s(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = x_new[i] - x[i];
        y[i] = g_new[i] - g[i];
      }
      const double sy = dot(s, y);
      if (sy > 1e-12) {  // curvature safeguard
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (static_cast<int>(s_hist.size()) > opt.history) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
    }

    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    ++result.iterations;
    if (f < result.best_loss) {
      result.best_loss = f;
      result.best_x = x;
    }
    result.trace.push_back(result.best_loss);
    if (result.best_loss < opt.threshold) {
      result.reached_threshold = true;
      break;
    }
  }
  return result;
}

}  // namespace bevsim
