#pragma once

#include <optional>

#include "chaining_lab/losses.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// l1-penalized M-estimation by proximal gradient (ISTA with backtracking).
// One solver covers all loss families; nonconvex families get multi-start
// restarts drawn uniformly in the parameter box plus box projection.
// ---------------------------------------------------------------------------

/// Proximal map of kappa |.|: sign(v) max(|v| - kappa, 0).
inline double soft_threshold(double v, double kappa) {
  if (kappa < 0) throw std::invalid_argument("soft_threshold needs kappa >= 0");
  const double a = std::abs(v) - kappa;
  return a <= 0.0 ? 0.0 : (v > 0 ? a : -a);
}

struct SolverConfig {
  double lambda = 0.0;
  Index max_iterations = 100000;
  double grad_tolerance = 0.0;   // 0 = per-kind default
  double step0 = 1.0;
  double shrink = 0.5;
  Index restarts = 16;           // nonconvex kinds only
  std::uint64_t seed = 0;
  std::optional<Vec> penalty_mask;  // 1 = penalized; Staedler mask zeroes pi, sigma
};

struct Solution {
  Vec theta;
  double objective = 0.0;
  double kkt = std::numeric_limits<double>::quiet_NaN();  // convex kinds
  Index iterations = 0;
  Index restart_index = 0;
  Index projections = 0;
  bool converged = false;
};

inline bool is_convex_kind(const LossModel& model) {
  return model.kind == LossKind::Quadratic ||
         model.kind == LossKind::LipschitzGlm;
}

/// Mask excluding the mixture weights and scales from the penalty.
inline Vec staedler_mask(const LossModel& model) {
  Vec m = Vec::Ones(model.p);
  if (model.kind == LossKind::ExtendedGlmMixture && model.extras_in_theta)
    m.tail(2 * model.mix_r).setZero();
  return m;
}

/// P_n rho_theta + lambda ||theta||_1 (masked coordinates unpenalized).
inline double objective(const LossModel& model, const SampleSet& sample,
                        double lambda, const Vec& theta,
                        const std::optional<Vec>& mask = std::nullopt) {
  double pen = mask ? theta.cwiseAbs().dot(*mask) : l1_norm(theta);
  return mean_loss(model, theta, sample) + lambda * pen;
}

/// Distance of the smooth gradient to the l1 subdifferential at theta.
inline double kkt_residual(const LossModel& model, const SampleSet& sample,
                           double lambda, const Vec& theta,
                           const std::optional<Vec>& mask = std::nullopt) {
  Vec g = mean_loss_grad(model, theta, sample);
  double res = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    const double lj = (mask ? (*mask)[j] : 1.0) * lambda;
    double r;
    if (theta[j] == 0.0)
      r = std::max(0.0, std::abs(g[j]) - lj);
    else
      r = std::abs(g[j] + lj * (theta[j] > 0 ? 1.0 : -1.0));
    res = std::max(res, r);
  }
  return res;
}

namespace detail {

inline Solution ista_run(const LossModel& model, const SampleSet& sample,
                         const SolverConfig& cfg, Vec theta) {
  const bool convex = is_convex_kind(model);
  const double tol =
      cfg.grad_tolerance > 0 ? cfg.grad_tolerance : (convex ? 1e-8 : 1e-6);
  const std::optional<Vec>& mask = cfg.penalty_mask;
  Solution sol;
  theta = model.project(theta);
  double step = cfg.step0;
  double f = mean_loss(model, theta, sample);
  Index it = 0;
  for (; it < cfg.max_iterations; ++it) {
    Vec g = mean_loss_grad(model, theta, sample);
    // Backtracking on the quadratic upper model.
    Vec cand;
    double fc = 0.0;
    for (;;) {
      Vec z = theta - step * g;
      cand = z;
      for (Index j = 0; j < cand.size(); ++j) {
        const double lj = (mask ? (*mask)[j] : 1.0) * cfg.lambda;
        cand[j] = soft_threshold(z[j], step * lj);
      }
      Vec proj = model.project(cand);
      if ((proj - cand).cwiseAbs().maxCoeff() > 1e-14) ++sol.projections;
      cand = proj;
      fc = mean_loss(model, cand, sample);
      if (!std::isfinite(fc)) {
        step *= cfg.shrink;
        if (step < 1e-18)
          throw std::runtime_error("solver diverged: objective not finite");
        continue;
      }
      Vec d = cand - theta;
      const double quad = f + g.dot(d) + d.squaredNorm() / (2.0 * step);
      if (fc <= quad + 1e-15 * std::abs(quad)) break;
      step *= cfg.shrink;
      if (step < 1e-18) break;
    }
    const double move = (cand - theta).cwiseAbs().maxCoeff();
    theta = cand;
    f = fc;
    // Composite gradient mapping as the generic stop; KKT residual for
    // convex kinds where the subdifferential test is exact.
    if (convex) {
      const bool worth_checking =
          move / std::max(step, 1e-18) <= 10.0 * tol || it % 50 == 49;
      if (worth_checking &&
          kkt_residual(model, sample, cfg.lambda, theta, mask) <= tol) {
        sol.converged = true;
        ++it;
        break;
      }
    } else if (move / std::max(step, 1e-18) <= tol) {
      sol.converged = true;
      ++it;
      break;
    }
    step = std::min(step / cfg.shrink, 1e6);  // gentle step recovery
  }
  sol.theta = theta;
  sol.iterations = it;
  sol.objective = objective(model, sample, cfg.lambda, theta, mask);
  if (convex)
    sol.kkt = kkt_residual(model, sample, cfg.lambda, theta, mask);
  return sol;
}

}  // namespace detail

/// argmin P_n rho_theta + lambda ||theta||_1. Nonconvex kinds run
/// `restarts` proximal descents from box-uniform starts and keep the best.
inline Solution solve(const LossModel& model, const SampleSet& sample,
                      const SolverConfig& cfg,
                      const std::optional<Vec>& warm_start = std::nullopt) {
  if (cfg.lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (is_convex_kind(model)) {
    Vec start = warm_start ? *warm_start : Vec::Zero(model.p);
    return detail::ista_run(model, sample, cfg, std::move(start));
  }
  if (!model.box.bounded())
    throw std::invalid_argument("nonconvex solve needs a bounded box");
  const Index restarts = std::max<Index>(1, cfg.restarts);
  Solution best;
  bool have = false;
  for (Index r = 0; r < restarts; ++r) {
    Vec start;
    if (r == 0 && warm_start)
      start = *warm_start;
    else {
      Rng rng(derive_seed(cfg.seed, 41, static_cast<std::uint64_t>(r)));
      start = model.project(model.box.sample(rng));
    }
    Solution s = detail::ista_run(model, sample, cfg, std::move(start));
    s.restart_index = r;
    if (!have || s.objective < best.objective) {
      best = s;
      have = true;
    }
  }
  return best;
}

struct LambdaPath {
  std::vector<Solution> solutions;
  bool l1_nonincreasing = true;  // along descending lambda, convex kinds
};

/// Warm-started solutions along a descending lambda grid.
inline LambdaPath lambda_path(const LossModel& model, const SampleSet& sample,
                              const std::vector<double>& grid,
                              SolverConfig cfg) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] > grid[i - 1])
      throw std::invalid_argument("lambda grid must be sorted descending");
  LambdaPath path;
  std::optional<Vec> warm;
  double prev_l1 = -1.0;
  for (double lam : grid) {
    cfg.lambda = lam;
    Solution s = solve(model, sample, cfg, warm);
    warm = s.theta;
    // Nonincreasing in lambda means nondecreasing along the descending grid.
    const double l1 = l1_norm(s.theta);
    if (is_convex_kind(model) && prev_l1 >= 0 &&
        l1 < prev_l1 - 1e-7 * (1.0 + prev_l1))
      path.l1_nonincreasing = false;
    prev_l1 = l1;
    path.solutions.push_back(std::move(s));
  }
  return path;
}

}  // namespace chainlab
