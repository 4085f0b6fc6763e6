#pragma once

#include "chaining_lab/emp_process.hpp"
#include "chaining_lab/solver.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Margin condition machinery, convex conjugates, effective sparsity, the
// oracle-inequality bound formulas, and the end-to-end experiment.
// ---------------------------------------------------------------------------

// --- convex conjugate -------------------------------------------------------

/// Margin function G: strictly convex, G(0) = 0, G >= 0.
struct GSpec {
  enum class Kind { Quadratic, Tabulated };
  Kind kind = Kind::Quadratic;
  double c = 1.0;                  // G(u) = c u^2
  std::vector<double> us, Gs;      // tabulated knots, us[0] = 0, Gs[0] = 0

  static GSpec quadratic(double c) {
    GSpec g;
    g.kind = Kind::Quadratic;
    g.c = c;
    return g;
  }
  static GSpec tabulated(std::vector<double> us, std::vector<double> Gs) {
    GSpec g;
    g.kind = Kind::Tabulated;
    g.us = std::move(us);
    g.Gs = std::move(Gs);
    if (g.us.size() != g.Gs.size() || g.us.size() < 2 || g.us[0] != 0.0 ||
        g.Gs[0] != 0.0)
      throw std::invalid_argument("tabulated G needs knots from (0, 0)");
    return g;
  }

  double eval(double u) const {
    if (u < 0) throw std::invalid_argument("G is defined on u >= 0");
    if (kind == Kind::Quadratic) return c * u * u;
    // linear interpolation; beyond the grid continue with the last slope
    if (u >= us.back()) {
      const std::size_t k = us.size() - 1;
      const double slope = (Gs[k] - Gs[k - 1]) / (us[k] - us[k - 1]);
      return Gs[k] + slope * (u - us.back());
    }
    const auto it = std::upper_bound(us.begin(), us.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - us.begin());
    const double w = (u - us[k - 1]) / (us[k] - us[k - 1]);
    return Gs[k - 1] + w * (Gs[k] - Gs[k - 1]);
  }
};

/// Exact conjugate of G(u) = c u^2.
inline double conjugate_quadratic_exact(double c, double v) {
  if (c <= 0) throw std::invalid_argument("quadratic G needs c > 0");
  return v * v / (4.0 * c);
}

/// H(v) = sup_{u >= 0} { u v - G(u) } by bracketing plus golden-section
/// refinement. Throws when the supremum is unbounded (G sublinear at v).
inline double convex_conjugate(const GSpec& g, double v) {
  if (v < 0) throw std::invalid_argument("conjugate is defined on v >= 0");
  if (v == 0.0) return 0.0;
  auto phi = [&](double u) { return u * v - g.eval(u); };

  double best = 0.0;  // u = 0 endpoint
  if (g.kind == GSpec::Kind::Tabulated) {
    for (std::size_t k = 0; k < g.us.size(); ++k)
      best = std::max(best, phi(g.us[k]));
  }
  // expand the bracket until the objective turns over
  double hi = 1.0;
  while (phi(hi) >= phi(hi * 0.5)) {
    hi *= 2.0;
    if (hi > 1e12)
      throw std::invalid_argument("conjugate unbounded: G grows sublinearly");
  }
  double lo = 0.0;
  const double gr = 0.6180339887498949;
  double a = hi - gr * hi, b = gr * hi;
  double fa = phi(a), fb = phi(b);
  for (int it = 0; it < 200; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = phi(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = phi(a);
    }
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return std::max(best, std::max(fa, fb));
}

// --- effective sparsity -----------------------------------------------------

/// Norm tau on R^p: plain l2, weighted l2 via a matrix, or the design norm.
struct TauSpec {
  enum class Kind { L2, Weighted, DesignNorm };
  Kind kind = Kind::L2;
  Mat A;  // Weighted: tau = ||A theta||_2 ; DesignNorm: tau = ||A theta||_n

  static TauSpec l2() { return TauSpec{}; }
  static TauSpec weighted(Mat A) {
    TauSpec t;
    t.kind = Kind::Weighted;
    t.A = std::move(A);
    return t;
  }
  static TauSpec design(Mat Z) {
    TauSpec t;
    t.kind = Kind::DesignNorm;
    t.A = std::move(Z);
    return t;
  }

  double operator()(const Vec& theta) const {
    switch (kind) {
      case Kind::L2: return theta.norm();
      case Kind::Weighted: return (A * theta).norm();
      case Kind::DesignNorm: return norm_n(A * theta);
    }
    throw std::logic_error("unreachable");
  }
  double sq(const Vec& theta) const {
    const double t = (*this)(theta);
    return t * t;
  }
  Vec grad_sq(const Vec& theta) const {
    switch (kind) {
      case Kind::L2: return 2.0 * theta;
      case Kind::Weighted: return 2.0 * (A.transpose() * (A * theta));
      case Kind::DesignNorm:
        return 2.0 * (A.transpose() * (A * theta)) /
               static_cast<double>(A.rows());
    }
    throw std::logic_error("unreachable");
  }
  /// Lipschitz constant of grad_sq (power iteration on the quadratic form).
  double lipschitz(Index p) const {
    if (kind == Kind::L2) return 2.0;
    Vec x = Vec::Ones(p).normalized();
    double lam = 1.0;
    for (int it = 0; it < 100; ++it) {
      Vec y = grad_sq(x);
      lam = y.norm() / 2.0;
      if (lam == 0.0) return 2e-12;
      x = y.normalized();
    }
    return 2.0 * lam + 1e-12;
  }
};

struct EffectiveSparsity {
  double delta = 0.0;
  double Gamma = 0.0;   // 1 / delta; infinity when delta vanishes
  double phi2 = 0.0;    // |S| delta^2
  bool converged = true;
};

namespace detail {

/// min tau(theta)^2 over { sign-fixed theta_S with ||theta_S||_1 = 1,
/// ||theta_{S^c}||_1 <= L } by projected FISTA with adaptive restart.
inline double min_tau_sq_pattern(const TauSpec& tau, double L,
                                 const std::vector<Index>& S,
                                 const std::vector<int>& signs, Index p,
                                 Index max_iterations, bool* converged) {
  std::vector<bool> in_S(static_cast<std::size_t>(p), false);
  for (Index j : S) in_S[static_cast<std::size_t>(j)] = true;
  std::vector<Index> Sc;
  for (Index j = 0; j < p; ++j)
    if (!in_S[static_cast<std::size_t>(j)]) Sc.push_back(j);

  auto project = [&](Vec theta) {
    Vec xs(S.size());
    for (std::size_t k = 0; k < S.size(); ++k)
      xs[static_cast<Index>(k)] = signs[k] * theta[S[k]];
    xs = project_simplex(xs, 1.0);
    for (std::size_t k = 0; k < S.size(); ++k)
      theta[S[k]] = signs[k] * xs[static_cast<Index>(k)];
    if (!Sc.empty()) {
      Vec ys(static_cast<Index>(Sc.size()));
      for (std::size_t k = 0; k < Sc.size(); ++k)
        ys[static_cast<Index>(k)] = theta[Sc[k]];
      ys = project_l1_ball(ys, L);
      for (std::size_t k = 0; k < Sc.size(); ++k) theta[Sc[k]] = ys[static_cast<Index>(k)];
    }
    return theta;
  };

  Vec x = Vec::Zero(p);
  for (std::size_t k = 0; k < S.size(); ++k)
    x[S[k]] = signs[k] / static_cast<double>(S.size());
  x = project(x);
  const double step = 1.0 / tau.lipschitz(p);
  Vec y = x;
  double t = 1.0;
  double fx = tau.sq(x);
  double best = fx;
  Index it = 0;
  for (; it < max_iterations; ++it) {
    Vec xn = project(y - step * tau.grad_sq(y));
    double fn = tau.sq(xn);
    if (fn > fx + 1e-16) {  // adaptive restart from the last iterate
      y = x;
      t = 1.0;
      xn = project(y - step * tau.grad_sq(y));
      fn = tau.sq(xn);
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    t = tn;
    fx = fn;
    best = std::min(best, fx);
    if (it % 25 == 24) {
      // gradient-mapping stationarity on the constrained problem
      const double gm =
          (x - project(x - step * tau.grad_sq(x))).norm() / step;
      if (gm <= 1e-9 * (1.0 + std::abs(fx) / step)) break;
    }
  }
  if (it >= max_iterations && converged) *converged = false;
  return best;
}

}  // namespace detail

/// delta(L, S) = min { tau(theta) : ||theta_S||_1 = 1, ||theta_{S^c}||_1 <= L }
/// by sign-pattern enumeration over S (each pattern a convex subproblem).
inline EffectiveSparsity effective_sparsity(const TauSpec& tau, double L,
                                            const std::vector<Index>& S,
                                            Index p,
                                            Index max_iterations = 20000) {
  if (L < 0) throw std::invalid_argument("effective sparsity needs L >= 0");
  if (S.empty()) throw std::invalid_argument("S must be nonempty");
  if (S.size() > 12)
    throw std::invalid_argument("sign enumeration refused for |S| > 12");
  for (Index j : S)
    if (j < 0 || j >= p) throw std::invalid_argument("S index out of range");

  EffectiveSparsity out;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t s = S.size();
  // tau(-theta) = tau(theta): fix the first sign to +1.
  const std::size_t patterns = s == 1 ? 1 : (std::size_t{1} << (s - 1));
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    std::vector<int> signs(s, 1);
    for (std::size_t k = 1; k < s; ++k)
      signs[k] = (mask >> (k - 1)) & 1 ? -1 : 1;
    best = std::min(best, detail::min_tau_sq_pattern(tau, L, S, signs, p,
                                                     max_iterations,
                                                     &out.converged));
  }
  out.delta = std::sqrt(std::max(best, 0.0));
  out.Gamma = out.delta > 1e-9 ? 1.0 / out.delta
                               : std::numeric_limits<double>::infinity();
  out.phi2 = static_cast<double>(s) * out.delta * out.delta;
  return out;
}

// --- excess risk and the margin condition -----------------------------------

struct ExcessRisk {
  double value = 0.0;
  double std_error = 0.0;
  bool flagged = false;  // MC standard error above 1% of the value
};

/// Closed form for quadratic loss with fixed design: || Z (theta-theta0) ||_n^2.
inline ExcessRisk excess_risk_quadratic(const Mat& Z, const Vec& theta,
                                        const Vec& theta0) {
  ExcessRisk e;
  const double t = norm_n(Z * (theta - theta0));
  e.value = t * t;
  return e;
}

/// Monte Carlo excess risk P(rho_theta - rho_theta0) under fresh samples
/// from `make_sample`; `total_draws` counts individual observations.
inline ExcessRisk excess_risk_mc(
    const LossModel& model,
    const std::function<SampleSet(std::uint64_t)>& make_sample,
    const Vec& theta, const Vec& theta0, Index total_draws = 1000000,
    std::uint64_t seed = 0) {
  SampleSet probe = make_sample(derive_seed(seed, 131, 0));
  const Index n = probe.n();
  const Index B = std::max<Index>(2, (total_draws + n - 1) / n);
  std::vector<double> diffs(static_cast<std::size_t>(B));
  for (Index b = 0; b < B; ++b) {
    SampleSet s = make_sample(derive_seed(seed, 137, static_cast<std::uint64_t>(b)));
    diffs[static_cast<std::size_t>(b)] =
        mean_loss(model, theta, s) - mean_loss(model, theta0, s);
  }
  MeanSe ms = mean_se(diffs);
  ExcessRisk e;
  e.value = ms.mean;
  e.std_error = ms.se;
  e.flagged = ms.se > 0.01 * std::abs(ms.mean) && ms.mean != 0.0;
  return e;
}

struct MarginFit {
  double c = 0.0;
  bool failed = false;
  Vec witness;  // probe where the excess/τ^2 ratio was nonpositive
};

/// Largest c with E(theta; theta0) >= c tau(theta - theta0)^2 over sampled
/// probes in the l1 ball of the given radius; fits G(u) = c u^2.
inline MarginFit margin_fit(const std::function<double(const Vec&)>& excess,
                            const Vec& theta0, const TauSpec& tau,
                            double ball_radius, Index probes,
                            std::uint64_t seed) {
  MarginFit fit;
  fit.c = std::numeric_limits<double>::infinity();
  Rng rng(derive_seed(seed, 139, 0));
  for (Index k = 0; k < probes; ++k) {
    Vec delta = detail::sample_l1_ball(rng, theta0.size(), ball_radius);
    const double t = tau(delta);
    if (t <= 1e-12) continue;
    const double ratio = excess(theta0 + delta) / (t * t);
    if (ratio <= 0.0) {
      fit.failed = true;
      fit.witness = theta0 + delta;
      fit.c = 0.0;
      return fit;
    }
    fit.c = std::min(fit.c, ratio);
  }
  if (!std::isfinite(fit.c)) fit.c = 0.0;
  return fit;
}

// --- oracle bound formulas ---------------------------------------------------

struct Theorem1Bounds {
  double rhs1 = 0.0;     // H(2 lambda Gamma(L,S0)/delta) v 2 lambda^2
  double rhs2 = 0.0;     // 2 delta H(4(1+delta) lambda Gamma(L_d,S*)/delta^2) v 2 lambda^2 + (1+delta) E*
  double L = 0.0;
  double L_delta = 0.0;
};

inline void check_oracle_params(double lambda, double lambda0, double delta) {
  if (!(lambda > lambda0) || !(lambda0 > 0))
    throw std::invalid_argument("need lambda > lambda0 > 0");
  if (!(delta > 0) || !(delta < 1))
    throw std::invalid_argument("need 0 < delta < 1");
}

inline Theorem1Bounds theorem1_bounds(
    double lambda, double lambda0, double delta, double Gamma_L_S0,
    double Gamma_Ld_Sstar, const std::function<double(double)>& H,
    double excess_star) {
  check_oracle_params(lambda, lambda0, delta);
  Theorem1Bounds b;
  b.L = (lambda + lambda0) / (lambda - lambda0);
  b.L_delta = 2.0 * (1.0 + delta) / delta * b.L;
  b.rhs1 = std::max(H(2.0 * lambda * Gamma_L_S0 / delta),
                    2.0 * lambda * lambda);
  b.rhs2 = std::max(2.0 * delta *
                        H(4.0 * (1.0 + delta) * lambda * Gamma_Ld_Sstar /
                          (delta * delta)),
                    2.0 * lambda * lambda) +
           (1.0 + delta) * excess_star;
  return b;
}

struct Theorem2M {
  double M0 = 0.0;
  double Mstar = 0.0;
};

inline Theorem2M theorem2_M(double lambda, double lambda0, double delta,
                            double Gamma_L_S0, double Gamma_Ld_Sstar,
                            const std::function<double(double)>& H,
                            double excess_star) {
  check_oracle_params(lambda, lambda0, delta);
  Theorem2M m;
  m.M0 = delta / (lambda - lambda0) *
         std::max(H(2.0 * lambda * Gamma_L_S0 / delta), 2.0 * lambda * lambda);
  m.Mstar = 1.0 / (lambda - lambda0) *
            (std::max(2.0 * delta *
                          H(4.0 * (1.0 + delta) * lambda * Gamma_Ld_Sstar /
                            (delta * delta)),
                      2.0 * lambda * lambda) +
             (1.0 + delta) * excess_star);
  return m;
}

// --- the event T -------------------------------------------------------------

struct EventTResult {
  double frequency = 0.0;
  bool upper_estimate = false;  // search lower-estimates propagate here
};

/// Frequency over fresh samples of
/// sup_{Theta_M(theta*)} |Y(theta, theta*)| / (||theta-theta*||_1 v lambda0)
/// <= lambda0. Exact via the dual norm for linear processes; a geometric
/// shell grid of radii with the vertex+ascent search otherwise.
inline EventTResult event_T_frequency(
    const std::function<ProcessModel(std::uint64_t)>& make_process,
    const Vec& theta_star, double lambda0, double M, Index reps,
    std::uint64_t seed, Index shells = 16, const SearchOptions& opts = {}) {
  if (reps < 1) throw std::invalid_argument("need reps >= 1");
  EventTResult out;
  Index hold = 0;
  for (Index r = 0; r < reps; ++r) {
    ProcessModel proc = make_process(derive_seed(seed, 149, static_cast<std::uint64_t>(r)));
    double stat;
    if (proc.is_linear()) {
      Vec v = proc.weights().colwise().mean();
      stat = linf_norm(v);
    } else {
      // shells M_k = e^{-k} M; the ratio on each shell is bounded by the
      // supremum at its outer radius over the inner radius (or lambda0).
      stat = 0.0;
      Vec ones = Vec::Ones(proc.n());
      double Mk = M;
      for (Index k = 0; k < shells; ++k) {
        BallSpec ball;
        ball.theta_star = theta_star;
        ball.M = Mk;
        SearchOptions o = opts;
        o.seed = derive_seed(seed, 151, static_cast<std::uint64_t>(r * 1000 + k));
        SupResult sup = symmetrized_sup_once(proc, ball, ones, o);
        if (!sup.exact) out.upper_estimate = true;
        const double inner = std::max(Mk / std::exp(1.0), lambda0);
        stat = std::max(stat, sup.value / inner);
        Mk /= std::exp(1.0);
        if (Mk < lambda0) {
          ball.M = lambda0;
          o.seed = derive_seed(seed, 151, static_cast<std::uint64_t>(r * 1000 + 999));
          SupResult inner_sup = symmetrized_sup_once(proc, ball, ones, o);
          stat = std::max(stat, inner_sup.value / lambda0);
          break;
        }
      }
    }
    if (stat <= lambda0) ++hold;
  }
  out.frequency = static_cast<double>(hold) / static_cast<double>(reps);
  return out;
}

// --- best sparse approximation -----------------------------------------------

struct SparseApproxResult {
  Index index = -1;
  Vec theta;
  double score = 0.0;
  std::vector<Index> skipped;  // candidates with infinite Gamma
};

/// argmin over candidates of
/// 2 delta H(4(1+delta) lambda Gamma(L_delta, S_theta)/delta^2) v 2 lambda^2
/// + (1+delta) E(theta; theta0); ties by smaller l1 norm then index.
inline SparseApproxResult sparse_approx_target(
    const std::vector<Vec>& candidates, double lambda, double lambda0,
    double delta, const std::function<double(double)>& H,
    const std::function<double(const std::vector<Index>&)>& Gamma_of_support,
    const std::function<double(const Vec&)>& excess) {
  if (candidates.empty())
    throw std::invalid_argument("need at least one candidate");
  check_oracle_params(lambda, lambda0, delta);
  SparseApproxResult out;
  double best_l1 = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vec& th = candidates[i];
    std::vector<Index> support;
    for (Index j = 0; j < th.size(); ++j)
      if (th[j] != 0.0) support.push_back(j);
    if (support.size() > 12)
      throw std::invalid_argument("candidate support exceeds the |S| <= 12 cap");
    double score;
    if (support.empty()) {
      score = 2.0 * lambda * lambda + (1.0 + delta) * excess(th);
    } else {
      const double G = Gamma_of_support(support);
      if (!std::isfinite(G)) {
        out.skipped.push_back(static_cast<Index>(i));
        continue;
      }
      score = std::max(2.0 * delta *
                           H(4.0 * (1.0 + delta) * lambda * G / (delta * delta)),
                       2.0 * lambda * lambda) +
              (1.0 + delta) * excess(th);
    }
    const double l1 = l1_norm(th);
    const bool better =
        out.index < 0 || score < out.score - 1e-15 ||
        (std::abs(score - out.score) <= 1e-15 && l1 < best_l1 - 1e-15);
    if (better) {
      out.index = static_cast<Index>(i);
      out.theta = th;
      out.score = score;
      best_l1 = l1;
    }
  }
  if (out.index < 0)
    throw std::invalid_argument("all candidates had infinite effective sparsity");
  return out;
}

// --- the end-to-end experiment ------------------------------------------------

struct OracleExperimentConfig {
  Index n = 200;
  Index p = 400;
  Index s0 = 3;
  double sigma = 1.0;
  double delta = 0.5;
  double lambda_multiple = 2.0;  // lambda = multiple * lambda0
  Index reps = 200;
  std::uint64_t seed = 1;
  Index solver_max_iterations = 100000;
  double solver_tolerance = 1e-7;
  Index gamma_max_iterations = 4000;
};

struct OracleRepRow {
  Index rep = 0;
  double lambda0 = 0.0;
  double lambda = 0.0;
  bool T_holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  bool verdict = false;
  double l1_error = 0.0;
  double excess = 0.0;
  Index iterations = 0;
  bool solver_ok = true;
};

struct OracleReport {
  double delta = 0.0;
  double L = 0.0;
  double L_delta = 0.0;
  double Gamma0 = 0.0;      // Gamma(L, S0), design norm
  double GammaStar = 0.0;   // Gamma(L_delta, S0)
  double phi2 = 0.0;
  double margin_c = 0.0;    // fitted margin constant (1 for quadratic)
  double lambda0_mean = 0.0;
  double lambda_mean = 0.0;
  double M0_mean = 0.0;
  double Mstar_mean = 0.0;
  double excess_star = 0.0;  // theta* = theta0 here
  double event_T_freq = 0.0;
  double bound_freq_given_T = 0.0;
  std::vector<OracleRepRow> rows;
};

/// Sparse Gaussian regression with quadratic loss: per replication, solve,
/// test the event T exactly, and compare
/// (1-delta) E(theta_hat) + (lambda-lambda0) ||theta_hat - theta0||_1 against
/// (lambda - lambda0) M0.
inline OracleReport oracle_experiment(const OracleExperimentConfig& cfg) {
  OracleReport report;
  report.delta = cfg.delta;

  Mat Z = gaussian_design(cfg.n, cfg.p, derive_seed(cfg.seed, 157, 0));
  Vec theta0 = Vec::Zero(cfg.p);
  for (Index j = 0; j < cfg.s0; ++j)
    theta0[j] = (j % 2 == 0 ? 1.0 : -1.0) * 3.0 * std::pow(0.75, j);

  RegressionGenerator gen{Z, theta0, cfg.sigma};
  LossModel model = LossModel::quadratic(cfg.p, Centering::Expectation);

  const double mult = cfg.lambda_multiple;
  report.L = (mult + 1.0) / (mult - 1.0);
  report.L_delta = 2.0 * (1.0 + cfg.delta) / cfg.delta * report.L;

  std::vector<Index> S0;
  for (Index j = 0; j < cfg.s0; ++j) S0.push_back(j);
  TauSpec tau = TauSpec::design(Z);
  EffectiveSparsity es0 =
      effective_sparsity(tau, report.L, S0, cfg.p, cfg.gamma_max_iterations);
  EffectiveSparsity esd = effective_sparsity(tau, report.L_delta, S0, cfg.p,
                                             cfg.gamma_max_iterations);
  report.Gamma0 = es0.Gamma;
  report.GammaStar = esd.Gamma;
  report.phi2 = es0.phi2;

  // Margin check: quadratic loss with the design norm has c = 1 exactly.
  auto excess_closed = [&](const Vec& th) {
    return excess_risk_quadratic(Z, th, theta0).value;
  };
  report.margin_c =
      margin_fit(excess_closed, theta0, tau, 1.0, 64, cfg.seed).c;

  auto H = [](double v) { return conjugate_quadratic_exact(1.0, v); };

  const double log2p = std::log(2.0 * static_cast<double>(cfg.p));
  report.rows.assign(static_cast<std::size_t>(cfg.reps), OracleRepRow{});
  std::vector<double> M0s(static_cast<std::size_t>(cfg.reps), 0.0);
  std::vector<double> Mstars(static_cast<std::size_t>(cfg.reps), 0.0);
  parallel_for(static_cast<std::size_t>(cfg.reps), [&](std::size_t r) {
    SampleSet s = gen.sample(derive_seed(cfg.seed, 163, static_cast<std::uint64_t>(r)));
    LipschitzEnvelope env = build_envelope(model, s);
    const double lambda0 =
        std::sqrt(2.0 * log2p / static_cast<double>(cfg.n)) * env.K_n;
    const double lambda = mult * lambda0;

    SolverConfig scfg;
    scfg.lambda = lambda;
    scfg.max_iterations = cfg.solver_max_iterations;
    scfg.grad_tolerance = cfg.solver_tolerance;
    OracleRepRow row;
    row.rep = static_cast<Index>(r);
    row.lambda0 = lambda0;
    row.lambda = lambda;
    Solution sol;
    bool ok = true;
    try {
      sol = solve(model, s, scfg);
    } catch (const std::exception&) {
      row.solver_ok = false;
      ok = false;
    }
    if (ok) {
      row.iterations = sol.iterations;

      Vec eps = s.y - Z * theta0;
      const double T_stat = linf_norm(2.0 * (Z.transpose() * eps) /
                                      static_cast<double>(cfg.n));
      row.T_holds = T_stat <= lambda0;

      row.excess = excess_closed(sol.theta);
      row.l1_error = l1_norm(sol.theta - theta0);
      row.lhs =
          (1.0 - cfg.delta) * row.excess + (lambda - lambda0) * row.l1_error;
      Theorem2M m = theorem2_M(lambda, lambda0, cfg.delta, report.Gamma0,
                               report.GammaStar, H, 0.0);
      row.rhs = (lambda - lambda0) * m.M0;
      row.verdict = row.lhs <= row.rhs * (1.0 + 1e-12) + 1e-12;
      M0s[r] = m.M0;
      Mstars[r] = m.Mstar;
    }
    report.rows[r] = row;
  });

  Index T_count = 0, bound_count = 0, bound_total = 0;
  double l0_acc = 0, l_acc = 0, M0_acc = 0, Ms_acc = 0;
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    const OracleRepRow& row = report.rows[r];
    if (!row.solver_ok) continue;
    l0_acc += row.lambda0;
    l_acc += row.lambda;
    M0_acc += M0s[r];
    Ms_acc += Mstars[r];
    if (row.T_holds) {
      ++T_count;
      ++bound_total;
      if (row.verdict) ++bound_count;
    }
  }
  const double nreps = static_cast<double>(cfg.reps);
  report.lambda0_mean = l0_acc / nreps;
  report.lambda_mean = l_acc / nreps;
  report.M0_mean = M0_acc / nreps;
  report.Mstar_mean = Ms_acc / nreps;
  report.event_T_freq = static_cast<double>(T_count) / nreps;
  report.bound_freq_given_T =
      bound_total > 0
          ? static_cast<double>(bound_count) / static_cast<double>(bound_total)
          : 1.0;
  return report;
}

}  // namespace chainlab
