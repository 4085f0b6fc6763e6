#pragma once

#include "chaining_lab/losses.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Symmetrized-process suprema over l1 balls, deviation and Bernstein bounds,
// symmetrization / contraction checks, and the peeling device.
// ---------------------------------------------------------------------------

enum class Multiplier { Rademacher, Gaussian };
enum class SearchMethod { DualNormExact, VertexPlusAscent };

struct ProcessEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index replications = 0;
  std::uint64_t seed = 0;
  Multiplier kind = Multiplier::Rademacher;
  SearchMethod method = SearchMethod::DualNormExact;
  bool lower_estimate = false;  // search-based values are lower bounds
};

/// l1 ball around theta_star, intersected with the model domain by default.
struct BallSpec {
  Vec theta_star;
  double M = 1.0;
  bool restrict_to_domain = true;
};

struct DualNormSup {
  double value = 0.0;
  Index coordinate = 0;
  double sign = 1.0;

  /// The maximizing signed vertex of the radius-M ball in dimension p.
  Vec vertex(Index p, double M) const {
    Vec v = Vec::Zero(p);
    v[coordinate] = sign * M;
    return v;
  }
};

/// sup over ||theta - theta*||_1 <= M of |(theta - theta*)' v| = M ||v||_inf,
/// with a maximizing signed vertex.
inline DualNormSup dual_norm_sup(const Vec& v, double M) {
  if (M < 0) throw std::invalid_argument("dual_norm_sup needs M >= 0");
  DualNormSup out;
  if (v.size() == 0) return out;
  Index j = 0;
  const double a = v.cwiseAbs().maxCoeff(&j);
  out.value = M * a;
  out.coordinate = j;
  out.sign = v[j] >= 0 ? 1.0 : -1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Process models: centered-loss increments indexed by theta.
// ---------------------------------------------------------------------------

/// The symmetrized process for a loss family. Linear processes carry a
/// weight matrix W with rho_theta^c - rho_thetatilde^c = W (theta-thetatilde)
/// rowwise; everything else evaluates the loss family directly.
class ProcessModel {
 public:
  static ProcessModel linear(Mat W) {
    ProcessModel pm;
    pm.linear_ = true;
    pm.W_ = std::move(W);
    return pm;
  }

  /// Model-backed process; detects the linear quadratic fixed-design case
  /// (expectation centering with known truth).
  static ProcessModel from_loss(LossModel model, SampleSet sample) {
    if (model.kind == LossKind::Quadratic &&
        model.centering == Centering::Expectation && sample.theta0) {
      Vec eps = sample.y - sample.Z * (*sample.theta0);
      Mat W = (-2.0 * eps).asDiagonal() * sample.Z;
      return linear(std::move(W));
    }
    if (model.centering == Centering::Expectation &&
        model.kind != LossKind::Quadratic)
      throw std::invalid_argument(
          "search over MC-centered losses is not supported; use centering none");
    ProcessModel pm;
    pm.linear_ = false;
    pm.model_ = std::move(model);
    pm.sample_ = std::move(sample);
    return pm;
  }

  bool is_linear() const { return linear_; }
  const Mat& weights() const { return W_; }
  Index n() const { return linear_ ? W_.rows() : sample_.n(); }
  Index p() const { return linear_ ? W_.cols() : model_.p; }
  const LossModel& model() const { return model_; }
  const SampleSet& sample() const { return sample_; }

  /// Per-observation loss values (general path); lets callers cache the
  /// theta* column across many increment evaluations.
  Vec raw_values(const Vec& theta) const {
    return loss_values(model_, theta, sample_);
  }

  /// Per-observation increments rho^c_{theta*+delta} - rho^c_{theta*}.
  Vec increments(const Vec& theta_star, const Vec& delta) const {
    if (linear_) return W_ * delta;
    return raw_values(theta_star + delta) - raw_values(theta_star);
  }

  /// Gradient in delta of (1/n) coef . increments.
  Vec increment_grad(const Vec& theta_star, const Vec& delta,
                     const Vec& coef) const {
    if (linear_) return W_.transpose() * coef / static_cast<double>(n());
    return weighted_loss_grad(model_, theta_star + delta, sample_, coef);
  }

  Vec project_delta(const Vec& theta_star, const Vec& delta, double M,
                    bool restrict) const {
    Vec d = project_l1_ball(delta, M);
    if (!linear_ && restrict)
      d = model_.project(theta_star + d) - theta_star;
    return d;
  }

 private:
  bool linear_ = true;
  Mat W_;
  LossModel model_;
  SampleSet sample_;
};

struct SearchOptions {
  Index restarts = 64;
  Index max_iterations = 60;
  std::uint64_t seed = 0;
};

struct SupResult {
  double value = 0.0;
  bool exact = false;
  Vec argmax;
};

namespace detail {

/// Uniform draw from the l1 ball of radius M.
inline Vec sample_l1_ball(Rng& rng, Index p, double M) {
  Vec e(p);
  double tot = 0.0;
  for (Index j = 0; j < p; ++j) {
    e[j] = -std::log(std::max(rng.uniform01(), 1e-300));
    tot += e[j];
  }
  const double radius =
      M * std::pow(rng.uniform01(), 1.0 / static_cast<double>(p));
  for (Index j = 0; j < p; ++j)
    e[j] *= (rng.rademacher() * radius) / tot;
  return e;
}

}  // namespace detail

/// sup over the ball of |P_n^eps (rho_theta^c - rho_theta*^c)| for one draw
/// of multiplier signs. Exact by the dual norm for linear processes; signed
/// vertices plus projected-gradient ascent restarts otherwise (the reported
/// value is then a lower estimate).
inline SupResult symmetrized_sup_once(const ProcessModel& proc,
                                      const BallSpec& ball, const Vec& draw,
                                      const SearchOptions& opts = {}) {
  if (draw.size() != proc.n())
    throw std::invalid_argument("multiplier draw length must equal n");
  const double n = static_cast<double>(proc.n());
  SupResult out;
  if (proc.is_linear()) {
    Vec v = proc.weights().transpose() * draw / n;
    DualNormSup d = dual_norm_sup(v, ball.M);
    out.value = d.value;
    out.exact = true;
    out.argmax = Vec::Zero(proc.p());
    out.argmax[d.coordinate] = d.sign * ball.M;
    return out;
  }

  const Index p = proc.p();
  const Vec& ts = ball.theta_star;
  const Vec base = proc.raw_values(ts);
  auto F = [&](const Vec& delta) {
    return draw.dot(proc.raw_values(ts + delta) - base) / n;
  };
  double best = 0.0;
  Vec best_delta = Vec::Zero(p);

  auto consider = [&](const Vec& delta) {
    const double val = std::abs(F(delta));
    if (val > best) {
      best = val;
      best_delta = delta;
    }
  };

  // Signed vertices theta* +- M e_j, pulled back into the domain.
  for (Index j = 0; j < p; ++j) {
    for (double s : {1.0, -1.0}) {
      Vec delta = Vec::Zero(p);
      delta[j] = s * ball.M;
      consider(proc.project_delta(ts, delta, ball.M, ball.restrict_to_domain));
    }
  }

  // Projected-gradient ascent on +-F from random interior starts.
  for (Index r = 0; r < opts.restarts; ++r) {
    Rng rng(derive_seed(opts.seed, 71, static_cast<std::uint64_t>(r)));
    const double sgn = (r % 2 == 0) ? 1.0 : -1.0;
    Vec delta = proc.project_delta(ts, detail::sample_l1_ball(rng, p, ball.M),
                                   ball.M, ball.restrict_to_domain);
    double cur = sgn * F(delta);
    double step = 0.25 * ball.M;
    for (Index it = 0; it < opts.max_iterations; ++it) {
      Vec g = sgn * proc.increment_grad(ts, delta, draw);
      const double gn = g.cwiseAbs().maxCoeff();
      if (gn < 1e-15) break;
      bool improved = false;
      for (Index bt = 0; bt < 20; ++bt) {
        Vec cand = proc.project_delta(ts, delta + (step / gn) * g, ball.M,
                                      ball.restrict_to_domain);
        const double val = sgn * F(cand);
        if (val > cur + 1e-14 * (1.0 + std::abs(cur))) {
          delta = cand;
          cur = val;
          improved = true;
          step = std::min(step * 2.0, 4.0 * ball.M);
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    consider(delta);
  }

  out.value = best;
  out.exact = false;
  out.argmax = best_delta;
  return out;
}

/// Monte Carlo estimate of E_n, the conditional mean of the symmetrized
/// supremum over fresh multiplier draws.
inline ProcessEstimate conditional_mean_En(const ProcessModel& proc,
                                           const BallSpec& ball, Index reps,
                                           std::uint64_t seed,
                                           Multiplier mult = Multiplier::Rademacher,
                                           const SearchOptions& opts = {}) {
  if (reps < 2) throw std::invalid_argument("need at least 2 replications");
  std::vector<double> vals(static_cast<std::size_t>(reps));
  const Index n = proc.n();
  if (proc.is_linear()) {
    // Batched: V = W' E / n, one column per replication.
    const Index chunk = std::min<Index>(reps, std::max<Index>(1, (1 << 22) / std::max<Index>(n, 1)));
    Mat E(n, chunk);
    Index done = 0;
    while (done < reps) {
      const Index c = std::min(chunk, reps - done);
      for (Index b = 0; b < c; ++b) {
        Rng rng(derive_seed(seed, 13, static_cast<std::uint64_t>(done + b)));
        for (Index i = 0; i < n; ++i)
          E(i, b) = mult == Multiplier::Rademacher ? rng.rademacher()
                                                   : rng.normal();
      }
      Mat V = proc.weights().transpose() * E.leftCols(c) /
              static_cast<double>(n);
      for (Index b = 0; b < c; ++b)
        vals[static_cast<std::size_t>(done + b)] =
            ball.M * linf_norm(V.col(b));
      done += c;
    }
  } else {
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      Vec draw(n);
      Rng rng(derive_seed(seed, 13, static_cast<std::uint64_t>(r)));
      for (Index i = 0; i < n; ++i)
        draw[i] = mult == Multiplier::Rademacher ? rng.rademacher()
                                                 : rng.normal();
      SearchOptions o = opts;
      o.seed = derive_seed(seed, 17, static_cast<std::uint64_t>(r));
      vals[r] = symmetrized_sup_once(proc, ball, draw, o).value;
    });
  }
  MeanSe ms = mean_se(vals);
  ProcessEstimate est;
  est.mean = ms.mean;
  est.std_error = ms.se;
  est.replications = reps;
  est.seed = seed;
  est.kind = mult;
  est.method = proc.is_linear() ? SearchMethod::DualNormExact
                                : SearchMethod::VertexPlusAscent;
  est.lower_estimate = !proc.is_linear();
  return est;
}

// ---------------------------------------------------------------------------
// Expectation bounds per regime and the deviation/Bernstein/peeling formulas.
// ---------------------------------------------------------------------------

enum class Regime { Linear, Glm, ExtendedGlm, Nonlinear };

/// Largest/smallest eigenvalue ratio of Sigma_n = (1/n) sum psi psi'.
inline double nonlinear_eigen_ratio(const LipschitzEnvelope& envelope) {
  const Mat sigma = envelope.psi.transpose() * envelope.psi /
                    static_cast<double>(envelope.psi.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 1e-12 * std::max(hi, 1.0))
    throw std::invalid_argument(
        "Sigma_n is singular (smallest eigenvalue <= 0); p > n is excluded");
  return std::sqrt(hi / lo);
}

/// M sqrt(2 log(2p) / n) K_n times the regime factor
/// {1, 2, C 2^{r-1}, C Lambda-ratio}; C defaults to 1 and is reported only
/// up to a universal constant.
inline double regime_bound(Regime regime, Index p, Index n, double K_n,
                           Index r = 1, double eigen_ratio = 1.0,
                           double M = 1.0, double C = 1.0) {
  if (p < 1 || n < 1) throw std::invalid_argument("need p, n >= 1");
  const double base =
      M * std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) /
                    static_cast<double>(n)) *
      K_n;
  switch (regime) {
    case Regime::Linear: return base;
    case Regime::Glm: return 2.0 * base;
    case Regime::ExtendedGlm:
      return C * std::pow(2.0, static_cast<double>(r - 1)) * base;
    case Regime::Nonlinear:
      if (!(eigen_ratio > 0) || !std::isfinite(eigen_ratio))
        throw std::invalid_argument("nonlinear regime needs a finite eigen ratio");
      return C * eigen_ratio * base;
  }
  throw std::logic_error("unreachable");
}

/// Massart deviation level: E_n + R_n sqrt(2 t / n).
inline double massart_threshold(double E_n, double R_n, Index n, double t) {
  if (E_n < 0 || R_n < 0 || t < 0 || n < 1)
    throw std::invalid_argument("massart_threshold needs nonnegative inputs");
  return E_n + R_n * std::sqrt(2.0 * t / static_cast<double>(n));
}

/// Deviation level for max_j | ||psi_j||_n^2 - ||psi_j||^2 | under uniform
/// sub-Gaussianity: 2 tau L sqrt(2 (t + log p) / n) + 2 L (t + log p) / n.
inline double bernstein_envelope_tail(double L, double tau, Index p, Index n,
                                      double t) {
  if (L <= 0 || tau < 0 || t <= 0 || p < 1 || n < 1)
    throw std::invalid_argument("bernstein_envelope_tail: bad inputs");
  const double tl = t + std::log(static_cast<double>(p));
  return 2.0 * tau * L * std::sqrt(2.0 * tl / static_cast<double>(n)) +
         2.0 * L * tl / static_cast<double>(n);
}

/// Peeled uniform-ratio threshold:
/// lambda* (1 + K* [ sqrt((t+log p)/log p) + (t+log p)/n ]).
inline double peeling_threshold(double lambda_star, double K_star, Index p,
                                Index n, double t) {
  if (lambda_star < 0 || K_star < 0 || p < 1 || n < 1 || t < 0)
    throw std::invalid_argument("peeling_threshold: bad inputs");
  const double lp = std::log(std::max<double>(static_cast<double>(p), 2.0));
  const double tl = t + std::log(static_cast<double>(p));
  return lambda_star *
         (1.0 + K_star * (std::sqrt(tl / lp) + tl / static_cast<double>(n)));
}

/// Fixed-radius display: (lambda* M / e)(1 + K* [ sqrt(t/log p) + t/n ]).
inline double fixed_m_threshold(double lambda_star, double K_star, double M,
                                Index p, Index n, double t) {
  if (lambda_star < 0 || K_star < 0 || p < 1 || n < 1 || t < 0)
    throw std::invalid_argument("fixed_m_threshold: bad inputs");
  const double lp = std::log(std::max<double>(static_cast<double>(p), 2.0));
  return lambda_star * M / std::exp(1.0) *
         (1.0 + K_star * (std::sqrt(t / lp) + t / static_cast<double>(n)));
}

/// Shell count for the peeling device: j = 0..J with J = max(p, 64).
inline Index peeling_shells(Index p) { return std::max<Index>(p, 64); }

// ---------------------------------------------------------------------------
// Monte Carlo verification harnesses.
// ---------------------------------------------------------------------------

/// Quadratic fixed-design generator whose centered increments are linear;
/// the population quantities of the symmetrization lemma are closed-form.
struct LinearProcessGenerator {
  RegressionGenerator gen;

  Index n() const { return gen.Z.rows(); }
  Index p() const { return gen.Z.cols(); }

  /// Pointwise weights of the centered increments: W = -2 eps z'.
  Mat weights(const SampleSet& s) const {
    Vec eps = s.y - s.Z * (*s.theta0);
    return (-2.0 * eps).asDiagonal() * s.Z;
  }

  /// Coefficients of Y(theta, theta*) = (P_n - P)(rho_theta - rho_theta*).
  Vec empirical_minus_population(const SampleSet& s) const {
    Vec eps = s.y - s.Z * (*s.theta0);
    return -2.0 * (s.Z.transpose() * eps) / static_cast<double>(s.Z.rows());
  }

  /// R = sup over the ball of the population norm of the increments.
  double population_radius(double M) const {
    double kz = 0.0;
    for (Index j = 0; j < gen.Z.cols(); ++j)
      kz = std::max(kz, norm_n(gen.Z.col(j)));
    return 2.0 * gen.sigma * M * kz;
  }

  /// Population K = max_j || 2 eps z_j ||.
  double population_K() const {
    double kz = 0.0;
    for (Index j = 0; j < gen.Z.cols(); ++j)
      kz = std::max(kz, norm_n(gen.Z.col(j)));
    return 2.0 * gen.sigma * kz;
  }
};

struct CheckReport {
  double lhs_freq = 0.0;
  double rhs_freq = 0.0;
  double threshold = 0.0;
  double bound = 0.0;   // the probability bound being tested
  double se = 0.0;
  bool verdict = true;
  bool flagged = false;
  double extra = 0.0;   // check-specific diagnostic
};

/// Symmetrization lemma frequencies: P(sup|Y| > 4R sqrt(2t/n)) vs
/// 4 P(sup|Y^eps| > R sqrt(2t/n)).
inline CheckReport symmetrization_check(const LinearProcessGenerator& g,
                                        double M, double t, Index reps,
                                        std::uint64_t seed) {
  if (t < 4.0) throw std::invalid_argument("symmetrization lemma needs t >= 4");
  const double n = static_cast<double>(g.n());
  const double R = g.population_radius(M);
  const double thr = R * std::sqrt(2.0 * t / n);
  Index lhs = 0, rhs = 0;
  Vec eps_signs(g.n());
  for (Index r = 0; r < reps; ++r) {
    SampleSet s = g.gen.sample(derive_seed(seed, 43, static_cast<std::uint64_t>(r)));
    Vec v = g.empirical_minus_population(s);
    if (M * linf_norm(v) > 4.0 * thr) ++lhs;
    Mat W = g.weights(s);
    Rng rng(derive_seed(seed, 47, static_cast<std::uint64_t>(r)));
    rng.fill_rademacher(eps_signs);
    Vec w = W.transpose() * eps_signs / n;
    if (M * linf_norm(w) > thr) ++rhs;
  }
  CheckReport rep;
  rep.lhs_freq = static_cast<double>(lhs) / static_cast<double>(reps);
  rep.rhs_freq = static_cast<double>(rhs) / static_cast<double>(reps);
  rep.threshold = thr;
  rep.se = std::sqrt(std::pow(binomial_se(rep.lhs_freq, reps), 2) +
                     16.0 * std::pow(binomial_se(rep.rhs_freq, reps), 2));
  rep.bound = 4.0 * rep.rhs_freq;
  rep.verdict = rep.lhs_freq <= 4.0 * rep.rhs_freq + 3.0 * rep.se;
  return rep;
}

/// Contraction factor: E_n over a Lipschitz-dominated family against the
/// linear comparison process; the lemma promises a factor of at most 2.
inline CheckReport contraction_check(const ProcessModel& contracted,
                                     const Mat& linear_W, const BallSpec& ball,
                                     Index reps, std::uint64_t seed,
                                     const SearchOptions& opts = {}) {
  const Index n = contracted.n();
  std::vector<double> num(static_cast<std::size_t>(reps));
  std::vector<double> den(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    Vec signs(n);
    Rng rng(derive_seed(seed, 53, static_cast<std::uint64_t>(r)));
    rng.fill_rademacher(signs);
    SearchOptions o = opts;
    o.seed = derive_seed(seed, 59, static_cast<std::uint64_t>(r));
    num[r] = symmetrized_sup_once(contracted, ball, signs, o).value;
    den[r] =
        ball.M * linf_norm(linear_W.transpose() * signs / static_cast<double>(n));
  });
  MeanSe mn = mean_se(num), md = mean_se(den);
  CheckReport rep;
  if (md.mean <= 10.0 * md.se || md.mean <= 0) {
    rep.flagged = true;  // linear side below the noise floor
    rep.verdict = true;
    return rep;
  }
  rep.extra = mn.mean / md.mean;  // empirical contraction ratio
  const double rel =
      std::sqrt(std::pow(mn.se / mn.mean, 2) + std::pow(md.se / md.mean, 2));
  rep.se = rep.extra * rel;
  rep.threshold = 2.0;
  rep.verdict = rep.extra <= 2.0 + 3.0 * rep.se;
  return rep;
}

/// Multivariate contraction (extended GLM): E sup|Y^eps| against the block
/// Gaussian comparison process E sup X, using the block envelope weights.
inline CheckReport multivariate_contraction_check(
    const ProcessModel& proc, const LipschitzEnvelope& envelope,
    const std::vector<Index>& beta_blocks, const BallSpec& ball, Index reps,
    std::uint64_t seed, const SearchOptions& opts = {}) {
  const Index n = proc.n();
  const Index r_blocks = static_cast<Index>(beta_blocks.size());
  std::vector<double> num(static_cast<std::size_t>(reps));
  std::vector<double> den(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep_i) {
    Vec signs(n);
    Rng rng(derive_seed(seed, 61, static_cast<std::uint64_t>(rep_i)));
    rng.fill_rademacher(signs);
    SearchOptions o = opts;
    o.seed = derive_seed(seed, 67, static_cast<std::uint64_t>(rep_i));
    num[rep_i] = symmetrized_sup_once(proc, ball, signs, o).value;
    // X(theta, theta*) = (1/n) sum_i sum_k sum_j delta_{j,k} psi_{j,k} xi_{i,k};
    // the sup over the l1 ball is M max_{j,k} |(1/n) sum_i psi_{j,k} xi_{i,k}|.
    Rng rng2(derive_seed(seed, 69, static_cast<std::uint64_t>(rep_i)));
    double best = 0.0;
    Index off = 0;
    for (Index k = 0; k < r_blocks; ++k) {
      Vec xi(n);
      rng2.fill_normal(xi);
      const Index pk = beta_blocks[static_cast<std::size_t>(k)];
      Vec col = envelope.psi.middleCols(off, pk).transpose() * xi /
                static_cast<double>(n);
      best = std::max(best, linf_norm(col));
      off += pk;
    }
    den[rep_i] = ball.M * best;
  });
  MeanSe mn = mean_se(num), md = mean_se(den);
  CheckReport rep;
  if (md.mean <= 10.0 * md.se || md.mean <= 0) {
    rep.flagged = true;
    rep.verdict = true;
    return rep;
  }
  rep.extra = mn.mean / md.mean;
  const double rel =
      std::sqrt(std::pow(mn.se / mn.mean, 2) + std::pow(md.se / md.mean, 2));
  rep.se = rep.extra * rel;
  rep.threshold = std::pow(2.0, static_cast<double>(r_blocks - 1));
  rep.verdict = true;  // stability across grids is judged by the caller
  return rep;
}

/// Massart deviation: frequency of sup|Y^eps| >= E_n + R_n sqrt(2t/n),
/// which should not exceed exp(-t). E_n is estimated from an independent
/// multiplier stream.
inline CheckReport massart_check(const Mat& W, double M, double t, Index reps,
                                 std::uint64_t seed, Index en_reps = 4000) {
  const Index n = W.rows();
  ProcessModel proc = ProcessModel::linear(W);
  BallSpec ball;
  ball.theta_star = Vec::Zero(W.cols());
  ball.M = M;
  ProcessEstimate en =
      conditional_mean_En(proc, ball, en_reps, derive_seed(seed, 73, 0));
  double K_n = 0.0;
  for (Index j = 0; j < W.cols(); ++j) K_n = std::max(K_n, norm_n(W.col(j)));
  const double R_n = M * K_n;
  const double thr = massart_threshold(en.mean, R_n, n, t);
  Index hits = 0;
  Vec signs(n);
  for (Index r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, 79, static_cast<std::uint64_t>(r)));
    rng.fill_rademacher(signs);
    const double sup = M * linf_norm(W.transpose() * signs / static_cast<double>(n));
    if (sup >= thr) ++hits;
  }
  CheckReport rep;
  rep.lhs_freq = static_cast<double>(hits) / static_cast<double>(reps);
  rep.threshold = thr;
  rep.bound = std::exp(-t);
  rep.se = binomial_se(std::min(rep.bound, 1.0), reps);
  rep.verdict = rep.lhs_freq <= rep.bound + 3.0 * rep.se;
  rep.extra = en.mean;
  return rep;
}

/// Bernstein envelope bound for psi_{ij} = |z_{ij}|, z standard normal:
/// population column norms are 1, and (L, tau) certify sub-Gaussianity when
/// 2 L^2 (1/sqrt(1 - 2/L^2) - 1) <= tau^2.
inline CheckReport bernstein_check(Index p, Index n, double L, double tau,
                                   double t, Index reps, std::uint64_t seed) {
  const double thr = bernstein_envelope_tail(L, tau, p, n, t);
  Index hits = 0;
  for (Index r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, 83, static_cast<std::uint64_t>(r)));
    double worst = 0.0;
    for (Index j = 0; j < p; ++j) {
      double s2 = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double z = rng.normal();
        s2 += z * z;
      }
      worst = std::max(worst, std::abs(s2 / static_cast<double>(n) - 1.0));
    }
    if (worst >= thr) ++hits;
  }
  CheckReport rep;
  rep.lhs_freq = static_cast<double>(hits) / static_cast<double>(reps);
  rep.threshold = thr;
  rep.bound = 2.0 * std::exp(-t);
  rep.se = binomial_se(std::min(rep.bound, 1.0), reps);
  rep.verdict = rep.lhs_freq <= rep.bound + 3.0 * rep.se;
  return rep;
}

/// Peeled uniform-ratio event: frequency of
/// sup |Y| / (||theta - theta*||_1 v floor) >= peeling_threshold, against
/// the 6 exp(-t) budget. For the linear generator the ratio supremum equals
/// ||v||_inf exactly.
inline CheckReport peeling_check(const LinearProcessGenerator& g, double M_bar,
                                 double lambda_star, double K_star, double t,
                                 Index reps, std::uint64_t seed) {
  const Index p = g.p();
  const double thr = peeling_threshold(lambda_star, K_star, p, g.n(), t);
  Index hits = 0;
  for (Index r = 0; r < reps; ++r) {
    SampleSet s = g.gen.sample(derive_seed(seed, 89, static_cast<std::uint64_t>(r)));
    const double stat = linf_norm(g.empirical_minus_population(s));
    if (stat >= thr) ++hits;
  }
  (void)M_bar;  // the linear ratio statistic does not depend on the radius
  CheckReport rep;
  rep.lhs_freq = static_cast<double>(hits) / static_cast<double>(reps);
  rep.threshold = thr;
  rep.bound = 6.0 * std::exp(-t);
  rep.se = binomial_se(std::min(rep.bound, 1.0), reps);
  rep.verdict = rep.lhs_freq <= rep.bound + 3.0 * rep.se;
  return rep;
}

/// Report-only companion to peeling_check: frequency of the fixed-radius
/// display sup_{Theta_M} |Y| >= fixed_m_threshold at the same lambda*.
/// The two displays differ in the constant-t regime; this emits the numbers
/// side by side instead of reconciling them, so no verdict is attached.
inline CheckReport fixed_m_check(const LinearProcessGenerator& g, double M,
                                 double lambda_star, double K_star, double t,
                                 Index reps, std::uint64_t seed) {
  const double thr = fixed_m_threshold(lambda_star, K_star, M, g.p(), g.n(), t);
  Index hits = 0;
  for (Index r = 0; r < reps; ++r) {
    SampleSet s = g.gen.sample(derive_seed(seed, 91, static_cast<std::uint64_t>(r)));
    if (M * linf_norm(g.empirical_minus_population(s)) >= thr) ++hits;
  }
  CheckReport rep;
  rep.lhs_freq = static_cast<double>(hits) / static_cast<double>(reps);
  rep.threshold = thr;
  rep.bound = 6.0 * std::exp(-t);
  rep.se = binomial_se(std::min(rep.bound, 1.0), reps);
  rep.flagged = rep.lhs_freq > rep.bound + 3.0 * rep.se;
  rep.verdict = true;  // comparison only
  return rep;
}

// ---------------------------------------------------------------------------
// E_n grids for the scaling studies.
// ---------------------------------------------------------------------------

struct EnGridCell {
  Index n = 0;
  Index p = 0;
  double M = 1.0;
  double estimate = 0.0;
  double se = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

/// Linear-regime E_n over an (n, p) grid with n-normalized Gaussian designs
/// (K_n = 1), plus the Hoeffding bound and the MC/bound ratio per cell.
inline std::vector<EnGridCell> en_linear_grid(const std::vector<Index>& ns,
                                              const std::vector<Index>& ps,
                                              double M, Index reps,
                                              std::uint64_t seed) {
  std::vector<EnGridCell> cells;
  for (Index p : ps)
    for (Index n : ns) {
      Mat psi = gaussian_design(n, p, derive_seed(seed, 97, static_cast<std::uint64_t>(p * 131071 + n)));
      ProcessModel proc = ProcessModel::linear(psi);
      BallSpec ball;
      ball.theta_star = Vec::Zero(p);
      ball.M = M;
      ProcessEstimate est = conditional_mean_En(
          proc, ball, reps, derive_seed(seed, 101, static_cast<std::uint64_t>(p * 524287 + n)));
      double K_n = 0.0;
      for (Index j = 0; j < p; ++j) K_n = std::max(K_n, norm_n(psi.col(j)));
      EnGridCell cell;
      cell.n = n;
      cell.p = p;
      cell.M = M;
      cell.estimate = est.mean;
      cell.se = est.std_error;
      cell.bound = regime_bound(Regime::Linear, p, n, K_n, 1, 1.0, M);
      cell.ratio = cell.estimate / cell.bound;
      cells.push_back(cell);
    }
  return cells;
}

}  // namespace chainlab
