#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "chaining_lab/common.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Loss families: quadratic, Lipschitz GLM (Huberized link), Gaussian-mixture
// regression (an extended GLM), and generic componentwise-Lipschitz losses.
//
// A model owns the parameter layout. For the mixture with free weights and
// scales the layout is [beta_1 | ... | beta_r | pi | sigma]; with fixed
// (pi, sigma) only the beta blocks remain.
// ---------------------------------------------------------------------------

enum class LossKind { Quadratic, LipschitzGlm, ExtendedGlmMixture, GenericNonlinear };
enum class Centering { None, Expectation };

struct ParameterBox {
  Vec lo, hi;

  static ParameterBox unbounded(Index p) {
    ParameterBox b;
    const double inf = std::numeric_limits<double>::infinity();
    b.lo = Vec::Constant(p, -inf);
    b.hi = Vec::Constant(p, inf);
    return b;
  }
  static ParameterBox cube(Index p, double lo, double hi) {
    ParameterBox b;
    b.lo = Vec::Constant(p, lo);
    b.hi = Vec::Constant(p, hi);
    return b;
  }

  Index dim() const { return lo.size(); }
  bool bounded() const {
    return lo.allFinite() && hi.allFinite();
  }
  bool contains(const Vec& theta, double tol = 1e-9) const {
    if (theta.size() != lo.size()) return false;
    return ((theta.array() >= lo.array() - tol) &&
            (theta.array() <= hi.array() + tol)).all();
  }
  Vec clamp(const Vec& theta) const {
    return theta.cwiseMax(lo).cwiseMin(hi);
  }
  Vec sample(Rng& rng) const {
    Vec t(lo.size());
    for (Index j = 0; j < lo.size(); ++j) t[j] = rng.uniform(lo[j], hi[j]);
    return t;
  }
};

struct MixtureParams {
  Vec pi;                    // r mixing weights, simplex
  Vec sigma;                 // r scales, positive
  std::vector<Vec> beta;     // r coefficient blocks

  Index components() const { return pi.size(); }
  void validate(double sigma_min, double sigma_max) const {
    if (pi.size() != sigma.size() ||
        static_cast<std::size_t>(pi.size()) != beta.size())
      throw std::invalid_argument("mixture params: inconsistent component count");
    if (std::abs(pi.sum() - 1.0) > 1e-9 || pi.minCoeff() < -1e-12)
      throw std::invalid_argument("mixture weights must lie in the simplex");
    for (Index k = 0; k < sigma.size(); ++k)
      if (sigma[k] < sigma_min || sigma[k] > sigma_max)
        throw std::invalid_argument("mixture scale outside [sigma_min, sigma_max]");
  }
};

/// Fixed observations (y_i, z_i). Simulated samples keep the generating truth
/// so that expectation centering and excess risks have closed forms.
struct SampleSet {
  Mat Z;                      // n x d design
  Vec y;                      // n responses
  std::optional<Vec> theta0;  // generating parameter, model layout
  double noise_sigma = 0.0;

  Index n() const { return y.size(); }
  Index design_cols() const { return Z.cols(); }
};

struct LossModel {
  LossKind kind = LossKind::Quadratic;
  Index p = 0;                  // dimension of theta
  std::vector<Index> blocks;    // componentwise-Lipschitz block sizes, sum = p
  Centering centering = Centering::None;
  ParameterBox box;

  // Lipschitz GLM
  double huber_delta = 1.0;

  // Gaussian mixture regression
  Index mix_r = 1;
  std::vector<Index> beta_blocks;   // design-column split, sum = design cols
  bool extras_in_theta = true;      // pi and sigma are coordinates of theta
  MixtureParams fixed_extras;       // used when !extras_in_theta
  double pi_min = 0.05;
  double sigma_min = 0.1;
  double sigma_max = 10.0;

  // Generic nonlinear: per-observation value and gradient in theta.
  std::function<double(const Vec&, const SampleSet&, Index)> custom_value;
  std::function<Vec(const Vec&, const SampleSet&, Index)> custom_grad;

  std::uint64_t centering_seed = 0x5eedc0de;
  Index centering_mc_draws = 100000;

  Index beta_dim() const {
    Index s = 0;
    for (Index b : beta_blocks) s += b;
    return s;
  }

  // --- factories -----------------------------------------------------------

  static LossModel quadratic(Index p, Centering centering = Centering::None,
                             ParameterBox box = {}) {
    LossModel m;
    m.kind = LossKind::Quadratic;
    m.p = p;
    m.blocks.assign(static_cast<std::size_t>(p), 1);
    m.centering = centering;
    m.box = box.dim() == p ? box : ParameterBox::unbounded(p);
    return m;
  }

  static LossModel huber_glm(Index p, double delta = 1.0,
                             Centering centering = Centering::None,
                             ParameterBox box = {}) {
    LossModel m;
    m.kind = LossKind::LipschitzGlm;
    m.p = p;
    m.blocks.assign(static_cast<std::size_t>(p), 1);
    m.centering = centering;
    m.huber_delta = delta;
    m.box = box.dim() == p ? box : ParameterBox::unbounded(p);
    return m;
  }

  /// Mixture with free weights and scales: theta = [beta | pi | sigma].
  static LossModel mixture(std::vector<Index> beta_blocks, double beta_bound,
                           double pi_min, double sigma_min, double sigma_max) {
    LossModel m;
    m.kind = LossKind::ExtendedGlmMixture;
    m.beta_blocks = std::move(beta_blocks);
    m.mix_r = static_cast<Index>(m.beta_blocks.size());
    m.extras_in_theta = true;
    m.pi_min = pi_min;
    m.sigma_min = sigma_min;
    m.sigma_max = sigma_max;
    if (pi_min * static_cast<double>(m.mix_r) > 1.0)
      throw std::invalid_argument("pi_min too large for component count");
    const Index pb = m.beta_dim();
    m.p = pb + 2 * m.mix_r;
    m.blocks.clear();
    for (Index b : m.beta_blocks) m.blocks.push_back(b);
    for (Index k = 0; k < 2 * m.mix_r; ++k) m.blocks.push_back(1);
    m.box.lo = Vec(m.p);
    m.box.hi = Vec(m.p);
    m.box.lo.head(pb).setConstant(-beta_bound);
    m.box.hi.head(pb).setConstant(beta_bound);
    m.box.lo.segment(pb, m.mix_r).setConstant(pi_min);
    m.box.hi.segment(pb, m.mix_r).setConstant(1.0);
    m.box.lo.tail(m.mix_r).setConstant(sigma_min);
    m.box.hi.tail(m.mix_r).setConstant(sigma_max);
    return m;
  }

  /// Mixture with (pi, sigma) held fixed: theta holds only the beta blocks.
  static LossModel mixture_fixed_extras(std::vector<Index> beta_blocks,
                                        double beta_bound,
                                        MixtureParams extras) {
    LossModel m;
    m.kind = LossKind::ExtendedGlmMixture;
    m.beta_blocks = std::move(beta_blocks);
    m.mix_r = static_cast<Index>(m.beta_blocks.size());
    m.extras_in_theta = false;
    m.sigma_min = extras.sigma.minCoeff();
    m.sigma_max = extras.sigma.maxCoeff();
    m.pi_min = std::max(1e-6, extras.pi.minCoeff());
    extras.validate(m.sigma_min, m.sigma_max);
    m.fixed_extras = std::move(extras);
    m.p = m.beta_dim();
    m.blocks = m.beta_blocks;
    m.box = ParameterBox::cube(m.p, -beta_bound, beta_bound);
    return m;
  }

  static LossModel generic(Index p, ParameterBox box,
                           std::function<double(const Vec&, const SampleSet&, Index)> value,
                           std::function<Vec(const Vec&, const SampleSet&, Index)> grad) {
    LossModel m;
    m.kind = LossKind::GenericNonlinear;
    m.p = p;
    m.blocks.assign(static_cast<std::size_t>(p), 1);
    m.box = std::move(box);
    m.custom_value = std::move(value);
    m.custom_grad = std::move(grad);
    return m;
  }

  // --- mixture coordinate views -------------------------------------------

  Vec mix_pi(const Vec& theta) const {
    return extras_in_theta ? Vec(theta.segment(beta_dim(), mix_r))
                           : fixed_extras.pi;
  }
  Vec mix_sigma(const Vec& theta) const {
    return extras_in_theta ? Vec(theta.tail(mix_r)) : fixed_extras.sigma;
  }

  /// Clamp to the box; mixture weights are additionally pulled back to the
  /// simplex sheet {pi_k >= pi_min, sum pi = 1}.
  Vec project(const Vec& theta) const {
    Vec t = box.clamp(theta);
    if (kind == LossKind::ExtendedGlmMixture && extras_in_theta) {
      const Index pb = beta_dim();
      const double z = 1.0 - pi_min * static_cast<double>(mix_r);
      Vec shifted = t.segment(pb, mix_r).array() - pi_min;
      t.segment(pb, mix_r) =
          project_simplex(shifted, z).array() + pi_min;
    }
    return t;
  }

  bool feasible(const Vec& theta, double tol = 1e-8) const {
    if (!box.contains(theta, tol)) return false;
    if (kind == LossKind::ExtendedGlmMixture && extras_in_theta)
      return std::abs(mix_pi(theta).sum() - 1.0) <= 1e-5;
    return true;
  }
};

namespace detail {

inline void check_eval(const LossModel& model, const Vec& theta,
                       const SampleSet& sample) {
  if (theta.size() != model.p)
    throw std::invalid_argument("theta dimension does not match model");
  if (model.kind == LossKind::ExtendedGlmMixture || model.kind == LossKind::GenericNonlinear) {
    if (!model.feasible(theta))
      throw std::invalid_argument("theta outside the parameter box");
  }
  const Index want = model.kind == LossKind::ExtendedGlmMixture
                         ? model.beta_dim()
                         : model.p;
  if (model.kind != LossKind::GenericNonlinear && sample.Z.cols() != want)
    throw std::invalid_argument("design width does not match model");
}

inline double huber(double u, double delta) {
  const double a = std::abs(u);
  return a <= delta ? 0.5 * u * u : delta * a - 0.5 * delta * delta;
}
inline double huber_deriv(double u, double delta) {
  return std::clamp(u, -delta, delta);
}

constexpr double kLogTwoPi = 1.8378770664093454836;

/// Per-component log pi_k phi_{sigma_k}(y - beta_k' z_k); n x r.
inline Mat mixture_log_terms(const LossModel& m, const Vec& theta,
                             const SampleSet& s) {
  const Vec pi = m.mix_pi(theta);
  const Vec sig = m.mix_sigma(theta);
  Mat lg(s.n(), m.mix_r);
  Index off = 0;
  for (Index k = 0; k < m.mix_r; ++k) {
    const Index pk = m.beta_blocks[static_cast<std::size_t>(k)];
    Vec u = s.y - s.Z.middleCols(off, pk) * theta.segment(off, pk);
    lg.col(k) = (-0.5 * u.array().square() / (sig[k] * sig[k]) +
                 std::log(pi[k]) - std::log(sig[k]) - 0.5 * kLogTwoPi)
                    .matrix();
    off += pk;
  }
  return lg;
}

/// Negative log mixture density per observation, log-sum-exp stabilized.
inline Vec mixture_nll(const LossModel& m, const Vec& theta,
                       const SampleSet& s) {
  Mat lg = mixture_log_terms(m, theta, s);
  Vec mx = lg.rowwise().maxCoeff();
  Vec acc = ((lg.colwise() - mx).array().exp().rowwise().sum()).log().matrix();
  return -(mx + acc);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss evaluation.
// ---------------------------------------------------------------------------

/// All n per-observation losses at once.
inline Vec loss_values(const LossModel& model, const Vec& theta,
                       const SampleSet& sample) {
  detail::check_eval(model, theta, sample);
  switch (model.kind) {
    case LossKind::Quadratic: {
      Vec r = sample.y - sample.Z * theta;
      return r.array().square().matrix();
    }
    case LossKind::LipschitzGlm: {
      Vec r = sample.y - sample.Z * theta;
      Vec out(r.size());
      for (Index i = 0; i < r.size(); ++i)
        out[i] = detail::huber(r[i], model.huber_delta);
      return out;
    }
    case LossKind::ExtendedGlmMixture:
      return detail::mixture_nll(model, theta, sample);
    case LossKind::GenericNonlinear: {
      Vec out(sample.n());
      for (Index i = 0; i < sample.n(); ++i)
        out[i] = model.custom_value(theta, sample, i);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

inline double eval_loss(const LossModel& model, const Vec& theta,
                        const SampleSet& sample, Index i) {
  if (i < 0 || i >= sample.n())
    throw std::invalid_argument("observation index out of range");
  detail::check_eval(model, theta, sample);
  switch (model.kind) {
    case LossKind::Quadratic: {
      const double r = sample.y[i] - sample.Z.row(i).dot(theta);
      return r * r;
    }
    case LossKind::LipschitzGlm:
      return detail::huber(sample.y[i] - sample.Z.row(i).dot(theta),
                           model.huber_delta);
    case LossKind::ExtendedGlmMixture: {
      SampleSet one;
      one.Z = sample.Z.row(i);
      one.y = Vec::Constant(1, sample.y[i]);
      return detail::mixture_nll(model, theta, one)[0];
    }
    case LossKind::GenericNonlinear:
      return model.custom_value(theta, sample, i);
  }
  throw std::logic_error("unreachable");
}

/// Centering constants c_{i,theta}: zero, or the expectation of the loss
/// under the generating law stored in the sample.
inline Vec centering_constants(const LossModel& model, const Vec& theta,
                               const SampleSet& sample) {
  if (model.centering == Centering::None) return Vec::Zero(sample.n());
  if (!sample.theta0.has_value())
    throw std::invalid_argument(
        "expectation centering needs the generating truth in the sample");
  switch (model.kind) {
    case LossKind::Quadratic: {
      // E (y - theta' z)^2 = sigma^2 + ((theta0 - theta)' z)^2.
      Vec bias = sample.Z * (*sample.theta0 - theta);
      return (bias.array().square() + sample.noise_sigma * sample.noise_sigma)
          .matrix();
    }
    default: {
      // Monte Carlo expectation under Gaussian mixture / GLM noise.
      Vec c(sample.n());
      const Vec& t0 = *sample.theta0;
      Rng rng(derive_seed(model.centering_seed, 101, 0));
      for (Index i = 0; i < sample.n(); ++i) {
        SampleSet one;
        one.Z = sample.Z.row(i);
        one.y = Vec::Zero(1);
        double acc = 0.0;
        for (Index d = 0; d < model.centering_mc_draws; ++d) {
          one.y[0] = [&] {
            if (model.kind == LossKind::ExtendedGlmMixture) {
              const Vec pi = model.mix_pi(t0);
              const Vec sig = model.mix_sigma(t0);
              double u = rng.uniform01(), cum = 0.0;
              Index k = 0;
              for (; k < pi.size(); ++k) {
                cum += pi[k];
                if (u <= cum) break;
              }
              k = std::min(k, pi.size() - 1);
              Index off = 0;
              for (Index kk = 0; kk < k; ++kk)
                off += model.beta_blocks[static_cast<std::size_t>(kk)];
              const Index pk = model.beta_blocks[static_cast<std::size_t>(k)];
              return one.Z.row(0).segment(off, pk).dot(t0.segment(off, pk)) +
                     sig[k] * rng.normal();
            }
            return one.Z.row(0).dot(t0) + sample.noise_sigma * rng.normal();
          }();
          acc += loss_values(model, theta, one)[0];
        }
        c[i] = acc / static_cast<double>(model.centering_mc_draws);
      }
      return c;
    }
  }
}

inline Vec loss_centered_values(const LossModel& model, const Vec& theta,
                                const SampleSet& sample) {
  Vec v = loss_values(model, theta, sample);
  if (model.centering == Centering::None) return v;
  return v - centering_constants(model, theta, sample);
}

inline double eval_centered(const LossModel& model, const Vec& theta,
                            const SampleSet& sample, Index i) {
  if (model.centering == Centering::None)
    return eval_loss(model, theta, sample, i);
  return loss_centered_values(model, theta, sample)[i];
}

/// Gradient of (1/n) sum_i coef_i rho_theta(X_i) in theta.
inline Vec weighted_loss_grad(const LossModel& model, const Vec& theta,
                              const SampleSet& sample, const Vec& coef) {
  detail::check_eval(model, theta, sample);
  const double n = static_cast<double>(sample.n());
  switch (model.kind) {
    case LossKind::Quadratic: {
      Vec r = sample.y - sample.Z * theta;
      return (-2.0 / n) * (sample.Z.transpose() * r.cwiseProduct(coef));
    }
    case LossKind::LipschitzGlm: {
      Vec r = sample.y - sample.Z * theta;
      Vec h(r.size());
      for (Index i = 0; i < r.size(); ++i)
        h[i] = detail::huber_deriv(r[i], model.huber_delta);
      return (-1.0 / n) * (sample.Z.transpose() * h.cwiseProduct(coef));
    }
    case LossKind::ExtendedGlmMixture: {
      Mat lg = detail::mixture_log_terms(model, theta, sample);
      Vec mx = lg.rowwise().maxCoeff();
      Mat w = (lg.colwise() - mx).array().exp().matrix();
      Vec rowsum = w.rowwise().sum();
      w.array().colwise() /= rowsum.array();  // posterior weights w_{i,k}
      const Vec sig = model.mix_sigma(theta);
      const Vec pi = model.mix_pi(theta);
      Vec grad = Vec::Zero(model.p);
      Index off = 0;
      for (Index k = 0; k < model.mix_r; ++k) {
        const Index pk = model.beta_blocks[static_cast<std::size_t>(k)];
        Vec u = sample.y - sample.Z.middleCols(off, pk) * theta.segment(off, pk);
        Vec wk = w.col(k);
        // d rho / d beta_{j,k} = -w_k u_k z_{j,k} / sigma_k^2
        grad.segment(off, pk) =
            (-1.0 / (n * sig[k] * sig[k])) *
            (sample.Z.middleCols(off, pk).transpose() *
             u.cwiseProduct(wk).cwiseProduct(coef));
        if (model.extras_in_theta) {
          const Index pb = model.beta_dim();
          // d rho / d pi_k = -w_k / pi_k ; d rho / d sigma_k uses u^2.
          grad[pb + k] = (-1.0 / (n * pi[k])) * wk.dot(coef);
          Vec dsig = (u.array().square() / (sig[k] * sig[k] * sig[k]) -
                      1.0 / sig[k])
                         .matrix();
          grad[pb + model.mix_r + k] =
              (-1.0 / n) * (wk.cwiseProduct(dsig)).dot(coef);
        }
        off += pk;
      }
      return grad;
    }
    case LossKind::GenericNonlinear: {
      Vec grad = Vec::Zero(model.p);
      for (Index i = 0; i < sample.n(); ++i)
        grad += coef[i] * model.custom_grad(theta, sample, i);
      return grad / n;
    }
  }
  throw std::logic_error("unreachable");
}

inline Vec mean_loss_grad(const LossModel& model, const Vec& theta,
                          const SampleSet& sample) {
  return weighted_loss_grad(model, theta, sample,
                            Vec::Ones(sample.n()));
}

inline double mean_loss(const LossModel& model, const Vec& theta,
                        const SampleSet& sample) {
  return loss_values(model, theta, sample).mean();
}

// ---------------------------------------------------------------------------
// Componentwise Lipschitz envelopes.
// ---------------------------------------------------------------------------

struct LipschitzEnvelope {
  Mat psi;       // n x p, nonnegative
  double K_n = 0.0;

  double recompute_Kn() const {
    double k = 0.0;
    for (Index j = 0; j < psi.cols(); ++j)
      k = std::max(k, norm_n(psi.col(j)));
    return k;
  }
};

inline LipschitzEnvelope make_envelope(Mat psi) {
  LipschitzEnvelope e;
  e.psi = std::move(psi);
  if ((e.psi.array() < 0).any())
    throw std::invalid_argument("envelope entries must be nonnegative");
  e.K_n = e.recompute_Kn();
  return e;
}

/// Per-coordinate Lipschitz envelope psi_j(X_i, i) of the centered loss over
/// the parameter box. Analytic for each built-in family; sampled with a
/// safety factor for generic losses.
inline LipschitzEnvelope build_envelope(const LossModel& model,
                                        const SampleSet& sample,
                                        double safety = 1.1,
                                        Index sample_points = 4096) {
  const Index n = sample.n();
  Mat psi(n, model.p);
  switch (model.kind) {
    case LossKind::Quadratic: {
      if (model.centering == Centering::Expectation && sample.theta0) {
        // Centered increments are linear: psi_{ij} = 2 |eps_i| |z_{ij}|.
        Vec eps = sample.y - sample.Z * (*sample.theta0);
        psi = (2.0 * eps.cwiseAbs()) * Vec::Ones(model.p).transpose();
        psi.array() *= sample.Z.array().abs();
        break;
      }
      if (!model.box.bounded()) {
        Index bad = 0;
        for (Index j = 0; j < model.p; ++j)
          if (sample.Z.col(j).cwiseAbs().maxCoeff() > 0) { bad = j; break; }
        std::ostringstream os;
        os << "quadratic loss gradient unbounded over the box (coordinate "
           << bad << ")";
        throw std::invalid_argument(os.str());
      }
      // sup over the box of |y_i - theta' z_i|.
      Vec lo(n), hi(n);
      for (Index i = 0; i < n; ++i) {
        double mlo = 0.0, mhi = 0.0;
        for (Index j = 0; j < model.p; ++j) {
          const double a = model.box.lo[j] * sample.Z(i, j);
          const double b = model.box.hi[j] * sample.Z(i, j);
          mlo += std::min(a, b);
          mhi += std::max(a, b);
        }
        lo[i] = mlo;
        hi[i] = mhi;
      }
      Vec umax =
          (sample.y - lo).cwiseAbs().cwiseMax((sample.y - hi).cwiseAbs());
      psi = (2.0 * umax) * Vec::Ones(model.p).transpose();
      psi.array() *= sample.Z.array().abs();
      break;
    }
    case LossKind::LipschitzGlm:
      psi = model.huber_delta * sample.Z.cwiseAbs();
      break;
    case LossKind::ExtendedGlmMixture: {
      if (!model.box.bounded())
        throw std::invalid_argument("mixture envelope needs a bounded box");
      const Index pb = model.beta_dim();
      const double smin = model.extras_in_theta ? model.sigma_min
                                                : model.fixed_extras.sigma.minCoeff();
      Index off = 0;
      for (Index k = 0; k < model.mix_r; ++k) {
        const Index pk = model.beta_blocks[static_cast<std::size_t>(k)];
        const double sk2 = model.extras_in_theta
                               ? smin * smin
                               : model.fixed_extras.sigma[k] *
                                     model.fixed_extras.sigma[k];
        for (Index i = 0; i < n; ++i) {
          double amax = 0.0;
          for (Index j = 0; j < pk; ++j)
            amax += std::max(std::abs(model.box.lo[off + j]),
                             std::abs(model.box.hi[off + j])) *
                    std::abs(sample.Z(i, off + j));
          const double umax = std::abs(sample.y[i]) + amax;
          for (Index j = 0; j < pk; ++j)
            psi(i, off + j) = std::abs(sample.Z(i, off + j)) * umax / sk2;
          if (model.extras_in_theta) {
            psi(i, pb + k) = 1.0 / model.pi_min;
            psi(i, pb + model.mix_r + k) =
                umax * umax / (smin * smin * smin) + 1.0 / smin;
          }
        }
        off += pk;
      }
      break;
    }
    case LossKind::GenericNonlinear: {
      if (!model.box.bounded())
        throw std::invalid_argument("generic envelope needs a bounded box");
      psi.setZero();
      Rng rng(derive_seed(0xb0c5, 7, 0));
      // Box corners (when few) plus random interior points; a dense per-axis
      // grid when the dimension allows it.
      std::vector<Vec> probes;
      if (model.p <= 2) {
        const Index g = 48;
        Vec t(model.p);
        if (model.p == 1) {
          for (Index a = 0; a < g; ++a) {
            t[0] = model.box.lo[0] +
                   (model.box.hi[0] - model.box.lo[0]) *
                       static_cast<double>(a) / static_cast<double>(g - 1);
            probes.push_back(t);
          }
        } else {
          for (Index a = 0; a < g; ++a)
            for (Index b = 0; b < g; ++b) {
              t[0] = model.box.lo[0] + (model.box.hi[0] - model.box.lo[0]) *
                                            static_cast<double>(a) /
                                            static_cast<double>(g - 1);
              t[1] = model.box.lo[1] + (model.box.hi[1] - model.box.lo[1]) *
                                            static_cast<double>(b) /
                                            static_cast<double>(g - 1);
              probes.push_back(t);
            }
        }
      }
      if (model.p <= 12) {
        for (Index c = 0; c < (Index{1} << model.p); ++c) {
          Vec t(model.p);
          for (Index j = 0; j < model.p; ++j)
            t[j] = (c >> j) & 1 ? model.box.hi[j] : model.box.lo[j];
          probes.push_back(t);
        }
      }
      for (Index s = 0; s < sample_points; ++s) probes.push_back(model.box.sample(rng));
      for (const Vec& t : probes) {
        for (Index i = 0; i < n; ++i) {
          Vec g = model.custom_grad(t, sample, i);
          if (!g.allFinite()) {
            Index bad = 0;
            for (Index j = 0; j < g.size(); ++j)
              if (!std::isfinite(g[j])) { bad = j; break; }
            std::ostringstream os;
            os << "gradient not finite over the box (coordinate " << bad << ")";
            throw std::invalid_argument(os.str());
          }
          for (Index j = 0; j < model.p; ++j)
            psi(i, j) = std::max(psi(i, j), std::abs(g[j]));
        }
      }
      psi *= safety;
      break;
    }
  }
  return make_envelope(std::move(psi));
}

struct Condition1Report {
  double max_violation = -std::numeric_limits<double>::infinity();
  Index worst_obs = -1;
  Index trials = 0;
};

/// Sample parameter pairs in the box and report the largest violation of
/// |rho_theta^c - rho_thetatilde^c| <= sum_j |theta_j - thetatilde_j| psi_j.
/// Nonpositive means the envelope certifies the condition on the sample.
inline Condition1Report verify_condition1(const LossModel& model,
                                          const LipschitzEnvelope& envelope,
                                          const SampleSet& sample,
                                          Index trials, std::uint64_t seed) {
  if (!model.box.bounded())
    throw std::invalid_argument("condition-1 sampling needs a bounded box");
  Condition1Report rep;
  rep.trials = trials;
  Rng rng(derive_seed(seed, 11, 0));
  for (Index t = 0; t < trials; ++t) {
    Vec a = model.project(model.box.sample(rng));
    Vec b = (t % 8 == 7) ? a : model.project(model.box.sample(rng));
    Vec la = loss_centered_values(model, a, sample);
    Vec lb = loss_centered_values(model, b, sample);
    Vec bound = envelope.psi * (a - b).cwiseAbs();
    for (Index i = 0; i < sample.n(); ++i) {
      const double v = std::abs(la[i] - lb[i]) - bound[i];
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.worst_obs = i;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Simulation generators (fixed design, fresh noise per replication).
// ---------------------------------------------------------------------------

/// i.i.d. N(0,1) design, optionally column-normalized so ||z_j||_n = 1.
inline Mat gaussian_design(Index n, Index d, std::uint64_t seed,
                           bool normalize = true) {
  Mat Z(n, d);
  Rng rng(derive_seed(seed, 23, 0));
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) Z(i, j) = rng.normal();
  if (normalize)
    for (Index j = 0; j < d; ++j) {
      const double nn = norm_n(Z.col(j));
      if (nn > 0) Z.col(j) /= nn;
    }
  return Z;
}

struct RegressionGenerator {
  Mat Z;          // fixed design
  Vec theta0;     // truth, model layout
  double sigma = 1.0;

  SampleSet sample(std::uint64_t seed) const {
    SampleSet s;
    s.Z = Z;
    s.theta0 = theta0;
    s.noise_sigma = sigma;
    Vec eps(Z.rows());
    Rng rng(derive_seed(seed, 31, 0));
    rng.fill_normal(eps);
    s.y = Z * theta0 + sigma * eps;
    return s;
  }
};

struct MixtureGenerator {
  Mat Z;
  LossModel model;   // ExtendedGlmMixture
  Vec theta0;        // model layout

  SampleSet sample(std::uint64_t seed) const {
    SampleSet s;
    s.Z = Z;
    s.theta0 = theta0;
    const Vec pi = model.mix_pi(theta0);
    const Vec sig = model.mix_sigma(theta0);
    s.y = Vec(Z.rows());
    Rng rng(derive_seed(seed, 37, 0));
    for (Index i = 0; i < Z.rows(); ++i) {
      const double u = rng.uniform01();
      double cum = 0.0;
      Index pick = pi.size() - 1;
      for (Index k = 0; k < pi.size(); ++k) {
        cum += pi[k];
        if (u <= cum) { pick = k; break; }
      }
      Index off = 0;
      for (Index k = 0; k < pick; ++k)
        off += model.beta_blocks[static_cast<std::size_t>(k)];
      const Index pk = model.beta_blocks[static_cast<std::size_t>(pick)];
      s.y[i] = Z.row(i).segment(off, pk).dot(theta0.segment(off, pk)) +
               sig[pick] * rng.normal();
    }
    return s;
  }
};

}  // namespace chainlab
