#pragma once

#include <functional>
#include <optional>

#include "chaining_lab/common.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Geometry of l1 balls: covering constructions, Dudley's chaining bound,
// the gamma2 functional over finite point clouds, and the study comparing
// Dudley against the dual-norm route.
// ---------------------------------------------------------------------------

/// Finite subset of R^n under the ||.||_n metric. Points are columns.
/// Hull surrogates keep the generating l1 coefficients for membership checks.
struct PointCloud {
  Mat points;            // ambient_n x count
  std::optional<Mat> coefficients;  // p x count, ||theta||_1 <= 1 per column

  Index ambient_n() const { return points.rows(); }
  Index size() const { return points.cols(); }

  double distance(Index a, Index b) const {
    return (points.col(a) - points.col(b)).norm() /
           std::sqrt(static_cast<double>(points.rows()));
  }
  /// Cloud radius: max ||v||_n over the points.
  double radius() const {
    double r = 0.0;
    for (Index j = 0; j < size(); ++j) r = std::max(r, norm_n(points.col(j)));
    return r;
  }
  double diameter() const {
    double d = 0.0;
    for (Index a = 0; a < size(); ++a)
      for (Index b = a + 1; b < size(); ++b) d = std::max(d, distance(a, b));
    return d;
  }
};

namespace detail {

/// Pairwise ||.||_n distances, computed once per construction.
struct DistanceTable {
  Mat D;

  double max_in(const std::vector<Index>& cell) const {
    double d = 0.0;
    for (std::size_t a = 0; a < cell.size(); ++a)
      for (std::size_t b = a + 1; b < cell.size(); ++b)
        d = std::max(d, D(cell[a], cell[b]));
    return d;
  }
};

inline DistanceTable distance_table(const PointCloud& cloud) {
  const Index m = cloud.size();
  DistanceTable t;
  t.D = Mat::Zero(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b) {
      const double d = cloud.distance(a, b);
      t.D(a, b) = d;
      t.D(b, a) = d;
    }
  return t;
}

/// Farthest-point ordering: center sequence plus the covering radius after
/// each prefix. Prefixes are greedy covers for every radius at once.
struct FarthestPointOrder {
  std::vector<Index> order;      // first k entries = greedy centers
  std::vector<double> residual;  // residual[k] = max dist after k+1 centers
};

inline FarthestPointOrder farthest_point_order(const DistanceTable& table) {
  const Index m = table.D.rows();
  FarthestPointOrder fp;
  if (m == 0) return fp;
  Vec dist = Vec::Constant(m, std::numeric_limits<double>::infinity());
  Index next = 0;
  for (Index k = 0; k < m; ++k) {
    fp.order.push_back(next);
    double worst = 0.0;
    Index arg = next;
    for (Index i = 0; i < m; ++i) {
      const double d = table.D(i, next);
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > worst) {
        worst = dist[i];
        arg = i;
      }
    }
    fp.residual.push_back(worst);
    next = arg;
    if (worst == 0.0) break;
  }
  return fp;
}

}  // namespace detail

/// Deterministic farthest-point cover: smallest greedy prefix whose covering
/// radius is at most `radius`.
inline std::vector<Index> greedy_cover(const PointCloud& cloud, double radius) {
  if (radius < 0) throw std::invalid_argument("cover radius must be >= 0");
  const auto fp = detail::farthest_point_order(detail::distance_table(cloud));
  std::vector<Index> centers;
  for (std::size_t k = 0; k < fp.order.size(); ++k) {
    centers.push_back(fp.order[k]);
    if (fp.residual[k] <= radius) break;
  }
  return centers;
}

/// Exact minimal cover size by subset enumeration; test oracle, |cloud|<=12.
inline Index minimal_cover_size(const PointCloud& cloud, double radius) {
  const Index m = cloud.size();
  if (m > 12) throw std::invalid_argument("minimal cover oracle capped at 12 points");
  if (m == 0) return 0;
  const Mat D = detail::distance_table(cloud).D;
  for (Index k = 1; k <= m; ++k) {
    std::vector<Index> pick(static_cast<std::size_t>(k));
    std::function<bool(Index, Index)> rec = [&](Index start, Index depth) {
      if (depth == k) {
        for (Index i = 0; i < m; ++i) {
          bool covered = false;
          for (Index c = 0; c < k; ++c)
            if (D(i, pick[static_cast<std::size_t>(c)]) <= radius + 1e-15) {
              covered = true;
              break;
            }
          if (!covered) return false;
        }
        return true;
      }
      for (Index i = start; i < m; ++i) {
        pick[static_cast<std::size_t>(depth)] = i;
        if (rec(i + 1, depth + 1)) return true;
      }
      return false;
    };
    if (rec(0, 0)) return k;
  }
  return m;
}

/// Nested greedy covers at radii 2^{-s} R_n, s = 0..S. Greedy prefixes are
/// nested by construction, so N_s is nondecreasing in s.
struct CoverTree {
  double R_n = 0.0;
  std::vector<std::vector<Index>> levels;

  Index N(Index s) const {
    return static_cast<Index>(levels[static_cast<std::size_t>(s)].size());
  }
  Index depth() const { return static_cast<Index>(levels.size()) - 1; }
};

inline CoverTree build_cover_tree(const PointCloud& cloud, Index S) {
  CoverTree tree;
  tree.R_n = cloud.radius();
  const auto fp = detail::farthest_point_order(detail::distance_table(cloud));
  for (Index s = 0; s <= S; ++s) {
    const double radius = std::ldexp(tree.R_n, static_cast<int>(-s));
    std::vector<Index> centers;
    for (std::size_t k = 0; k < fp.order.size(); ++k) {
      centers.push_back(fp.order[k]);
      if (fp.residual[k] <= radius) break;
    }
    tree.levels.push_back(std::move(centers));
  }
  return tree;
}

/// The chaining-tree sum for given cover sizes:
/// sum_{s=0}^S 2^{-(s-1)} R_n sqrt(2 log(2 N_s)/n) + 2^{-S} R_n.
inline double dudley_from_counts(double R_n, Index ambient_n,
                                 const std::vector<Index>& counts, Index S) {
  if (S < 0 || static_cast<std::size_t>(S + 1) > counts.size())
    throw std::invalid_argument("dudley_from_counts: need counts for 0..S");
  const double n = static_cast<double>(ambient_n);
  double sum = 0.0;
  for (Index s = 0; s <= S; ++s)
    sum += std::ldexp(R_n, static_cast<int>(1 - s)) *
           std::sqrt(2.0 *
                     std::log(2.0 * static_cast<double>(
                                        counts[static_cast<std::size_t>(s)])) /
                     n);
  return sum + std::ldexp(R_n, static_cast<int>(-S));
}

/// Chaining-tree bound along measured greedy covers.
inline double dudley_bound(const PointCloud& cloud, Index S) {
  if (S < 0) throw std::invalid_argument("dudley_bound needs S >= 0");
  if (cloud.size() == 0) return 0.0;
  const CoverTree tree = build_cover_tree(cloud, S);
  std::vector<Index> counts;
  for (Index s = 0; s <= S; ++s) counts.push_back(tree.N(s));
  return dudley_from_counts(tree.R_n, cloud.ambient_n(), counts, S);
}

struct DudleyOpt {
  Index S = 0;
  double value = 0.0;
};

inline DudleyOpt dudley_bound_opt(const PointCloud& cloud, Index S_max = 24) {
  DudleyOpt best;
  if (cloud.size() == 0) return best;
  const CoverTree tree = build_cover_tree(cloud, S_max);
  const double n = static_cast<double>(cloud.ambient_n());
  double sum = 0.0;
  best.value = std::numeric_limits<double>::infinity();
  for (Index S = 0; S <= S_max; ++S) {
    sum += std::ldexp(tree.R_n, static_cast<int>(1 - S)) *
           std::sqrt(2.0 * std::log(2.0 * static_cast<double>(tree.N(S))) / n);
    const double value = sum + std::ldexp(tree.R_n, static_cast<int>(-S));
    if (value < best.value) {
      best.value = value;
      best.S = S;
    }
  }
  return best;
}

/// Dudley along the l1-hull entropy bound log(2 N_s) <= 2^{2s} log(4p):
/// every chaining term collapses to 2 K_n sqrt(2 log(4p)/n).
inline double dudley_entropy_bound(Index p, Index n, double K_n, Index S) {
  const double term = 2.0 * K_n *
                      std::sqrt(2.0 * std::log(4.0 * static_cast<double>(p)) /
                                static_cast<double>(n));
  return static_cast<double>(S + 1) * term +
         std::ldexp(K_n, static_cast<int>(-S));
}

inline DudleyOpt dudley_entropy_bound_opt(Index p, Index n, double K_n,
                                          Index S_max = 24) {
  DudleyOpt best;
  best.value = std::numeric_limits<double>::infinity();
  for (Index S = 0; S <= S_max; ++S) {
    const double v = dudley_entropy_bound(p, n, K_n, S);
    if (v < best.value) {
      best.value = v;
      best.S = S;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// The gamma2 functional.
// ---------------------------------------------------------------------------

/// Increasing partitions A_0, A_1, ... with |A_0| = 1 and |A_s| <= 2^{2^s}.
/// Cells hold point indices.
struct AdmissiblePartitionSequence {
  std::vector<std::vector<std::vector<Index>>> levels;

  static double cell_diameter(const PointCloud& cloud,
                              const std::vector<Index>& cell) {
    double d = 0.0;
    for (std::size_t a = 0; a < cell.size(); ++a)
      for (std::size_t b = a + 1; b < cell.size(); ++b)
        d = std::max(d, cloud.distance(cell[a], cell[b]));
    return d;
  }

  bool valid(const PointCloud& cloud) const {
    if (levels.empty() || levels[0].size() != 1) return false;
    const Index m = cloud.size();
    for (std::size_t s = 0; s < levels.size(); ++s) {
      const double budget = std::pow(2.0, std::pow(2.0, static_cast<double>(s)));
      if (static_cast<double>(levels[s].size()) > budget) return false;
      std::vector<bool> seen(static_cast<std::size_t>(m), false);
      for (const auto& cell : levels[s])
        for (Index i : cell) {
          if (i < 0 || i >= m || seen[static_cast<std::size_t>(i)]) return false;
          seen[static_cast<std::size_t>(i)] = true;
        }
      if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        return false;
      if (s > 0) {
        // refinement: every cell sits inside a parent cell
        for (const auto& cell : levels[s]) {
          bool nested = false;
          for (const auto& parent : levels[s - 1]) {
            bool subset = true;
            for (Index i : cell)
              if (std::find(parent.begin(), parent.end(), i) == parent.end()) {
                subset = false;
                break;
              }
            if (subset) { nested = true; break; }
          }
          if (!nested) return false;
        }
      }
    }
    return true;
  }

  /// sup over points of sum_s 2^{s/2} Delta(A_s(v)).
  double value(const PointCloud& cloud) const {
    double worst = 0.0;
    for (Index v = 0; v < cloud.size(); ++v) {
      double acc = 0.0;
      for (std::size_t s = 0; s < levels.size(); ++s) {
        for (const auto& cell : levels[s])
          if (std::find(cell.begin(), cell.end(), v) != cell.end()) {
            acc += std::pow(2.0, 0.5 * static_cast<double>(s)) *
                   cell_diameter(cloud, cell);
            break;
          }
      }
      worst = std::max(worst, acc);
    }
    return worst;
  }
};

struct Gamma2Result {
  double value = 0.0;
  AdmissiblePartitionSequence sequence;
};

/// Upper bound on gamma2 by recursive farthest-point splitting under the
/// admissible size budget.
inline Gamma2Result gamma2_greedy(const PointCloud& cloud) {
  const Index m = cloud.size();
  if (m < 1) throw std::invalid_argument("gamma2 needs a nonempty cloud");
  const detail::DistanceTable table = detail::distance_table(cloud);
  Gamma2Result out;
  std::vector<std::vector<Index>> current(1);
  for (Index i = 0; i < m; ++i) current[0].push_back(i);
  out.sequence.levels.push_back(current);

  auto split_cell = [&](const std::vector<Index>& cell) {
    // split at the cell's diameter pair, assigning by nearest endpoint
    Index a = cell[0], b = cell[0];
    double best = -1.0;
    for (std::size_t i = 0; i < cell.size(); ++i)
      for (std::size_t j = i + 1; j < cell.size(); ++j) {
        const double d = table.D(cell[i], cell[j]);
        if (d > best) {
          best = d;
          a = cell[i];
          b = cell[j];
        }
      }
    std::vector<Index> ca, cb;
    for (Index i : cell)
      (table.D(i, a) <= table.D(i, b) ? ca : cb).push_back(i);
    return std::make_pair(ca, cb);
  };

  for (std::size_t s = 1;; ++s) {
    bool all_singletons = true;
    for (const auto& cell : current)
      if (cell.size() > 1) { all_singletons = false; break; }
    if (all_singletons) break;
    const double budget_d =
        std::min(std::pow(2.0, std::pow(2.0, static_cast<double>(s))),
                 static_cast<double>(m));
    const auto budget = static_cast<std::size_t>(budget_d);
    // keep splitting the worst-diameter cell while the budget allows
    while (current.size() < budget) {
      std::size_t worst = current.size();
      double worst_d = 0.0;
      for (std::size_t c = 0; c < current.size(); ++c) {
        if (current[c].size() < 2) continue;
        const double d = table.max_in(current[c]);
        if (d >= worst_d) {
          worst_d = d;
          worst = c;
        }
      }
      if (worst == current.size()) break;  // all singletons
      auto [ca, cb] = split_cell(current[worst]);
      current[worst] = ca;
      current.push_back(cb);
    }
    out.sequence.levels.push_back(current);
  }
  // sup over points of the per-level cell diameters, off the cached table
  double worst_point = 0.0;
  for (Index v = 0; v < m; ++v) {
    double acc = 0.0;
    for (std::size_t s = 0; s < out.sequence.levels.size(); ++s) {
      for (const auto& cell : out.sequence.levels[s])
        if (std::find(cell.begin(), cell.end(), v) != cell.end()) {
          acc += std::pow(2.0, 0.5 * static_cast<double>(s)) *
                 table.max_in(cell);
          break;
        }
    }
    worst_point = std::max(worst_point, acc);
  }
  out.value = worst_point;
  return out;
}

namespace detail {

/// All partitions of {0..m-1} via restricted growth strings.
inline void enumerate_partitions(
    Index m, const std::function<void(const std::vector<Index>&)>& visit) {
  std::vector<Index> rgs(static_cast<std::size_t>(m), 0);
  std::function<void(Index, Index)> rec = [&](Index pos, Index maxv) {
    if (pos == m) {
      visit(rgs);
      return;
    }
    for (Index v = 0; v <= maxv + 1; ++v) {
      rgs[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, std::max(maxv, v));
    }
  };
  rec(0, -1);
}

}  // namespace detail

/// Exact gamma2 for clouds of at most 5 points. Levels s >= 2 admit
/// 2^{2^s} >= 16 cells, so all-singleton refinements are optimal there and
/// only the level-1 partition (at most 4 cells) is enumerated.
inline double gamma2_exhaustive(const PointCloud& cloud) {
  const Index m = cloud.size();
  if (m < 1) throw std::invalid_argument("gamma2 needs a nonempty cloud");
  if (m > 5) throw std::invalid_argument("gamma2_exhaustive capped at 5 points");
  if (m == 1) return 0.0;
  const double diam = cloud.diameter();
  if (m <= 4) return diam;
  double best = std::numeric_limits<double>::infinity();
  detail::enumerate_partitions(m, [&](const std::vector<Index>& rgs) {
    const Index blocks = 1 + *std::max_element(rgs.begin(), rgs.end());
    if (blocks > 4) return;
    double worst_cell = 0.0;
    for (Index b = 0; b < blocks; ++b) {
      std::vector<Index> cell;
      for (Index i = 0; i < m; ++i)
        if (rgs[static_cast<std::size_t>(i)] == b) cell.push_back(i);
      worst_cell = std::max(
          worst_cell, AdmissiblePartitionSequence::cell_diameter(cloud, cell));
    }
    best = std::min(best, diam + std::sqrt(2.0) * worst_cell);
  });
  return best;
}

// ---------------------------------------------------------------------------
// Gaussian suprema and the l1-hull surrogate.
// ---------------------------------------------------------------------------

struct GaussianSupEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index replications = 0;
};

/// Monte Carlo estimate of E sup_v X_v, X_v = (1/n) sum_i v_i xi_i.
inline GaussianSupEstimate gaussian_sup_mc(const PointCloud& cloud, Index reps,
                                           std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("need at least 2 replications");
  GaussianSupEstimate out;
  out.replications = reps;
  if (cloud.size() == 0) return out;
  const Index n = cloud.ambient_n();
  std::vector<double> vals(static_cast<std::size_t>(reps));
  Vec xi(n);
  for (Index r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, 103, static_cast<std::uint64_t>(r)));
    rng.fill_normal(xi);
    Vec proj = cloud.points.transpose() * xi / static_cast<double>(n);
    vals[static_cast<std::size_t>(r)] = proj.maxCoeff();
  }
  MeanSe ms = mean_se(vals);
  out.mean = ms.mean;
  out.std_error = ms.se;
  return out;
}

/// Finite surrogate of V = { sum_j theta_j psi_j : ||theta||_1 <= 1 }:
/// all signed vertices plus random interior combinations. Vertices make the
/// surrogate exact for suprema of linear functionals.
inline PointCloud l1_hull_cloud(const Mat& psi, Index extra_samples,
                                std::uint64_t seed) {
  const Index n = psi.rows(), p = psi.cols();
  PointCloud cloud;
  cloud.points.resize(n, 2 * p + extra_samples);
  Mat coef = Mat::Zero(p, 2 * p + extra_samples);
  for (Index j = 0; j < p; ++j) {
    cloud.points.col(2 * j) = psi.col(j);
    coef(j, 2 * j) = 1.0;
    cloud.points.col(2 * j + 1) = -psi.col(j);
    coef(j, 2 * j + 1) = -1.0;
  }
  Rng rng(derive_seed(seed, 107, 0));
  for (Index s = 0; s < extra_samples; ++s) {
    Vec theta(p);
    double tot = 0.0;
    for (Index j = 0; j < p; ++j) {
      theta[j] = -std::log(std::max(rng.uniform01(), 1e-300));
      tot += theta[j];
    }
    const double scale = rng.uniform01();
    for (Index j = 0; j < p; ++j)
      theta[j] *= rng.rademacher() * scale / tot;
    cloud.points.col(2 * p + s) = psi * theta;
    coef.col(2 * p + s) = theta;
  }
  cloud.coefficients = std::move(coef);
  return cloud;
}

/// The dual-norm route: sqrt(2 log(2p)/n) K_n bounds gamma2 of the l1 hull
/// up to a universal constant.
inline double dual_norm_gamma2_bound(const Mat& psi) {
  const Index n = psi.rows(), p = psi.cols();
  if (p == 0) return 0.0;
  double K_n = 0.0;
  for (Index j = 0; j < p; ++j) K_n = std::max(K_n, norm_n(psi.col(j)));
  return std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) /
                   static_cast<double>(n)) *
         K_n;
}

struct EntropyCheckRow {
  Index s = 0;
  Index N_s = 0;
  double measured = 0.0;  // log(2 N_s)
  double bound = 0.0;     // 2^{2s} log(4p)
  double ratio = 0.0;
};

struct EntropyCheckReport {
  std::vector<EntropyCheckRow> rows;
  double max_ratio = 0.0;
  bool flagged = false;  // beyond the greedy one-level slack
};

/// Measured greedy-cover entropies of hull surrogates against the
/// 2^{2s} log(4p) bound. Greedy covers may exceed minimal ones by one
/// dyadic level, so the flag compares against the bound at s+1.
inline EntropyCheckReport entropy_bound_check(Index p, Index s_max,
                                              const std::vector<PointCloud>& clouds) {
  EntropyCheckReport rep;
  const double l4p = std::log(4.0 * static_cast<double>(p));
  for (const auto& cloud : clouds) {
    CoverTree tree = build_cover_tree(cloud, s_max);
    for (Index s = 0; s <= s_max; ++s) {
      EntropyCheckRow row;
      row.s = s;
      row.N_s = tree.N(s);
      row.measured = std::log(2.0 * static_cast<double>(row.N_s));
      row.bound = std::pow(4.0, static_cast<double>(s)) * l4p;
      row.ratio = row.measured / row.bound;
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      const double slack_bound = std::pow(4.0, static_cast<double>(s + 1)) * l4p;
      if (row.measured > slack_bound) rep.flagged = true;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The (log n)-factor comparison study.
// ---------------------------------------------------------------------------

struct LogFactorRow {
  Index n = 0;
  Index p = 0;
  double dudley = 0.0;            // entropy-bound route, minimized over S
  double dudley_surrogate = 0.0;  // measured covers on the finite surrogate
  double dualnorm = 0.0;
  double mc_sup = 0.0;
  double mc_se = 0.0;
  double gamma2 = 0.0;            // greedy gamma2 of the surrogate
  double ratio_dudley_dual = 0.0;
  double ratio_dudley_mc = 0.0;
  double ratio_dual_mc = 0.0;
  // gamma2 / (sqrt(n) mc_sup): the process X_v = (1/n) sum v_i xi_i has
  // canonical metric ||.||_n / sqrt(n), so the sandwich ratio carries 1/sqrt(n)
  double ratio_gamma2_mc = 0.0;
};

struct LogFactorStudy {
  std::vector<LogFactorRow> rows;
  LinearFit fit;  // ratio_dudley_dual ~ a + b log n
};

namespace detail {

/// Gaussian columns normalized so ||psi_j||_n = 1.
inline Mat normalized_gaussian_columns(Index n, Index p, std::uint64_t seed) {
  Mat psi(n, p);
  Rng rng(seed);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) psi(i, j) = rng.normal();
    const double nn = norm_n(psi.col(j));
    if (nn > 0) psi.col(j) /= nn;
  }
  return psi;
}

}  // namespace detail

/// For each n: the Dudley bound of the l1 hull (entropy route), the measured
/// surrogate Dudley value, the dual-norm bound, and an MC Gaussian supremum.
/// Fits ratio = a + b log n; a positive slope exhibits the redundant log n
/// factor of the Dudley route.
inline LogFactorStudy logfactor_study(Index p, const std::vector<Index>& n_grid,
                                      Index reps, std::uint64_t seed,
                                      Index extra_samples = 0) {
  LogFactorStudy study;
  std::vector<double> xs, ys;
  for (Index n : n_grid) {
    Mat psi = detail::normalized_gaussian_columns(
        n, p, derive_seed(seed, 109, static_cast<std::uint64_t>(n)));
    double K_n = 0.0;
    for (Index j = 0; j < p; ++j) K_n = std::max(K_n, norm_n(psi.col(j)));
    PointCloud cloud =
        l1_hull_cloud(psi, extra_samples > 0 ? extra_samples : 2 * p,
                      derive_seed(seed, 113, static_cast<std::uint64_t>(n)));
    LogFactorRow row;
    row.n = n;
    row.p = p;
    row.dudley = dudley_entropy_bound_opt(p, n, K_n).value;
    row.dudley_surrogate = dudley_bound_opt(cloud).value;
    row.dualnorm = dual_norm_gamma2_bound(psi);
    row.gamma2 = gamma2_greedy(cloud).value;
    GaussianSupEstimate mc = gaussian_sup_mc(
        cloud, reps, derive_seed(seed, 127, static_cast<std::uint64_t>(n)));
    row.mc_sup = mc.mean;
    row.mc_se = mc.std_error;
    row.ratio_dudley_dual = row.dudley / row.dualnorm;
    row.ratio_dudley_mc = row.mc_sup > 0 ? row.dudley / row.mc_sup : 0.0;
    row.ratio_dual_mc = row.mc_sup > 0 ? row.dualnorm / row.mc_sup : 0.0;
    row.ratio_gamma2_mc =
        row.mc_sup > 0
            ? row.gamma2 / (std::sqrt(static_cast<double>(n)) * row.mc_sup)
            : 0.0;
    study.rows.push_back(row);
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(row.ratio_dudley_dual);
  }
  if (xs.size() >= 2) study.fit = fit_line(xs, ys);
  return study;
}

}  // namespace chainlab
