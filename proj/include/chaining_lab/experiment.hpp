#pragma once

#include <filesystem>
#include <json.hpp>

#include "chaining_lab/chaining.hpp"
#include "chaining_lab/io.hpp"
#include "chaining_lab/oracle.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Batch experiment runner: JSON config in, CSV/JSON/SVG artifacts out.
// Identical config + seed produces byte-identical artifacts for any thread
// count. Exit contract: 0 ok, 1 config error, 2 a check verdict failed.
// ---------------------------------------------------------------------------

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error("config error at " + path + ": " + what) {}
};

namespace cfgdetail {

inline const json& need(const json& j, const std::string& at,
                        const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(at + "/" + key, "missing required key");
  return j.at(key);
}

inline double num(const json& j, const std::string& at, const std::string& key,
                  std::optional<double> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(at + "/" + key, "missing required number");
  }
  if (!j.at(key).is_number())
    throw ConfigError(at + "/" + key, "number required");
  return j.at(key).get<double>();
}

inline Index integer(const json& j, const std::string& at,
                     const std::string& key,
                     std::optional<Index> def = std::nullopt) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(at + "/" + key, "missing required integer");
  }
  if (!j.at(key).is_number_integer())
    throw ConfigError(at + "/" + key, "integer required");
  return j.at(key).get<Index>();
}

inline std::vector<Index> index_grid(const json& j, const std::string& at,
                                     const std::string& key) {
  const json& g = need(j, at, key);
  if (!g.is_array() || g.empty())
    throw ConfigError(at + "/" + key, "nonempty array required");
  std::vector<Index> out;
  for (const auto& v : g) {
    if (!v.is_number_integer() || v.get<Index>() < 1)
      throw ConfigError(at + "/" + key, "positive integers required");
    out.push_back(v.get<Index>());
  }
  return out;
}

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(Index v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

}  // namespace cfgdetail

// --- regime E_n grids ---------------------------------------------------------

/// E_n cells for any regime; linear is exact through the dual norm, the
/// GLM and extended-GLM regimes run the vertex+ascent search on seeded toys.
inline std::vector<EnGridCell> en_regime_grid(Regime regime,
                                              const std::vector<Index>& ns,
                                              const std::vector<Index>& ps,
                                              double M, Index reps,
                                              std::uint64_t seed,
                                              const SearchOptions& opts = {}) {
  if (regime == Regime::Linear) return en_linear_grid(ns, ps, M, reps, seed);
  std::vector<EnGridCell> cells;
  for (Index p : ps)
    for (Index n : ns) {
      const std::uint64_t cell_seed =
          derive_seed(seed, 167, static_cast<std::uint64_t>(p * 131071 + n));
      EnGridCell cell;
      cell.n = n;
      cell.p = p;
      cell.M = M;
      if (regime == Regime::Glm) {
        Mat Z = gaussian_design(n, p, cell_seed);
        LossModel model = LossModel::huber_glm(p, 1.0);
        RegressionGenerator gen{Z, Vec::Zero(p), 1.0};
        SampleSet s = gen.sample(derive_seed(cell_seed, 3, 0));
        LipschitzEnvelope env = build_envelope(model, s);
        ProcessModel proc = ProcessModel::from_loss(model, s);
        BallSpec ball;
        ball.theta_star = Vec::Zero(p);
        ball.M = M;
        ball.restrict_to_domain = false;
        SearchOptions o = opts;
        o.seed = derive_seed(cell_seed, 5, 0);
        ProcessEstimate est = conditional_mean_En(
            proc, ball, reps, derive_seed(cell_seed, 7, 0),
            Multiplier::Rademacher, o);
        cell.estimate = est.mean;
        cell.se = est.std_error;
        cell.bound = regime_bound(Regime::Glm, p, n, env.K_n, 1, 1.0, M);
      } else if (regime == Regime::ExtendedGlm) {
        // two-component mixture toy with fixed weights and scales
        const Index half = std::max<Index>(1, p / 2);
        std::vector<Index> blocks = {half, p - half > 0 ? p - half : 1};
        MixtureParams extras;
        extras.pi = Vec::Constant(2, 0.5);
        extras.sigma = Vec::Constant(2, 1.0);
        extras.beta = {Vec::Zero(blocks[0]), Vec::Zero(blocks[1])};
        LossModel model = LossModel::mixture_fixed_extras(blocks, 2.0, extras);
        Mat Z = gaussian_design(n, model.p, cell_seed);
        Vec theta0 = Vec::Zero(model.p);
        theta0[0] = 1.0;
        theta0[blocks[0]] = -1.0;
        MixtureGenerator gen{Z, model, theta0};
        SampleSet s = gen.sample(derive_seed(cell_seed, 3, 0));
        LipschitzEnvelope env = build_envelope(model, s);
        ProcessModel proc = ProcessModel::from_loss(model, s);
        BallSpec ball;
        ball.theta_star = Vec::Zero(model.p);
        ball.M = M;
        SearchOptions o = opts;
        o.seed = derive_seed(cell_seed, 5, 0);
        ProcessEstimate est = conditional_mean_En(
            proc, ball, reps, derive_seed(cell_seed, 7, 0),
            Multiplier::Rademacher, o);
        cell.estimate = est.mean;
        cell.se = est.std_error;
        cell.bound = regime_bound(Regime::ExtendedGlm, model.p, n, env.K_n, 2,
                                  1.0, M);
      } else {
        throw std::invalid_argument("nonlinear grid cells need explicit setup");
      }
      cell.ratio = cell.bound > 0 ? cell.estimate / cell.bound : 0.0;
      cells.push_back(cell);
    }
  return cells;
}

struct ScalingStudy {
  std::vector<EnGridCell> cells;
  LinearFit fit_n;  // log E ~ log n pooled over p (slope near -1/2)
  LinearFit fit_p;  // log E ~ log sqrt(log 2p) pooled over n (slope near 1)
};

/// E_n across the grid plus fitted exponents against 1/sqrt(n) and
/// sqrt(log p).
inline ScalingStudy scaling_study(Regime regime, const std::vector<Index>& ns,
                                  const std::vector<Index>& ps, double M,
                                  Index reps, std::uint64_t seed,
                                  const SearchOptions& opts = {}) {
  ScalingStudy study;
  study.cells = en_regime_grid(regime, ns, ps, M, reps, seed, opts);
  std::vector<double> xn, yn, xp, yp;
  for (const auto& c : study.cells) {
    if (c.estimate <= 0) continue;
    // remove the sqrt(log 2p) part before fitting the n exponent and vice versa
    const double lp = std::sqrt(std::log(2.0 * static_cast<double>(c.p)));
    xn.push_back(std::log(static_cast<double>(c.n)));
    yn.push_back(std::log(c.estimate / lp));
    xp.push_back(std::log(lp));
    yp.push_back(std::log(c.estimate * std::sqrt(static_cast<double>(c.n))));
  }
  if (xn.size() >= 2) study.fit_n = fit_line(xn, yn);
  if (xp.size() >= 2) study.fit_p = fit_line(xp, yp);
  return study;
}

// --- subcommand payload runners ---------------------------------------------

namespace rundetail {

struct Context {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::filesystem::path out_dir;
  bool any_check_failed = false;
};

inline void emit(const Context& ctx, const std::string& name,
                 const std::string& content) {
  write_text_file((ctx.out_dir / name).string(), content);
}

// --- solve -------------------------------------------------------------------

inline LossModel model_from_config(const json& m, const std::string& at,
                                   Index design_cols) {
  const std::string kind = cfgdetail::need(m, at, "kind").get<std::string>();
  const Centering centering =
      m.value("centering", std::string("none")) == "expectation"
          ? Centering::Expectation
          : Centering::None;
  if (kind == "quadratic") return LossModel::quadratic(design_cols, centering);
  if (kind == "huber")
    return LossModel::huber_glm(design_cols,
                                cfgdetail::num(m, at, "huber_delta", 1.0),
                                centering);
  if (kind == "mixture") {
    std::vector<Index> blocks;
    for (const auto& b : cfgdetail::need(m, at, "beta_blocks"))
      blocks.push_back(b.get<Index>());
    return LossModel::mixture(blocks, cfgdetail::num(m, at, "beta_bound", 2.0),
                              cfgdetail::num(m, at, "pi_min", 0.05),
                              cfgdetail::num(m, at, "sigma_min", 0.25),
                              cfgdetail::num(m, at, "sigma_max", 4.0));
  }
  throw ConfigError(at + "/kind", "unknown model kind '" + kind + "'");
}

inline SampleSet data_from_config(const json& d, const std::string& at,
                                  const LossModel& model, std::uint64_t seed) {
  const std::string type = cfgdetail::need(d, at, "type").get<std::string>();
  if (type == "inline") {
    SampleSet s;
    const json& Z = cfgdetail::need(d, at, "Z");
    const json& y = cfgdetail::need(d, at, "y");
    if (!Z.is_array() || Z.empty() || !y.is_array() || Z.size() != y.size())
      throw ConfigError(at, "inline data needs matching Z rows and y");
    const Index n = static_cast<Index>(Z.size());
    const Index dcols = static_cast<Index>(Z.at(0).size());
    s.Z.resize(n, dcols);
    s.y.resize(n);
    for (Index i = 0; i < n; ++i) {
      s.y[i] = y.at(static_cast<std::size_t>(i)).get<double>();
      const auto& row = Z.at(static_cast<std::size_t>(i));
      if (static_cast<Index>(row.size()) != dcols)
        throw ConfigError(at + "/Z", "ragged rows");
      for (Index j = 0; j < dcols; ++j)
        s.Z(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return s;
  }
  if (type == "gaussian-regression") {
    const Index n = cfgdetail::integer(d, at, "n");
    const Index dcols = cfgdetail::integer(d, at, "d");
    Mat Z = gaussian_design(n, dcols, derive_seed(seed, 171, 0),
                            d.value("normalize", true));
    Vec theta0 = Vec::Zero(model.p);
    if (d.contains("theta0")) {
      for (const auto& pair : d.at("theta0")) {
        if (!pair.is_array() || pair.size() != 2)
          throw ConfigError(at + "/theta0", "sparse pairs [index, value] required");
        const Index j = pair.at(0).get<Index>();
        if (j < 0 || j >= model.p)
          throw ConfigError(at + "/theta0", "index out of range");
        theta0[j] = pair.at(1).get<double>();
      }
    }
    if (model.kind == LossKind::ExtendedGlmMixture) {
      MixtureGenerator gen{Z, model, theta0};
      return gen.sample(derive_seed(seed, 173, 0));
    }
    RegressionGenerator gen{Z, theta0, cfgdetail::num(d, at, "sigma", 1.0)};
    return gen.sample(derive_seed(seed, 173, 0));
  }
  throw ConfigError(at + "/type", "unknown data type '" + type + "'");
}

inline void run_solve(const json& payload, Context& ctx) {
  const std::string at = "/solve";
  const json& mj = cfgdetail::need(payload, at, "model");
  const json& dj = cfgdetail::need(payload, at, "data");
  // design width first: inline -> columns, generated -> d
  Index dcols;
  if (cfgdetail::need(dj, at + "/data", "type").get<std::string>() == "inline")
    dcols = static_cast<Index>(cfgdetail::need(dj, at + "/data", "Z").at(0).size());
  else
    dcols = cfgdetail::integer(dj, at + "/data", "d");
  LossModel model = model_from_config(mj, at + "/model", dcols);
  SampleSet sample = data_from_config(dj, at + "/data", model, ctx.seed);

  SolverConfig scfg;
  scfg.lambda = cfgdetail::num(payload, at, "lambda");
  if (payload.contains("solver")) {
    const json& sj = payload.at("solver");
    scfg.max_iterations =
        cfgdetail::integer(sj, at + "/solver", "max_iterations", Index{100000});
    scfg.grad_tolerance = cfgdetail::num(sj, at + "/solver", "tolerance", 0.0);
    scfg.restarts = cfgdetail::integer(sj, at + "/solver", "restarts", Index{16});
    if (sj.value("staedler_mask", false))
      scfg.penalty_mask = staedler_mask(model);
  }
  scfg.seed = derive_seed(ctx.seed, 177, 0);
  Solution sol = solve(model, sample, scfg);

  json out;
  out["theta"] = std::vector<double>(sol.theta.data(),
                                     sol.theta.data() + sol.theta.size());
  out["objective"] = sol.objective;
  if (std::isfinite(sol.kkt))
    out["kkt"] = sol.kkt;
  else
    out["kkt"] = nullptr;
  out["iterations"] = sol.iterations;
  out["restart_index"] = sol.restart_index;
  out["converged"] = sol.converged;
  emit(ctx, "solution.json", out.dump(2) + "\n");

  if (payload.value("dump_envelope", false)) {
    CsvBuilder head;
    head.provenance(ctx.config_hash, ctx.seed, kVersion);
    emit(ctx, "envelope.csv",
         head.str() + envelope_csv(build_envelope(model, sample)));
  }
}

// --- simulate ------------------------------------------------------------------

inline Regime regime_from_string(const std::string& s, const std::string& at) {
  if (s == "linear") return Regime::Linear;
  if (s == "glm") return Regime::Glm;
  if (s == "extended-glm") return Regime::ExtendedGlm;
  if (s == "nonlinear") return Regime::Nonlinear;
  throw ConfigError(at, "unknown regime '" + s + "'");
}

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Linear: return "linear";
    case Regime::Glm: return "glm";
    case Regime::ExtendedGlm: return "extended-glm";
    case Regime::Nonlinear: return "nonlinear";
  }
  return "?";
}

inline std::string cells_csv(const Context& ctx, Regime regime,
                             const std::vector<EnGridCell>& cells) {
  CsvBuilder csv;
  csv.provenance(ctx.config_hash, ctx.seed, kVersion);
  csv.header({"regime", "n", "p", "M", "estimate", "se", "bound", "ratio"});
  for (const auto& c : cells)
    csv.row({regime_name(regime), cfgdetail::cell(c.n), cfgdetail::cell(c.p),
             cfgdetail::cell(c.M), cfgdetail::cell(c.estimate),
             cfgdetail::cell(c.se), cfgdetail::cell(c.bound),
             cfgdetail::cell(c.ratio)});
  return csv.str();
}

inline std::vector<double> number_grid(const json& j, const std::string& at,
                                       const std::string& key, double fallback) {
  if (!j.contains(key)) return {fallback};
  const json& g = j.at(key);
  if (!g.is_array() || g.empty())
    throw ConfigError(at + "/" + key, "nonempty array required");
  std::vector<double> out;
  for (const auto& v : g) {
    if (!v.is_number()) throw ConfigError(at + "/" + key, "numbers required");
    out.push_back(v.get<double>());
  }
  return out;
}

inline void run_simulate(const json& payload, Context& ctx) {
  const std::string at = "/simulate";
  const Regime regime = regime_from_string(
      payload.value("regime", std::string("linear")), at + "/regime");
  const auto ns = cfgdetail::index_grid(payload, at, "n_grid");
  const auto ps = cfgdetail::index_grid(payload, at, "p_grid");
  const auto Ms =
      number_grid(payload, at, "M_grid", cfgdetail::num(payload, at, "M", 1.0));
  const Index reps = cfgdetail::integer(payload, at, "reps", Index{2000});
  std::vector<EnGridCell> cells;
  for (double M : Ms) {
    auto batch = en_regime_grid(regime, ns, ps, M, reps,
                                derive_seed(ctx.seed, 181, 0));
    cells.insert(cells.end(), batch.begin(), batch.end());
  }
  emit(ctx, "simulate.csv", cells_csv(ctx, regime, cells));
}

// --- check ---------------------------------------------------------------------

inline void run_check(const json& payload, Context& ctx) {
  const std::string at = "/check";
  const Index n = cfgdetail::integer(payload, at, "n", Index{128});
  const Index p = cfgdetail::integer(payload, at, "p", Index{16});
  const double sigma = cfgdetail::num(payload, at, "sigma", 1.0);
  const double M = cfgdetail::num(payload, at, "M", 1.0);
  const auto ts =
      number_grid(payload, at, "t_grid", cfgdetail::num(payload, at, "t", 3.0));
  const Index reps = cfgdetail::integer(payload, at, "reps", Index{2000});
  std::vector<std::string> which;
  if (payload.contains("which")) {
    for (const auto& w : payload.at("which")) which.push_back(w.get<std::string>());
  } else {
    which = {"symmetrization", "contraction", "massart", "bernstein", "peeling"};
  }

  Mat Z = gaussian_design(n, p, derive_seed(ctx.seed, 191, 0));
  LinearProcessGenerator lin{RegressionGenerator{Z, Vec::Zero(p), sigma}};

  CsvBuilder csv;
  csv.provenance(ctx.config_hash, ctx.seed, kVersion);
  csv.header({"check", "n", "p", "t", "reps", "statistic", "threshold",
              "bound", "se", "verdict"});

  for (double t : ts) {
    auto add = [&](const std::string& name, double stat, const CheckReport& r) {
      csv.row({name, cfgdetail::cell(n), cfgdetail::cell(p), cfgdetail::cell(t),
               cfgdetail::cell(reps), cfgdetail::cell(stat),
               cfgdetail::cell(r.threshold), cfgdetail::cell(r.bound),
               cfgdetail::cell(r.se), cfgdetail::cell(r.verdict)});
      if (!r.verdict) ctx.any_check_failed = true;
    };

    for (const auto& name : which) {
      const std::uint64_t s = derive_seed(ctx.seed, 193, fnv1a(name));
      if (name == "symmetrization") {
        CheckReport r = symmetrization_check(lin, M, std::max(t, 4.0), reps, s);
        add(name, r.lhs_freq, r);
      } else if (name == "contraction") {
        LossModel model = LossModel::huber_glm(p, 1.0);
        SampleSet samp = lin.gen.sample(derive_seed(s, 1, 0));
        ProcessModel proc = ProcessModel::from_loss(model, samp);
        BallSpec ball;
        ball.theta_star = Vec::Zero(p);
        ball.M = M;
        ball.restrict_to_domain = false;
        CheckReport r = contraction_check(proc, model.huber_delta * samp.Z,
                                          ball, reps, s);
        add(name, r.extra, r);
      } else if (name == "massart") {
        CheckReport r = massart_check(Z, M, t, reps, s);
        add(name, r.lhs_freq, r);
      } else if (name == "bernstein") {
        // (L, tau) must certify uniform sub-Gaussianity; defaults do for the
        // |N(0,1)| envelope entries, overrides allow probing invalid pairs.
        const double L = cfgdetail::num(payload, at, "bernstein_L", 2.0);
        const double tau = cfgdetail::num(
            payload, at, "bernstein_tau",
            std::sqrt(2.0 * L * L *
                      (1.0 / std::sqrt(1.0 - 2.0 / (L * L)) - 1.0)));
        CheckReport r = bernstein_check(p, n, L, tau, t, reps, s);
        add(name, r.lhs_freq, r);
      } else if (name == "peeling") {
        const double lambda_star =
            std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) /
                      static_cast<double>(n)) *
            lin.population_K();
        CheckReport r = peeling_check(lin, M, lambda_star, 1.0, t, reps, s);
        add(name, r.lhs_freq, r);
      } else if (name == "fixed-m") {
        const double lambda_star =
            std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) /
                      static_cast<double>(n)) *
            lin.population_K();
        CheckReport r = fixed_m_check(lin, M, lambda_star, 1.0, t, reps, s);
        add(name, r.lhs_freq, r);
      } else {
        throw ConfigError(at + "/which", "unknown check '" + name + "'");
      }
    }
  }
  emit(ctx, "check.csv", csv.str());
}

// --- chain ---------------------------------------------------------------------

inline void run_chain(const json& payload, Context& ctx) {
  const std::string at = "/chain";
  const Index p = cfgdetail::integer(payload, at, "p", Index{64});
  const auto n_grid = cfgdetail::index_grid(payload, at, "n_grid");
  const Index reps = cfgdetail::integer(payload, at, "reps", Index{400});
  const Index extra = cfgdetail::integer(payload, at, "extra_samples", Index{2 * p});
  LogFactorStudy study =
      logfactor_study(p, n_grid, reps, derive_seed(ctx.seed, 197, 0), extra);

  CsvBuilder csv;
  csv.provenance(ctx.config_hash, ctx.seed, kVersion);
  csv.header({"n", "p", "dudley", "dualnorm", "mc_sup", "ratio",
              "dudley_surrogate", "gamma2", "mc_se", "ratio_dudley_mc",
              "ratio_dual_mc", "ratio_gamma2_mc"});
  std::vector<double> xs, ys;
  for (const auto& r : study.rows) {
    csv.row({cfgdetail::cell(r.n), cfgdetail::cell(r.p),
             cfgdetail::cell(r.dudley), cfgdetail::cell(r.dualnorm),
             cfgdetail::cell(r.mc_sup), cfgdetail::cell(r.ratio_dudley_dual),
             cfgdetail::cell(r.dudley_surrogate), cfgdetail::cell(r.gamma2),
             cfgdetail::cell(r.mc_se), cfgdetail::cell(r.ratio_dudley_mc),
             cfgdetail::cell(r.ratio_dual_mc),
             cfgdetail::cell(r.ratio_gamma2_mc)});
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(r.ratio_dudley_dual);
  }
  emit(ctx, "chain.csv", csv.str());

  json fit;
  fit["intercept"] = study.fit.intercept;
  fit["slope"] = study.fit.slope;
  fit["r2"] = study.fit.r2;
  emit(ctx, "chain_fit.json", fit.dump(2) + "\n");

  if (payload.value("svg", false))
    emit(ctx, "chain.svg",
         svg_line_plot(xs, ys, "log n", "dudley / dualnorm"));

  if (payload.contains("entropy_table")) {
    const json& ej = payload.at("entropy_table");
    CsvBuilder etab;
    etab.provenance(ctx.config_hash, ctx.seed, kVersion);
    etab.header({"p", "s", "N_s", "log_2Ns", "bound", "ratio"});
    const Index s_max = cfgdetail::integer(ej, at + "/entropy_table", "s_max", Index{4});
    const Index en = cfgdetail::integer(ej, at + "/entropy_table", "n", Index{256});
    for (const auto& pj : cfgdetail::need(ej, at + "/entropy_table", "p_list")) {
      const Index pp = pj.get<Index>();
      Mat psi = chainlab::detail::normalized_gaussian_columns(
          en, pp, derive_seed(ctx.seed, 199, static_cast<std::uint64_t>(pp)));
      std::vector<PointCloud> clouds = {
          l1_hull_cloud(psi, 2 * pp, derive_seed(ctx.seed, 211, static_cast<std::uint64_t>(pp)))};
      EntropyCheckReport rep = entropy_bound_check(pp, s_max, clouds);
      for (const auto& row : rep.rows)
        etab.row({cfgdetail::cell(pp), cfgdetail::cell(row.s),
                  cfgdetail::cell(row.N_s), cfgdetail::cell(row.measured),
                  cfgdetail::cell(row.bound), cfgdetail::cell(row.ratio)});
    }
    emit(ctx, "entropy.csv", etab.str());
  }
}

// --- oracle --------------------------------------------------------------------

inline void run_oracle(const json& payload, Context& ctx) {
  const std::string at = "/oracle";
  OracleExperimentConfig cfg;
  cfg.n = cfgdetail::integer(payload, at, "n", Index{200});
  cfg.p = cfgdetail::integer(payload, at, "p", Index{400});
  cfg.s0 = cfgdetail::integer(payload, at, "s0", Index{3});
  cfg.sigma = cfgdetail::num(payload, at, "sigma", 1.0);
  cfg.delta = cfgdetail::num(payload, at, "delta", 0.5);
  cfg.lambda_multiple = cfgdetail::num(payload, at, "lambda_multiple", 2.0);
  cfg.reps = cfgdetail::integer(payload, at, "reps", Index{200});
  cfg.seed = derive_seed(ctx.seed, 223, 0);
  if (!(cfg.delta > 0 && cfg.delta < 1))
    throw ConfigError(at + "/delta", "need 0 < delta < 1");
  if (!(cfg.lambda_multiple > 1))
    throw ConfigError(at + "/lambda_multiple", "need multiple > 1");
  OracleReport rep = oracle_experiment(cfg);

  json out;
  out["delta"] = rep.delta;
  out["L"] = rep.L;
  out["L_delta"] = rep.L_delta;
  out["Gamma0"] = rep.Gamma0;
  out["GammaStar"] = rep.GammaStar;
  out["phi2"] = rep.phi2;
  out["margin_c"] = rep.margin_c;
  out["lambda0_mean"] = rep.lambda0_mean;
  out["lambda_mean"] = rep.lambda_mean;
  out["M0_mean"] = rep.M0_mean;
  out["Mstar_mean"] = rep.Mstar_mean;
  out["excess_star"] = rep.excess_star;
  out["event_T_freq"] = rep.event_T_freq;
  out["bound_freq_given_T"] = rep.bound_freq_given_T;
  emit(ctx, "oracle_report.json", out.dump(2) + "\n");

  CsvBuilder csv;
  csv.provenance(ctx.config_hash, ctx.seed, kVersion);
  csv.header({"rep", "lambda0", "lambda", "T_holds", "lhs", "rhs", "verdict",
              "l1_error", "excess", "iterations", "solver_ok"});
  for (const auto& r : rep.rows)
    csv.row({cfgdetail::cell(r.rep), cfgdetail::cell(r.lambda0),
             cfgdetail::cell(r.lambda), cfgdetail::cell(r.T_holds),
             cfgdetail::cell(r.lhs), cfgdetail::cell(r.rhs),
             cfgdetail::cell(r.verdict), cfgdetail::cell(r.l1_error),
             cfgdetail::cell(r.excess), cfgdetail::cell(r.iterations),
             cfgdetail::cell(r.solver_ok)});
  emit(ctx, "oracle_reps.csv", csv.str());
}

// --- scaling -------------------------------------------------------------------

inline void run_scaling(const json& payload, Context& ctx) {
  const std::string at = "/scaling";
  const Regime regime = regime_from_string(
      payload.value("regime", std::string("linear")), at + "/regime");
  const auto ns = cfgdetail::index_grid(payload, at, "n_grid");
  const auto ps = cfgdetail::index_grid(payload, at, "p_grid");
  const double M = cfgdetail::num(payload, at, "M", 1.0);
  const Index reps = cfgdetail::integer(payload, at, "reps", Index{2000});
  ScalingStudy study =
      scaling_study(regime, ns, ps, M, reps, derive_seed(ctx.seed, 227, 0));
  emit(ctx, "scaling.csv", cells_csv(ctx, regime, study.cells));
  json fits;
  fits["n_exponent"] = {{"intercept", study.fit_n.intercept},
                        {"slope", study.fit_n.slope},
                        {"r2", study.fit_n.r2}};
  fits["p_exponent"] = {{"intercept", study.fit_p.intercept},
                        {"slope", study.fit_p.slope},
                        {"r2", study.fit_p.r2}};
  emit(ctx, "scaling_fits.json", fits.dump(2) + "\n");
}

}  // namespace rundetail

// --- entry point -----------------------------------------------------------------

/// Run one subcommand from a JSON config file. Returns the process exit
/// status: 0 success, 1 configuration error, 2 a check verdict failed.
inline int run_experiment(const std::string& subcommand,
                          const std::string& config_path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<std::string> out_override,
                          std::string* error_out = nullptr) {
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("/", "cannot read config file " + config_path);
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    rundetail::Context ctx;
    if (seed_override)
      ctx.seed = *seed_override;
    else if (cfg.contains("seed"))
      ctx.seed = cfg.at("seed").get<std::uint64_t>();
    else
      throw ConfigError("/seed", "missing required seed");
    std::string out_dir = out_override.value_or(cfg.value("out", std::string(".")));
    json hashed = cfg;
    hashed["seed"] = ctx.seed;  // overrides participate in the provenance hash
    hashed["out"] = "";
    ctx.config_hash = fnv1a(hashed.dump());
    ctx.out_dir = out_dir;
    std::filesystem::create_directories(ctx.out_dir);

    if (!cfg.contains(subcommand))
      throw ConfigError("/" + subcommand, "missing payload for subcommand");
    const json& payload = cfg.at(subcommand);

    if (subcommand == "solve")
      rundetail::run_solve(payload, ctx);
    else if (subcommand == "simulate")
      rundetail::run_simulate(payload, ctx);
    else if (subcommand == "check")
      rundetail::run_check(payload, ctx);
    else if (subcommand == "chain")
      rundetail::run_chain(payload, ctx);
    else if (subcommand == "oracle")
      rundetail::run_oracle(payload, ctx);
    else if (subcommand == "scaling")
      rundetail::run_scaling(payload, ctx);
    else
      throw ConfigError("/", "unknown subcommand '" + subcommand + "'");

    return ctx.any_check_failed ? 2 : 0;
  } catch (const ConfigError& e) {
    if (error_out) *error_out = e.what();
    return 1;
  } catch (const std::exception& e) {
    if (error_out) *error_out = e.what();
    return 1;
  }
}

}  // namespace chainlab
