#include <catch2/catch.hpp>

#include "chaining_lab/oracle.hpp"

using namespace chainlab;

TEST_CASE("convex conjugate worked values") {
  // G(u) = u^2, v = 2: H = v^2/4 = 1
  CHECK(convex_conjugate(GSpec::quadratic(1.0), 2.0) == Approx(1.0).margin(1e-9));
  CHECK(convex_conjugate(GSpec::quadratic(1.0), 0.0) == 0.0);
  // G(u) = u^2/2, v = 3: H = v^2/2 = 4.5
  CHECK(convex_conjugate(GSpec::quadratic(0.5), 3.0) == Approx(4.5).margin(1e-8));
}

TEST_CASE("numeric conjugate matches the analytic quadratic conjugate") {
  for (double c : {0.5, 1.0, 2.0}) {
    for (double v = 0.0; v <= 10.0; v += 0.5) {
      CHECK(convex_conjugate(GSpec::quadratic(c), v) ==
            Approx(conjugate_quadratic_exact(c, v)).margin(1e-8));
    }
  }
}

TEST_CASE("conjugate properties: monotone, convex, Fenchel inequality") {
  GSpec g = GSpec::quadratic(1.3);
  std::vector<double> H;
  for (int k = 0; k <= 50; ++k) H.push_back(convex_conjugate(g, 0.2 * k));
  CHECK(H[0] == 0.0);
  for (int k = 1; k <= 50; ++k) CHECK(H[k] >= H[k - 1] - 1e-12);
  for (int k = 1; k < 50; ++k)
    CHECK(H[k + 1] + H[k - 1] - 2 * H[k] >= -1e-9);  // midpoint convexity
  // Fenchel: u v <= G(u) + H(v) on a 50 x 50 grid
  for (int a = 0; a <= 50; ++a)
    for (int b = 0; b <= 50; ++b) {
      const double u = 0.1 * a, v = 0.2 * b;
      CHECK(u * v <= g.eval(u) + H[b] + 1e-9);
    }
}

TEST_CASE("sublinear tabulated G has an unbounded conjugate") {
  GSpec g = GSpec::tabulated({0.0, 1.0, 2.0}, {0.0, 0.1, 0.2});  // slope 0.1
  CHECK_THROWS_AS(convex_conjugate(g, 5.0), std::invalid_argument);
}

TEST_CASE("effective sparsity closed forms") {
  SECTION("l2 norm, singleton support") {
    for (double L : {0.0, 1.0, 3.0, 10.0}) {
      EffectiveSparsity es = effective_sparsity(TauSpec::l2(), L, {0}, 6);
      CHECK(es.delta == Approx(1.0).margin(1e-8));
      CHECK(es.Gamma == Approx(1.0).margin(1e-8));
    }
  }
  SECTION("l2 norm, |S| = 4: delta = 1/2, Gamma = 2, phi2 = 1") {
    EffectiveSparsity es = effective_sparsity(TauSpec::l2(), 3.0, {0, 1, 2, 3}, 12);
    CHECK(es.delta == Approx(0.5).margin(1e-7));
    CHECK(es.Gamma == Approx(2.0).margin(1e-6));
    CHECK(es.phi2 == Approx(1.0).margin(1e-6));
  }
  SECTION("diag(2,1) weighting with S = {0}") {
    Mat A(2, 2);
    A << 2, 0, 0, 1;
    EffectiveSparsity es = effective_sparsity(TauSpec::weighted(A), 5.0, {0}, 2);
    CHECK(es.delta == Approx(2.0).margin(1e-7));
    CHECK(es.Gamma == Approx(0.5).margin(1e-7));

    // dense-grid oracle over the 2-d feasible set { |t0| = 1, |t1| <= L }
    double grid_min = std::numeric_limits<double>::infinity();
    for (double s : {-1.0, 1.0})
      for (double t1 = -5.0; t1 <= 5.0; t1 += 1e-3) {
        Vec th(2);
        th << s, t1;
        grid_min = std::min(grid_min, (A * th).norm());
      }
    CHECK(es.delta == Approx(grid_min).margin(1e-6));
  }
}

TEST_CASE("effective sparsity grows with L and refuses big supports") {
  Mat Z = gaussian_design(30, 10, 103);
  TauSpec tau = TauSpec::design(Z);
  EffectiveSparsity e0 = effective_sparsity(tau, 0.0, {0, 1}, 10);
  EffectiveSparsity e1 = effective_sparsity(tau, 1.0, {0, 1}, 10);
  EffectiveSparsity e3 = effective_sparsity(tau, 3.0, {0, 1}, 10);
  CHECK(e1.Gamma >= e0.Gamma - 1e-7);
  CHECK(e3.Gamma >= e1.Gamma - 1e-7);

  std::vector<Index> big;
  for (Index j = 0; j < 13; ++j) big.push_back(j);
  CHECK_THROWS_AS(effective_sparsity(tau, 1.0, big, 30), std::invalid_argument);
}

TEST_CASE("l2 effective sparsity is independent of L") {
  for (Index s : {1, 2, 4, 8}) {
    std::vector<Index> S;
    for (Index j = 0; j < s; ++j) S.push_back(j);
    const double ref = std::sqrt(static_cast<double>(s));
    for (double L : {0.0, 1.0, 3.0, 10.0}) {
      EffectiveSparsity es = effective_sparsity(TauSpec::l2(), L, S, s + 6);
      CHECK(es.Gamma == Approx(ref).margin(1e-6));
    }
  }
}

TEST_CASE("excess risk: closed form and positivity") {
  const Index n = 24, p = 6;
  Mat Z = gaussian_design(n, p, 107);
  Vec theta0(p);
  theta0 << 1, -1, 0.5, 0, 0, 2;

  CHECK(excess_risk_quadratic(Z, theta0, theta0).value == 0.0);

  // theta - theta0 = e_1 with an n-normalized column: excess = 1
  Vec theta = theta0;
  theta[0] += 1.0;
  CHECK(excess_risk_quadratic(Z, theta, theta0).value ==
        Approx(1.0).epsilon(1e-10));

  Rng rng(15);
  for (int k = 0; k < 100; ++k) {
    Vec probe(p);
    for (Index j = 0; j < p; ++j) probe[j] = rng.normal();
    CHECK(excess_risk_quadratic(Z, probe, theta0).value >= 0.0);
  }
}

TEST_CASE("MC excess risk agrees with the closed form on a quadratic toy") {
  const Index n = 40, p = 3;
  Mat Z = gaussian_design(n, p, 109);
  Vec theta0(p);
  theta0 << 0.5, -0.25, 1.0;
  RegressionGenerator gen{Z, theta0, 1.0};
  LossModel m = LossModel::quadratic(p);
  Vec theta = theta0;
  theta[1] += 0.7;
  ExcessRisk mc = excess_risk_mc(
      m, [&](std::uint64_t s) { return gen.sample(s); }, theta, theta0,
      400000, 3);
  const double closed = excess_risk_quadratic(Z, theta, theta0).value;
  CHECK(mc.value == Approx(closed).margin(5.0 * mc.std_error + 1e-8));
}

TEST_CASE("margin fit on the quadratic design norm returns c = 1") {
  const Index n = 30, p = 4;
  Mat Z = gaussian_design(n, p, 113);
  Vec theta0 = Vec::Zero(p);
  TauSpec tau = TauSpec::design(Z);
  auto excess = [&](const Vec& th) {
    return excess_risk_quadratic(Z, th, theta0).value;
  };
  MarginFit fit = margin_fit(excess, theta0, tau, 1.0, 200, 5);
  CHECK_FALSE(fit.failed);
  CHECK(fit.c == Approx(1.0).epsilon(1e-9));

  // scaling tau by 2 divides c by 4
  Mat Z2 = 2.0 * Z;
  MarginFit fit2 = margin_fit(excess, theta0, TauSpec::design(Z2), 1.0, 200, 5);
  CHECK(fit2.c == Approx(0.25).epsilon(1e-9));
}

TEST_CASE("margin fit reports a positive constant on a mixture ball") {
  LossModel m = LossModel::mixture({1}, 2.0, 0.5, 0.5, 2.0);
  Vec theta0(3);
  theta0 << 1.0, 1.0, 1.0;
  Mat Z = gaussian_design(60, 1, 115, false);
  MixtureGenerator gen{Z, m, theta0};
  auto excess = [&](const Vec& th) {
    Vec t = m.project(th);
    return excess_risk_mc(
               m, [&](std::uint64_t s) { return gen.sample(s); }, t, theta0,
               60000, 7)
        .value;
  };
  MarginFit fit = margin_fit(excess, theta0, TauSpec::l2(), 0.15, 12, 9);
  CHECK_FALSE(fit.failed);
  CHECK(fit.c > 0.0);
}

TEST_CASE("theorem 1 and 2 worked instance") {
  const double lambda = 0.2, lambda0 = 0.1, delta = 0.5;
  const double Gamma = std::sqrt(3.0);
  auto H_analytic = [](double v) { return v * v / 4.0; };
  auto H_numeric = [](double v) {
    return convex_conjugate(GSpec::quadratic(1.0), v);
  };

  Theorem1Bounds b =
      theorem1_bounds(lambda, lambda0, delta, Gamma, Gamma, H_analytic, 0.0);
  CHECK(b.L == Approx(3.0).epsilon(1e-14));
  CHECK(b.rhs1 == Approx(0.48).epsilon(1e-12));

  Theorem1Bounds bn =
      theorem1_bounds(lambda, lambda0, delta, Gamma, Gamma, H_numeric, 0.0);
  CHECK(bn.rhs1 == Approx(0.48).margin(1e-10));

  Theorem2M m = theorem2_M(lambda, lambda0, delta, Gamma, Gamma, H_analytic, 0.0);
  CHECK(m.M0 == Approx(2.4).epsilon(1e-12));
  Theorem2M mn = theorem2_M(lambda, lambda0, delta, Gamma, Gamma, H_numeric, 0.0);
  CHECK(mn.M0 == Approx(2.4).margin(1e-10));

  // the two routes tie together: (lambda - lambda0) M0 = delta rhs1
  CHECK((lambda - lambda0) * m.M0 == Approx(delta * b.rhs1).margin(1e-14));
}

TEST_CASE("theorem bounds: floors, divergence, and structure") {
  auto H = [](double v) { return v * v / 4.0; };

  // Gamma -> 0 hits the 2 lambda^2 floor
  Theorem1Bounds b = theorem1_bounds(0.2, 0.1, 0.5, 0.0, 0.0, H, 0.0);
  CHECK(b.rhs1 == Approx(2.0 * 0.04).epsilon(1e-14));

  // lambda -> lambda0+ diverges
  Theorem2M m = theorem2_M(0.1 * (1.0 + 1e-13), 0.1, 0.5, 1.0, 1.0, H, 0.0);
  CHECK(m.M0 > 1e10);

  // rhs2 >= rhs1 when excess_star = 0 and the supports agree
  Theorem1Bounds b2 = theorem1_bounds(0.2, 0.1, 0.5, 1.7, 1.7, H, 0.0);
  CHECK(b2.rhs2 >= b2.rhs1 - 1e-14);
  CHECK(b2.L_delta == Approx(2.0 * 3.0 * b2.L).epsilon(1e-14));

  CHECK_THROWS_AS(theorem1_bounds(0.1, 0.2, 0.5, 1, 1, H, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(theorem1_bounds(0.2, 0.1, 1.5, 1, 1, H, 0.0),
                  std::invalid_argument);
}

TEST_CASE("closed-form vs conjugate path cross-check at lambda = 2 lambda0") {
  // H the conjugate of G = u^2, Gamma = 1: M0 has the closed form
  // (delta/(lambda-lambda0)) max((lambda Gamma / delta)^2, 2 lambda^2)
  const double lambda0 = 0.15, lambda = 0.3, delta = 0.4;
  auto Hn = [](double v) { return convex_conjugate(GSpec::quadratic(1.0), v); };
  Theorem2M m = theorem2_M(lambda, lambda0, delta, 1.0, 1.0, Hn, 0.0);
  const double closed =
      delta / (lambda - lambda0) *
      std::max(std::pow(2.0 * lambda * 1.0 / delta, 2) / 4.0,
               2.0 * lambda * lambda);
  CHECK(m.M0 == Approx(closed).margin(1e-10));
}

TEST_CASE("event T frequency: degenerate thresholds and monotonicity") {
  const Index n = 40, p = 6;
  Mat Z = gaussian_design(n, p, 117);
  RegressionGenerator gen{Z, Vec::Zero(p), 1.0};
  LossModel model = LossModel::quadratic(p, Centering::Expectation);
  auto factory = [&](std::uint64_t s) {
    return ProcessModel::from_loss(model, gen.sample(s));
  };

  EventTResult huge =
      event_T_frequency(factory, Vec::Zero(p), 1e6, 1.0, 50, 3);
  CHECK(huge.frequency == 1.0);

  EventTResult zero = event_T_frequency(factory, Vec::Zero(p), 0.0, 1.0, 50, 3);
  CHECK(zero.frequency == 0.0);

  double prev = 0.0;
  for (double lam : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    EventTResult r = event_T_frequency(factory, Vec::Zero(p), lam, 1.0, 50, 3);
    CHECK(r.frequency >= prev);
    prev = r.frequency;
  }
}

TEST_CASE("event T holds often at the tuned lambda0 on the Gaussian toy") {
  const Index n = 200, p = 50;
  Mat Z = gaussian_design(n, p, 119);
  RegressionGenerator gen{Z, Vec::Zero(p), 1.0};
  LossModel model = LossModel::quadratic(p, Centering::Expectation);
  auto factory = [&](std::uint64_t s) {
    return ProcessModel::from_loss(model, gen.sample(s));
  };
  // lambda0 = sqrt(2 log(2p)/n) K-hat with K-hat from one pilot envelope
  SampleSet pilot = gen.sample(1);
  LipschitzEnvelope env = build_envelope(model, pilot);
  const double lambda0 = std::sqrt(2.0 * std::log(2.0 * p) / n) * env.K_n;
  EventTResult r = event_T_frequency(factory, Vec::Zero(p), lambda0, 1.0, 200, 5);
  CHECK(r.frequency >= 0.9);
}

TEST_CASE("sparse approximation target selection") {
  auto H = [](double v) { return v * v / 4.0; };
  auto Gamma_of = [](const std::vector<Index>& S) {
    return std::sqrt(static_cast<double>(S.size()));  // l2-style growth
  };

  Vec theta0 = Vec::Zero(4);
  theta0[0] = 1.0;
  auto excess = [&](const Vec& th) {
    return (th - theta0).squaredNorm();  // zero exactly at theta0
  };

  SECTION("single candidate returned unconditionally") {
    SparseApproxResult r = sparse_approx_target({theta0}, 0.2, 0.1, 0.5, H,
                                                Gamma_of, excess);
    CHECK(r.index == 0);
  }

  SECTION("theta0 wins among zero-excess candidates with minimal penalty") {
    Vec dense = theta0;
    dense[1] = 1e-8;  // same excess almost, bigger support
    std::vector<Vec> cands = {dense, theta0};
    SparseApproxResult r =
        sparse_approx_target(cands, 0.2, 0.1, 0.5, H, Gamma_of, excess);
    CHECK(r.index == 1);
  }

  SECTION("three-candidate hand arithmetic") {
    const double lambda = 0.2, lambda0 = 0.1, delta = 0.5;
    const double Ld = 2.0 * 3.0 * 3.0;  // L_delta with these parameters
    (void)Ld;
    Vec a = Vec::Zero(4);              // excess 1, support empty
    Vec b = theta0;                    // excess 0, support {0}
    Vec c = Vec::Zero(4);
    c[0] = 1.0;
    c[1] = 0.5;                        // excess 0.25, support {0,1}
    auto score = [&](const Vec& th, Index ssize) {
      const double pen =
          ssize == 0
              ? 2.0 * lambda * lambda
              : std::max(2.0 * delta *
                             H(4.0 * 1.5 * lambda *
                               std::sqrt(double(ssize)) / 0.25),
                         2.0 * lambda * lambda);
      return pen + 1.5 * excess(th);
    };
    std::vector<Vec> cands = {a, b, c};
    SparseApproxResult r =
        sparse_approx_target(cands, lambda, lambda0, delta, H, Gamma_of, excess);
    double best = std::min({score(a, 0), score(b, 1), score(c, 2)});
    CHECK(r.score == Approx(best).margin(1e-12));
  }
}

TEST_CASE("delta variants stay verdict-valid with different bound values") {
  auto H = [](double v) { return v * v / 4.0; };
  const double M0_half = theorem2_M(0.2, 0.1, 0.5, 1.5, 1.5, H, 0.0).M0;
  const double M0_quarter = theorem2_M(0.2, 0.1, 0.25, 1.5, 1.5, H, 0.0).M0;
  CHECK(M0_half != Approx(M0_quarter));

  OracleExperimentConfig cfg;
  cfg.n = 50;
  cfg.p = 25;
  cfg.s0 = 2;
  cfg.sigma = 0.3;
  cfg.reps = 6;
  cfg.seed = 33;
  cfg.gamma_max_iterations = 1500;
  for (double delta : {0.5, 0.25}) {
    cfg.delta = delta;
    OracleReport rep = oracle_experiment(cfg);
    CHECK(rep.bound_freq_given_T == 1.0);
  }
}

TEST_CASE("oracle experiment on a tiny nearly noise-free toy") {
  OracleExperimentConfig cfg;
  cfg.n = 60;
  cfg.p = 30;
  cfg.s0 = 2;
  cfg.sigma = 1e-6;
  cfg.reps = 5;
  cfg.seed = 21;
  cfg.gamma_max_iterations = 2000;
  OracleReport rep = oracle_experiment(cfg);
  CHECK(rep.margin_c == Approx(1.0).epsilon(1e-8));
  CHECK(rep.event_T_freq >= 0.8);
  CHECK(rep.bound_freq_given_T == 1.0);
  for (const auto& row : rep.rows) {
    CHECK(row.solver_ok);
    CHECK(row.l1_error < 1e-3);  // theta-hat is near theta0 at tiny lambda
  }
}
