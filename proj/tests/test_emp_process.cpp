#include <catch2/catch.hpp>

#include "chaining_lab/emp_process.hpp"

using namespace chainlab;

TEST_CASE("dual norm supremum worked values") {
  Vec v(3);
  v << 1.0, -3.0, 2.0;
  DualNormSup d = dual_norm_sup(v, 1.0);
  CHECK(d.value == Approx(3.0));
  CHECK(d.coordinate == 1);
  CHECK(d.sign == -1.0);
  // the reported vertex attains the supremum
  CHECK(std::abs(d.vertex(3, 1.0).dot(v)) == Approx(d.value));

  CHECK(dual_norm_sup(Vec::Zero(4), 5.0).value == 0.0);

  Vec w(2);
  w << 0.5, 0.5;
  CHECK(dual_norm_sup(w, 2.0).value == Approx(1.0));
}

TEST_CASE("linear symmetrized supremum via the dual norm") {
  Mat psi = Mat::Ones(2, 1);
  ProcessModel proc = ProcessModel::linear(psi);
  BallSpec ball;
  ball.theta_star = Vec::Zero(1);

  Vec eps(2);
  eps << 1.0, -1.0;
  ball.M = 4.0;
  CHECK(symmetrized_sup_once(proc, ball, eps).value == Approx(0.0).margin(1e-15));

  eps << 1.0, 1.0;
  ball.M = 3.0;
  SupResult r = symmetrized_sup_once(proc, ball, eps);
  CHECK(r.value == Approx(3.0));
  CHECK(r.exact);
}

TEST_CASE("huber toy search agrees with a dense grid oracle") {
  const Index n = 8, p = 3;
  Mat Z = gaussian_design(n, p, 43, false);
  SampleSet s;
  s.Z = Z;
  s.y = Vec(n);
  Rng rng(44);
  for (Index i = 0; i < n; ++i) s.y[i] = rng.normal();
  LossModel m = LossModel::huber_glm(p, 1.0);
  ProcessModel proc = ProcessModel::from_loss(m, s);

  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 0.5;
  ball.restrict_to_domain = false;
  Vec eps(n);
  rng.fill_rademacher(eps);

  SearchOptions opts;
  opts.seed = 3;
  const double found = symmetrized_sup_once(proc, ball, eps, opts).value;

  // dense grid oracle over the ball (both values lower-estimate the sup,
  // the grid by its resolution, the search by its budget)
  double grid_best = 0.0;
  const int g = 80;
  for (int a = -g; a <= g; ++a)
    for (int b = -g; b <= g; ++b)
      for (int c = -g; c <= g; ++c) {
        if (std::abs(a) + std::abs(b) + std::abs(c) > g) continue;
        Vec delta(3);
        delta << ball.M * a / g, ball.M * b / g, ball.M * c / g;
        const double val =
            std::abs(eps.dot(proc.increments(ball.theta_star, delta)) / n);
        grid_best = std::max(grid_best, val);
      }
  CHECK(found >= grid_best - 1e-3);
  CHECK(found <= grid_best + 5e-3);
}

TEST_CASE("conditional mean E_n: zero envelope and dual-norm reduction") {
  Mat zero = Mat::Zero(16, 3);
  ProcessModel proc = ProcessModel::linear(zero);
  BallSpec ball;
  ball.theta_star = Vec::Zero(3);
  ball.M = 2.0;
  ProcessEstimate est = conditional_mean_En(proc, ball, 50, 1);
  CHECK(est.mean == 0.0);
  CHECK(est.std_error == 0.0);

  // equals the MC mean of M ||eps' psi / n||_inf computed by hand
  const Index n = 32, p = 4;
  Mat psi = gaussian_design(n, p, 45, false);
  ProcessModel lin = ProcessModel::linear(psi);
  BallSpec b2;
  b2.theta_star = Vec::Zero(p);
  b2.M = 1.5;
  const Index reps = 200;
  ProcessEstimate e2 = conditional_mean_En(lin, b2, reps, 9);
  double acc = 0.0;
  for (Index r = 0; r < reps; ++r) {
    Rng rng(derive_seed(9, 13, static_cast<std::uint64_t>(r)));
    Vec eps(n);
    rng.fill_rademacher(eps);
    acc += b2.M * linf_norm(psi.transpose() * eps / static_cast<double>(n));
  }
  CHECK(e2.mean == Approx(acc / reps).epsilon(1e-12));
}

TEST_CASE("E_n is exactly homogeneous in the radius for linear processes") {
  const Index n = 64, p = 8;
  Mat psi = gaussian_design(n, p, 46);
  ProcessModel lin = ProcessModel::linear(psi);
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.0;
  ProcessEstimate e1 = conditional_mean_En(lin, ball, 100, 4);
  ball.M = 2.0;
  ProcessEstimate e2 = conditional_mean_En(lin, ball, 100, 4);
  CHECK(e2.mean == Approx(2.0 * e1.mean).epsilon(1e-13));
}

TEST_CASE("Hoeffding bound dominates the seeded linear toy") {
  const Index n = 256, p = 64;
  Mat psi = gaussian_design(n, p, 47);
  ProcessModel lin = ProcessModel::linear(psi);
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.0;
  ProcessEstimate est = conditional_mean_En(lin, ball, 500, 5);
  double K_n = 0.0;
  for (Index j = 0; j < p; ++j) K_n = std::max(K_n, norm_n(psi.col(j)));
  const double bound = std::sqrt(2.0 * std::log(2.0 * p) / n) * K_n;
  CHECK(est.mean <= bound + 3.0 * est.std_error);
}

TEST_CASE("vertex search on a generic wrapper of a linear loss is exact") {
  const Index n = 12, p = 4;
  Mat W = gaussian_design(n, p, 48, false);
  // generic loss rho_theta(X_i) = W.row(i) . theta: increments are linear
  LossModel generic = LossModel::generic(
      p, ParameterBox::cube(p, -10.0, 10.0),
      [W](const Vec& th, const SampleSet&, Index i) { return W.row(i).dot(th); },
      [W](const Vec&, const SampleSet&, Index i) {
        return Vec(W.row(i).transpose());
      });
  SampleSet s;
  s.Z = Mat::Zero(n, 1);
  s.y = Vec::Zero(n);
  ProcessModel proc = ProcessModel::from_loss(generic, s);
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.25;
  Rng rng(50);
  for (int k = 0; k < 10; ++k) {
    Vec eps(n);
    rng.fill_rademacher(eps);
    SearchOptions opts;
    opts.seed = static_cast<std::uint64_t>(k);
    const double found = symmetrized_sup_once(proc, ball, eps, opts).value;
    const double exact = ball.M * linf_norm(W.transpose() * eps / double(n));
    // vertices attain the linear supremum; ascent never exceeds it
    CHECK(found == Approx(exact).margin(1e-10));
  }
}

TEST_CASE("regime bounds: worked value and regime factors") {
  CHECK(regime_bound(Regime::Linear, 2, 100, 1.0) ==
        Approx(0.1665109222315395).epsilon(1e-10));
  CHECK(regime_bound(Regime::Glm, 2, 100, 1.0) ==
        Approx(2.0 * regime_bound(Regime::Linear, 2, 100, 1.0)).epsilon(1e-14));
  // identity Sigma_n: eigen ratio 1 makes nonlinear equal C x linear
  Mat psi(4, 2);
  psi << 1, 0, -1, 0, 0, 1, 0, -1;
  psi *= std::sqrt(2.0);  // Sigma_n = I
  const double ratio = nonlinear_eigen_ratio(make_envelope(psi.cwiseAbs()));
  CHECK(ratio == Approx(1.0).epsilon(1e-12));
  CHECK(regime_bound(Regime::Nonlinear, 2, 100, 1.0, 1, ratio) ==
        Approx(regime_bound(Regime::Linear, 2, 100, 1.0)).epsilon(1e-12));
}

TEST_CASE("singular Sigma_n is rejected for the nonlinear regime") {
  Mat psi(3, 2);
  psi << 1, 1, 2, 2, 3, 3;  // rank one
  CHECK_THROWS_AS(nonlinear_eigen_ratio(make_envelope(psi)),
                  std::invalid_argument);
}

TEST_CASE("massart threshold worked values") {
  CHECK(massart_threshold(0.1, 0.2, 100, 2.0) == Approx(0.14).epsilon(1e-14));
  CHECK(massart_threshold(0.3, 0.2, 100, 0.0) == Approx(0.3));
  CHECK(massart_threshold(0.3, 0.0, 100, 5.0) == Approx(0.3));
}

TEST_CASE("bernstein envelope tail worked values and monotonicity") {
  // formula arithmetic with log 2 = 0.693147...
  CHECK(bernstein_envelope_tail(1.0, 1.0, 2, 100, 1.0) ==
        Approx(0.4019006).margin(1e-6));
  CHECK(bernstein_envelope_tail(1.0, 1.0, 2, 100, 2.0) ==
        Approx(0.5180307).margin(1e-6));
  // doubling t increases the value; L -> 0 kills it
  CHECK(bernstein_envelope_tail(1.0, 1.0, 2, 100, 2.0) >
        bernstein_envelope_tail(1.0, 1.0, 2, 100, 1.0));
  CHECK(bernstein_envelope_tail(1e-12, 1.0, 2, 100, 1.0) ==
        Approx(0.0).margin(1e-9));
}

TEST_CASE("tail thresholds are nondecreasing in t and in 1/n") {
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const double t = std::abs(rng.normal()) + 0.1;
    const double dt = std::abs(rng.normal());
    const Index n = 50 + static_cast<Index>(rng.below(1000));
    CHECK(massart_threshold(0.2, 0.3, n, t + dt) >=
          massart_threshold(0.2, 0.3, n, t));
    CHECK(massart_threshold(0.2, 0.3, n, t) >=
          massart_threshold(0.2, 0.3, 4 * n, t));
    CHECK(bernstein_envelope_tail(1.0, 1.0, 8, n, t + dt) >=
          bernstein_envelope_tail(1.0, 1.0, 8, n, t));
    CHECK(bernstein_envelope_tail(1.0, 1.0, 8, n, t) >=
          bernstein_envelope_tail(1.0, 1.0, 8, 4 * n, t));
    CHECK(peeling_threshold(0.1, 1.0, 8, n, t + dt) >=
          peeling_threshold(0.1, 1.0, 8, n, t));
  }
}

TEST_CASE("peeling threshold worked values") {
  // K* = 0 collapses to lambda*
  CHECK(peeling_threshold(0.7, 0.0, 100, 400, 3.0) == Approx(0.7));
  // formula with log 100 = 4.60517: 0.1 (1 + sqrt 2 + 9.21034/400)
  CHECK(peeling_threshold(0.1, 1.0, 100, 400, std::log(100.0)) ==
        Approx(0.2437239).margin(1e-6));
}

TEST_CASE("fixed-M display shares the sqrt(t/log p) structure") {
  const double v = fixed_m_threshold(0.1, 1.0, std::exp(1.0), 100, 400,
                                     std::log(100.0));
  // M = e cancels the 1/e: 0.1 (1 + sqrt(1) + log(100)/400)
  CHECK(v == Approx(0.1 * (2.0 + std::log(100.0) / 400.0)).epsilon(1e-12));
  CHECK(peeling_shells(3) == 64);
  CHECK(peeling_shells(100) == 100);
}

TEST_CASE("symmetrization lemma frequencies on the linear Gaussian toy") {
  const Index n = 64, p = 8;
  Mat Z = gaussian_design(n, p, 53);
  LinearProcessGenerator gen{RegressionGenerator{Z, Vec::Zero(p), 1.0}};

  SECTION("t = 4 verdict holds") {
    CheckReport rep = symmetrization_check(gen, 1.0, 4.0, 500, 2);
    CHECK(rep.verdict);
  }
  SECTION("huge t zeroes both frequencies") {
    CheckReport rep = symmetrization_check(gen, 1.0, 50.0, 200, 2);
    CHECK(rep.lhs_freq == 0.0);
    CHECK(rep.rhs_freq == 0.0);
    CHECK(rep.verdict);
  }
  SECTION("degenerate generator has zero frequencies") {
    LinearProcessGenerator degen{RegressionGenerator{Z, Vec::Zero(p), 0.0}};
    CheckReport rep = symmetrization_check(degen, 1.0, 4.0, 100, 2);
    CHECK(rep.lhs_freq == 0.0);
    CHECK(rep.rhs_freq == 0.0);
    CHECK(rep.verdict);
  }
  SECTION("t below 4 is rejected") {
    CHECK_THROWS_AS(symmetrization_check(gen, 1.0, 2.0, 10, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("contraction ratio is about 1 when the comparison is the loss itself") {
  const Index n = 32, p = 4;
  Mat W = gaussian_design(n, p, 57, false);
  ProcessModel proc = ProcessModel::linear(W);
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.0;
  CheckReport rep = contraction_check(proc, W, ball, 100, 3);
  CHECK(rep.extra == Approx(1.0).epsilon(1e-10));
  CHECK(rep.verdict);
}

TEST_CASE("zero comparison process is flagged, not asserted") {
  ProcessModel proc = ProcessModel::linear(Mat::Zero(8, 2));
  BallSpec ball;
  ball.theta_star = Vec::Zero(2);
  ball.M = 1.0;
  CheckReport rep = contraction_check(proc, Mat::Zero(8, 2), ball, 50, 3);
  CHECK(rep.flagged);
}

TEST_CASE("huber contraction stays under the factor-2 budget") {
  const Index n = 64, p = 8;
  Mat Z = gaussian_design(n, p, 59);
  RegressionGenerator gen{Z, Vec::Zero(p), 1.0};
  SampleSet s = gen.sample(60);
  LossModel m = LossModel::huber_glm(p, 1.0);
  ProcessModel proc = ProcessModel::from_loss(m, s);
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.0;
  ball.restrict_to_domain = false;
  SearchOptions opts;
  opts.restarts = 24;
  CheckReport rep = contraction_check(proc, m.huber_delta * Z, ball, 250, 4, opts);
  CHECK_FALSE(rep.flagged);
  CHECK(rep.verdict);
  CHECK(rep.extra <= 2.0 + 3.0 * rep.se);
}

TEST_CASE("block Gaussian comparison process is additive over blocks") {
  // identical duplicated blocks: X evaluated on a duplicated delta doubles
  const Index n = 16, pk = 3;
  Mat psi_block = gaussian_design(n, pk, 61).cwiseAbs();
  Mat psi2(n, 2 * pk);
  psi2 << psi_block, psi_block;
  Vec xi(n);
  Rng rng(8);
  rng.fill_normal(xi);
  Vec delta_k = Vec::Ones(pk);
  const double xk = (psi_block * delta_k).dot(xi) / n;
  Vec delta2(2 * pk);
  delta2 << delta_k, delta_k;
  // same xi for both blocks: the sum is exactly twice one block
  const double x2 = (psi2 * delta2).dot(xi) / n;
  CHECK(x2 == Approx(2.0 * xk).epsilon(1e-12));
}

TEST_CASE("r=1 multivariate check reduces to a plain Gaussian comparison") {
  const Index n = 32, p = 4;
  Mat W = gaussian_design(n, p, 62, false);
  ProcessModel proc = ProcessModel::linear(W);
  LipschitzEnvelope env = make_envelope(W.cwiseAbs());
  BallSpec ball;
  ball.theta_star = Vec::Zero(p);
  ball.M = 1.0;
  CheckReport rep =
      multivariate_contraction_check(proc, env, {p}, ball, 120, 6);
  CHECK_FALSE(rep.flagged);
  CHECK(std::isfinite(rep.extra));
  CHECK(rep.extra > 0.0);
  CHECK(rep.threshold == 1.0);  // 2^{r-1} with r = 1
}

TEST_CASE("multivariate contraction check runs on the r=2 mixture toy") {
  std::vector<Index> blocks = {2, 2};
  MixtureParams extras;
  extras.pi = Vec::Constant(2, 0.5);
  extras.sigma = Vec::Constant(2, 1.0);
  extras.beta = {Vec::Zero(2), Vec::Zero(2)};
  LossModel m = LossModel::mixture_fixed_extras(blocks, 2.0, extras);
  Mat Z = gaussian_design(48, 4, 63);
  Vec theta0(4);
  theta0 << 1.0, -0.5, -1.0, 0.5;
  MixtureGenerator gen{Z, m, theta0};
  SampleSet s = gen.sample(64);
  LipschitzEnvelope env = build_envelope(m, s);
  ProcessModel proc = ProcessModel::from_loss(m, s);
  BallSpec ball;
  ball.theta_star = Vec::Zero(4);
  ball.M = 1.0;
  SearchOptions opts;
  opts.restarts = 16;
  CheckReport rep =
      multivariate_contraction_check(proc, env, blocks, ball, 60, 5, opts);
  CHECK_FALSE(rep.flagged);
  CHECK(rep.extra > 0.0);
  CHECK(std::isfinite(rep.extra));
}

TEST_CASE("massart and bernstein and peeling checks hold on seeded toys") {
  const Index n = 100, p = 10;
  Mat Z = gaussian_design(n, p, 67);
  CheckReport mas = massart_check(Z, 1.0, 3.0, 400, 6, 800);
  CHECK(mas.verdict);

  const double L = 2.0;
  const double tau =
      std::sqrt(2.0 * L * L * (1.0 / std::sqrt(1.0 - 2.0 / (L * L)) - 1.0));
  CheckReport ber = bernstein_check(p, n, L, tau, 3.0, 300, 7);
  CHECK(ber.verdict);

  LinearProcessGenerator gen{RegressionGenerator{Z, Vec::Zero(p), 1.0}};
  const double lambda_star =
      std::sqrt(2.0 * std::log(2.0 * p) / n) * gen.population_K();
  CheckReport peel = peeling_check(gen, 1.0, lambda_star, 1.0, 3.0, 400, 8);
  CHECK(peel.verdict);
}
