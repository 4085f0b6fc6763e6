#include <catch2/catch.hpp>

#include "chaining_lab/solver.hpp"

using namespace chainlab;

TEST_CASE("soft threshold worked values") {
  CHECK(soft_threshold(3.0, 1.0) == Approx(2.0));
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(0.0, 7.0) == 0.0);
}

TEST_CASE("soft threshold is odd, 1-Lipschitz and identity at kappa = 0") {
  Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const double v = 5.0 * rng.normal(), w = 5.0 * rng.normal();
    const double kap = std::abs(rng.normal());
    CHECK(soft_threshold(-v, kap) == Approx(-soft_threshold(v, kap)).margin(1e-15));
    CHECK(std::abs(soft_threshold(v, kap) - soft_threshold(w, kap)) <=
          std::abs(v - w) + 1e-15);
    CHECK(soft_threshold(v, 0.0) == v);
  }
}

namespace {

SampleSet toy_sample(Index n, Index p, std::uint64_t seed, double sigma,
                     const Vec& theta0) {
  RegressionGenerator gen{gaussian_design(n, p, seed), theta0, sigma};
  return gen.sample(seed + 1);
}

}  // namespace

TEST_CASE("objective worked example") {
  // n=2, y=(1,3), z=(1,1), theta=1, lambda=0.5: mean(0, 4) + 0.5 = 2.5
  LossModel m = LossModel::quadratic(1);
  SampleSet s;
  s.Z = Mat::Ones(2, 1);
  s.y = Vec(2);
  s.y << 1.0, 3.0;
  CHECK(objective(m, s, 0.5, Vec::Ones(1)) == Approx(2.5).epsilon(1e-14));
  // theta = 0: penalty vanishes, objective is P_n rho_0
  CHECK(objective(m, s, 0.5, Vec::Zero(1)) ==
        Approx(mean_loss(m, Vec::Zero(1), s)).epsilon(1e-14));
}

TEST_CASE("1-d intercept lasso hits the soft-thresholded mean") {
  // z = 1, ybar = 1, lambda = 1: minimizer of mean (y - t)^2 + |t| is 0.5
  LossModel m = LossModel::quadratic(1);
  SampleSet s;
  s.Z = Mat::Ones(4, 1);
  s.y = Vec(4);
  s.y << 0.5, 1.5, 0.8, 1.2;  // mean 1

  SolverConfig cfg;
  cfg.lambda = 1.0;
  Solution sol = solve(m, s, cfg);
  CHECK(sol.theta[0] == Approx(0.5).margin(1e-7));
  CHECK(sol.kkt <= 1e-8);

  // independent oracle: dense grid over [-2, 2] at step 1e-5
  double best_t = 0, best_v = std::numeric_limits<double>::infinity();
  for (double t = -2.0; t <= 2.0; t += 1e-5) {
    const double v = objective(m, s, 1.0, Vec::Constant(1, t));
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  CHECK(best_t == Approx(0.5).margin(2e-5));
  CHECK(sol.objective <= best_v + 1e-10);
}

TEST_CASE("lambda = 0 recovers the unpenalized minimizer") {
  LossModel m = LossModel::quadratic(1);
  SampleSet s;
  s.Z = Mat::Ones(5, 1);
  s.y = Vec(5);
  s.y << 1.0, 2.0, 3.0, 4.0, 5.0;
  SolverConfig cfg;
  cfg.lambda = 0.0;
  Solution sol = solve(m, s, cfg);
  CHECK(sol.theta[0] == Approx(3.0).margin(1e-7));  // ybar
}

TEST_CASE("large lambda forces the zero solution") {
  const Index n = 20, p = 5;
  Vec theta0 = Vec::Zero(p);
  theta0[0] = 2.0;
  SampleSet s = toy_sample(n, p, 37, 0.5, theta0);
  LossModel m = LossModel::quadratic(p);
  const double g0 = linf_norm(mean_loss_grad(m, Vec::Zero(p), s));
  SolverConfig cfg;
  cfg.lambda = g0 * 1.0001;
  Solution sol = solve(m, s, cfg);
  CHECK(l1_norm(sol.theta) == 0.0);
}

TEST_CASE("zero solution holds exactly when lambda dominates the gradient") {
  const Index n = 30, p = 6;
  Rng rng(51);
  for (int inst = 0; inst < 10; ++inst) {
    Vec theta0(p);
    for (Index j = 0; j < p; ++j) theta0[j] = rng.normal();
    SampleSet s = toy_sample(n, p, 100 + inst, 1.0, theta0);
    LossModel m = LossModel::quadratic(p);
    const double g0 = linf_norm(mean_loss_grad(m, Vec::Zero(p), s));
    SolverConfig cfg;
    cfg.lambda = g0 * 1.01;
    CHECK(l1_norm(solve(m, s, cfg).theta) == 0.0);
    cfg.lambda = g0 * 0.95;
    CHECK(l1_norm(solve(m, s, cfg).theta) > 0.0);
  }
}

TEST_CASE("solution dominates random feasible points and satisfies KKT") {
  const Index n = 40, p = 8;
  Vec theta0 = Vec::Zero(p);
  theta0[1] = 1.5;
  theta0[4] = -1.0;
  SampleSet s = toy_sample(n, p, 77, 1.0, theta0);
  LossModel m = LossModel::quadratic(p);
  SolverConfig cfg;
  cfg.lambda = 0.2;
  Solution sol = solve(m, s, cfg);
  CHECK(sol.kkt <= 1e-8);
  CHECK(sol.objective ==
        Approx(objective(m, s, cfg.lambda, sol.theta)).margin(1e-10));
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    Vec probe(p);
    for (Index j = 0; j < p; ++j) probe[j] = 2.0 * rng.normal();
    CHECK(sol.objective <= objective(m, s, cfg.lambda, probe) + 1e-10);
  }
}

TEST_CASE("lambda path: trivial grid endpoints and warm-start consistency") {
  const Index n = 20, p = 5;
  Vec theta0 = Vec::Zero(p);
  theta0[0] = 1.0;
  theta0[3] = -2.0;
  SampleSet s = toy_sample(n, p, 11, 0.7, theta0);
  LossModel m = LossModel::quadratic(p);

  const double g0 = linf_norm(mean_loss_grad(m, Vec::Zero(p), s));
  SolverConfig cfg;

  SECTION("huge lambda then zero") {
    LambdaPath path = lambda_path(m, s, {2.0 * g0, 0.0}, cfg);
    CHECK(l1_norm(path.solutions[0].theta) == 0.0);
    // unpenalized minimizer: KKT with lambda 0 means plain gradient
    CHECK(linf_norm(mean_loss_grad(m, path.solutions[1].theta, s)) <= 1e-7);
    CHECK(path.l1_nonincreasing);
  }

  SECTION("singleton grid equals a direct solve") {
    cfg.lambda = 0.3;
    Solution direct = solve(m, s, cfg);
    LambdaPath path = lambda_path(m, s, {0.3}, cfg);
    CHECK(path.solutions[0].objective == Approx(direct.objective).margin(1e-12));
  }

  SECTION("warm-started path matches cold solves in objective") {
    std::vector<double> grid;
    for (int k = 0; k < 6; ++k) grid.push_back(g0 * std::pow(0.5, k));
    LambdaPath path = lambda_path(m, s, grid, cfg);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      SolverConfig cold = cfg;
      cold.lambda = grid[k];
      Solution c = solve(m, s, cold);
      CHECK(path.solutions[k].objective == Approx(c.objective).margin(1e-6));
    }
    CHECK(path.l1_nonincreasing);
  }

  SECTION("ascending grid is rejected") {
    CHECK_THROWS_AS(lambda_path(m, s, {0.1, 0.2}, cfg), std::invalid_argument);
  }
}

TEST_CASE("mixture multistart objective is monotone in the restart budget") {
  LossModel m = LossModel::mixture({1, 1}, 2.0, 0.1, 0.5, 2.0);
  Vec theta0(m.p);
  theta0 << 1.2, -1.0, 0.6, 0.4, 1.0, 0.8;
  Mat Z = gaussian_design(40, 2, 61, false);
  MixtureGenerator gen{Z, m, theta0};
  SampleSet s = gen.sample(62);

  SolverConfig cfg;
  cfg.lambda = 0.05;
  cfg.seed = 5;
  cfg.max_iterations = 4000;
  double prev = std::numeric_limits<double>::infinity();
  for (Index restarts : {1, 4, 8}) {
    cfg.restarts = restarts;
    Solution sol = solve(m, s, cfg);
    CHECK(sol.objective <= prev + 1e-12);
    prev = sol.objective;
    CHECK(m.feasible(sol.theta));
  }
}

TEST_CASE("mixture with the Staedler mask recovers location and scale") {
  // r = 1 pins pi at 1; lambda 0 with the mask-free beta and sigma is MLE
  LossModel m = LossModel::mixture({1}, 3.0, 1.0, 0.25, 4.0);
  m.pi_min = 1.0;  // single component: weight fixed at one
  Vec theta0(m.p);
  theta0 << 1.5, 1.0, 0.7;
  Mat Z = Mat::Ones(300, 1);
  MixtureGenerator gen{Z, m, theta0};
  SampleSet s = gen.sample(63);

  SolverConfig cfg;
  cfg.lambda = 0.0;
  cfg.restarts = 8;
  cfg.seed = 9;
  cfg.max_iterations = 20000;
  cfg.penalty_mask = staedler_mask(m);
  Solution sol = solve(m, s, cfg);

  // closed-form MLE for Gaussian location/scale
  const double mean = s.y.mean();
  const double rms =
      std::sqrt((s.y.array() - mean).square().sum() / s.y.size());
  CHECK(sol.theta[0] == Approx(mean).margin(5e-3));
  CHECK(sol.theta[2] == Approx(rms).margin(5e-3));
}
