#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "synthcast/report.hpp"
#include "synthcast/theory.hpp"

using namespace synthcast;
using Catch::Approx;

TEST_CASE("optimal_linear_weights closed cases") {
  RandomStream stream(41, 0);
  const int N = 20000;

  SECTION("exact regression on the first column") {
    Eigen::MatrixXd dx(N, 2);
    Eigen::VectorXd dy(N);
    for (int i = 0; i < N; ++i) {
      dx(i, 0) = stream.normal();
      dx(i, 1) = stream.normal();
      dy(i) = dx(i, 0);
    }
    Eigen::VectorXd w = optimal_linear_weights(dx, dy);
    REQUIRE(w(0) == Approx(1.0).margin(1e-10));
    REQUIRE(w(1) == Approx(0.0).margin(1e-10));
  }

  SECTION("independent target gives near-zero weights") {
    Eigen::MatrixXd dx(N, 2);
    Eigen::VectorXd dy(N);
    for (int i = 0; i < N; ++i) {
      dx(i, 0) = stream.normal();
      dx(i, 1) = stream.normal();
      dy(i) = stream.normal();
    }
    Eigen::VectorXd w = optimal_linear_weights(dx, dy);
    double se = 1.0 / std::sqrt(static_cast<double>(N));
    REQUIRE(std::fabs(w(0)) < 3.0 * se);
    REQUIRE(std::fabs(w(1)) < 3.0 * se);
  }

  SECTION("singular second-moment matrix is rejected with a message") {
    Eigen::MatrixXd dx(N, 2);
    Eigen::VectorXd dy(N);
    for (int i = 0; i < N; ++i) {
      double v = stream.normal();
      dx(i, 0) = v;
      dx(i, 1) = v;  // identical columns
      dy(i) = v;
    }
    REQUIRE_THROWS_WITH(optimal_linear_weights(dx, dy),
                        Catch::Matchers::ContainsSubstring("second-moment"));
  }
}

TEST_CASE("toy model weights approach (1, 1)") {
  ToyModelConfig cfg;
  cfg.mu = 0.5;
  cfg.n_samples = 1000000;
  RandomStream stream(42, 0);
  Theorem2Result r = theorem2_gap(cfg, stream);
  REQUIRE(r.weights(0) == Approx(1.0).margin(0.01));
  REQUIRE(r.weights(1) == Approx(1.0).margin(0.01));
}

TEST_CASE("theorem2 gap closed form and equality cases") {
  RandomStream stream(43, 0);

  SECTION("drifting target: gap 0.25") {
    ToyModelConfig cfg;
    cfg.mu = 0.5;
    cfg.n_samples = 1000000;
    Theorem2Result r = theorem2_gap(cfg, stream);
    REQUIRE(r.mse_linear == Approx(1.25).margin(0.02));
    REQUIRE(r.mse_with_intercept == Approx(1.0).margin(0.02));
    REQUIRE(r.gap == Approx(0.25).margin(0.01));
  }

  SECTION("drift exactly matched by the agents") {
    ToyModelConfig cfg;
    cfg.mu = 0.3;
    cfg.mu1 = 0.1;
    cfg.mu2 = 0.2;
    cfg.n_samples = 200000;
    Theorem2Result r = theorem2_gap(cfg, stream);
    REQUIRE(std::fabs(r.gap) < 3.0 * r.se_pooled + 1e-4);
  }

  SECTION("pure martingales need no intercept") {
    ToyModelConfig cfg;
    cfg.mu = 0.0;
    cfg.n_samples = 200000;
    Theorem2Result r = theorem2_gap(cfg, stream);
    REQUIRE(std::fabs(r.gap) < 3.0 * r.se_pooled + 1e-4);
    // intercept estimate itself is statistically zero
    double se_resid = std::sqrt(r.mse_with_intercept / cfg.n_samples);
    REQUIRE(std::fabs(r.intercept) < 3.0 * se_resid);
  }

  SECTION("inequality holds over random configurations") {
    RandomStream cfg_stream(44, 0);
    for (int i = 0; i < 100; ++i) {
      ToyModelConfig cfg;
      cfg.mu = -1.0 + 2.0 * cfg_stream.uniform01();
      cfg.mu1 = -1.0 + 2.0 * cfg_stream.uniform01();
      cfg.mu2 = -1.0 + 2.0 * cfg_stream.uniform01();
      cfg.n_samples = 20000;
      RandomStream s(45, 100 + i);
      Theorem2Result r = theorem2_gap(cfg, s);
      REQUIRE(r.gap >= -3.0 * r.se_pooled);
    }
  }
}

TEST_CASE("kl_quadrature against the closed-form normal KL") {
  TransitionDensity p = normal_transition(0.0, 1.0);
  REQUIRE(kl_quadrature(p, p) == Approx(0.0).margin(1e-10));

  TransitionDensity q = normal_transition(1.0, 1.0);
  REQUIRE(kl_quadrature(p, q) == Approx(0.5).margin(1e-6));

  RandomStream stream(46, 0);
  for (int i = 0; i < 25; ++i) {
    double m1 = stream.normal(), m2 = stream.normal();
    double v1 = 0.3 + stream.uniform01(), v2 = 0.3 + stream.uniform01();
    double got = kl_quadrature(normal_transition(m1, v1), normal_transition(m2, v2));
    REQUIRE(got == Approx(kl_normal(m1, v1, m2, v2)).margin(1e-6));
  }
}

TEST_CASE("kl_risk_mc basics") {
  Eigen::VectorXd theta(2);
  theta << 0.5, -0.2;
  KlRiskConfig cfg;
  cfg.n_paths = 50;
  cfg.horizon = 10;

  SECTION("the true transition density has zero risk") {
    SequentialPredictor truth_pred =
        [&](const Eigen::VectorXd&, const Eigen::MatrixXd&,
            const Eigen::VectorXd& dx_next) {
          return normal_transition(0.3 + theta.dot(dx_next), 1.0);
        };
    RiskEstimate r = kl_risk_mc(0.3, theta, truth_pred, cfg, 47);
    REQUIRE(std::fabs(r.value) < 1e-10);
  }

  SECTION("the diffuse filter has finite positive risk") {
    KlRiskConfig cfg2;
    cfg2.n_paths = 200;
    cfg2.horizon = 20;
    RiskEstimate r =
        kl_risk_mc(0.0, Eigen::VectorXd::Zero(2), kalman_predictor({}), cfg2, 48);
    INFO("baseline risk " << r.value << " se " << r.std_error);
    REQUIRE(r.value > 0.0);
    REQUIRE(std::isfinite(r.value));
    REQUIRE(r.std_error > 0.0);
  }
}

TEST_CASE("kl risk is nonnegative for arbitrary predictors") {
  RandomStream gen(51, 0);
  Eigen::VectorXd theta(2);
  theta << 0.7, -0.3;
  KlRiskConfig cfg;
  cfg.n_paths = 20;
  cfg.horizon = 5;
  for (int trial = 0; trial < 10; ++trial) {
    double off_m = gen.normal();
    double off_v = 0.3 + 2.0 * gen.uniform01();
    SequentialPredictor pred = [&](const Eigen::VectorXd&, const Eigen::MatrixXd&,
                                   const Eigen::VectorXd& dx_next) {
      return normal_transition(off_m + theta.dot(dx_next), off_v);
    };
    RiskEstimate r = kl_risk_mc(0.2, theta, pred, cfg, 600 + trial);
    REQUIRE(r.value >= -1e-8);
  }
}

TEST_CASE("risk constancy under shifts, violated for the stationary filter") {
  Lemma2ExperimentOptions opt;
  opt.n_paths = 500;
  opt.horizon = 20;
  Lemma2Experiment ex = run_lemma2_experiment(opt);
  INFO("random-walk max |diff|/se " << ex.rw_max_sigma << ", stationary "
                                    << ex.stationary_max_sigma);
  REQUIRE(ex.rw_max_sigma < 3.0);
  REQUIRE(ex.stationary_max_sigma > 3.0);
  REQUIRE(ex.pass);
}

TEST_CASE("proper-prior predictive converges to the diffuse one") {
  RandomStream stream(49, 0);
  Eigen::VectorXd theta(2);
  theta << 1.0, -0.5;
  ObservedPath path = simulate_observed_path(0.3, theta, 10, 1.0, stream);
  KalmanPredictorConfig base;

  std::vector<double> sup =
      corollary2_convergence({1.0, 10.0, 100.0, 1e4, 1e6}, path, base);
  for (size_t i = 1; i < sup.size(); ++i) REQUIRE(sup[i] <= sup[i - 1] + 1e-12);
  REQUIRE(sup.back() < 1e-6);
  // strict decrease over the leading grid
  REQUIRE(sup[1] < sup[0]);
  REQUIRE(sup[2] < sup[1]);
  REQUIRE(sup[3] < sup[2]);
}

TEST_CASE("prior-only path reduces to the analytic prior-predictive gap") {
  RandomStream stream(50, 0);
  Eigen::VectorXd theta(2);
  theta << 0.4, 0.4;
  ObservedPath path = simulate_observed_path(0.0, theta, 0, 1.0, stream);
  KalmanPredictorConfig base;

  double sigma = 3.0;
  std::vector<double> sup = corollary2_convergence({sigma}, path, base);

  double fnorm = 1.0 + path.dx_next.squaredNorm();
  double var_sigma = (sigma * sigma + base.evolution_var) * fnorm + base.obs_var;
  double var_diffuse = (1e12 + base.evolution_var) * fnorm + base.obs_var;
  double expected = 1.0 / std::sqrt(2.0 * M_PI * var_sigma) -
                    1.0 / std::sqrt(2.0 * M_PI * var_diffuse);
  REQUIRE(sup[0] == Approx(expected).epsilon(1e-3));
}

TEST_CASE("experiment drivers pass and write coherent summaries") {
  Theorem2ExperimentOptions t2;
  t2.n_main = 200000;
  t2.n_random_configs = 20;
  t2.n_random = 20000;
  Theorem2Experiment ex2 = run_theorem2_experiment(t2);
  REQUIRE(ex2.pass);

  Corollary2ExperimentOptions c2;
  Corollary2Experiment exc = run_corollary2_experiment(c2);
  REQUIRE(exc.pass);
}
