#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "synthcast/combine.hpp"
#include "synthcast/rng.hpp"

using namespace synthcast;
using Catch::Approx;

namespace {

// Brute-force grid search over the simplex for J = 2 (step 1e-4).
double mallows_grid_oracle(const std::vector<std::vector<double>>& preds,
                           const std::vector<double>& realized,
                           const std::vector<int>& k, double sigma2) {
  double best_w = 0.0, best_c = 1e300;
  for (int i = 0; i <= 10000; ++i) {
    double w = i / 10000.0;
    double c = 0.0;
    for (size_t t = 0; t < realized.size(); ++t) {
      double e = realized[t] - (w * preds[0][t] + (1.0 - w) * preds[1][t]);
      c += e * e;
    }
    c += 2.0 * sigma2 * (w * k[0] + (1.0 - w) * k[1]);
    if (c < best_c) {
      best_c = c;
      best_w = w;
    }
  }
  return best_w;
}

double criterion(const std::vector<std::vector<double>>& preds,
                 const std::vector<double>& realized, const std::vector<int>& k,
                 double sigma2, const std::vector<double>& w) {
  double c = 0.0;
  for (size_t t = 0; t < realized.size(); ++t) {
    double yhat = 0.0;
    for (size_t j = 0; j < w.size(); ++j) yhat += w[j] * preds[j][t];
    double e = realized[t] - yhat;
    c += e * e;
  }
  for (size_t j = 0; j < w.size(); ++j) c += 2.0 * sigma2 * w[j] * k[j];
  return c;
}

}  // namespace

TEST_CASE("equal_weights") {
  REQUIRE(equal_weights(2).w == std::vector<double>{0.5, 0.5});
  REQUIRE(equal_weights(1).w == std::vector<double>{1.0});
  REQUIRE(equal_weights(4).w == std::vector<double>(4, 0.25));
  REQUIRE_THROWS_AS(equal_weights(0), std::invalid_argument);
}

TEST_CASE("bma_update softmax of cumulative scores") {
  BmaScoreState st(2);
  auto r = bma_update(st, {0.3, 0.3});
  REQUIRE(r.weights.w[0] == Approx(0.5).margin(1e-15));
  REQUIRE(r.weights.w[1] == Approx(0.5).margin(1e-15));

  BmaScoreState st2(2);
  st2.cum_log_score = {0.0, std::log(3.0)};
  auto w2 = bma_current_weights(st2);
  REQUIRE(w2.w[0] == Approx(0.25).margin(1e-14));
  REQUIRE(w2.w[1] == Approx(0.75).margin(1e-14));

  BmaScoreState st3(2);
  auto r3 = bma_update(st3, {0.0, -1e4});
  REQUIRE(r3.weights.w[0] == Approx(1.0).margin(1e-12));
  REQUIRE(r3.weights.w[1] == Approx(0.0).margin(1e-12));
  REQUIRE(std::isfinite(r3.weights.w[1]));

  REQUIRE_THROWS_AS(bma_update(st3, {0.0, std::nan("")}), std::invalid_argument);
  REQUIRE_THROWS_AS(bma_update(st3, {0.0}), std::invalid_argument);
}

TEST_CASE("bma weights invariant to a common score shift") {
  RandomStream stream(77, 0);
  for (int trial = 0; trial < 50; ++trial) {
    BmaScoreState a(3), b(3);
    for (int step = 0; step < 5; ++step) {
      std::vector<double> inc(3);
      for (auto& v : inc) v = stream.normal();
      double shift = 10.0 * stream.normal();
      std::vector<double> inc_shifted = inc;
      for (auto& v : inc_shifted) v += shift;
      a = bma_update(a, inc).state;
      b = bma_update(b, inc_shifted).state;
    }
    auto wa = bma_current_weights(a);
    auto wb = bma_current_weights(b);
    for (int j = 0; j < 3; ++j)
      REQUIRE(wa.w[j] == Approx(wb.w[j]).margin(1e-12));
  }
}

TEST_CASE("mallows_weights worked examples") {
  std::vector<double> y = {1.0, 0.0};
  std::vector<std::vector<double>> preds = {{1.0, 0.0}, {0.0, 0.0}};

  auto w1 = mallows_weights(preds, y, {1, 1}, 0.0);
  REQUIRE(w1.w[0] == Approx(1.0).margin(1e-12));
  REQUIRE(w1.w[1] == Approx(0.0).margin(1e-12));

  auto w2 = mallows_weights(preds, y, {2, 1}, 0.5);
  REQUIRE(w2.w[0] == Approx(0.5).margin(1e-12));
  REQUIRE(w2.w[1] == Approx(0.5).margin(1e-12));

  std::vector<std::vector<double>> same = {{0.4, 0.6}, {0.4, 0.6}};
  auto w3 = mallows_weights(same, y, {1, 1}, 0.1);
  REQUIRE(w3.w[0] == Approx(0.5).margin(1e-12));
  REQUIRE(w3.w[1] == Approx(0.5).margin(1e-12));

  REQUIRE_THROWS_AS(mallows_weights(preds, {}, {1, 1}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("mallows_weights matches the grid oracle on random instances") {
  RandomStream stream(909, 1);
  for (int inst = 0; inst < 200; ++inst) {
    int S = 5 + static_cast<int>(stream.uniform01() * 20);
    std::vector<double> y(S);
    std::vector<std::vector<double>> preds(2, std::vector<double>(S));
    for (int t = 0; t < S; ++t) {
      y[t] = stream.normal();
      preds[0][t] = y[t] + 0.5 * stream.normal();
      preds[1][t] = y[t] + 0.7 * stream.normal();
    }
    std::vector<int> k = {1 + static_cast<int>(stream.uniform01() * 3),
                          1 + static_cast<int>(stream.uniform01() * 3)};
    double sigma2 = stream.uniform01();
    auto w = mallows_weights(preds, y, k, sigma2);
    double w_oracle = mallows_grid_oracle(preds, y, k, sigma2);
    REQUIRE(std::fabs(w.w[0] - w_oracle) < 1e-3);
    w.validate();
  }
}

TEST_CASE("mallows_weights never loses to equal weights or any vertex") {
  RandomStream stream(808, 2);
  for (int inst = 0; inst < 200; ++inst) {
    int J = 2 + static_cast<int>(stream.uniform01() * 3);  // 2..4
    int S = 8 + static_cast<int>(stream.uniform01() * 12);
    std::vector<double> y(S);
    std::vector<std::vector<double>> preds(J, std::vector<double>(S));
    for (int t = 0; t < S; ++t) {
      y[t] = stream.normal();
      for (int j = 0; j < J; ++j) preds[j][t] = y[t] + stream.normal();
    }
    std::vector<int> k(J);
    for (int j = 0; j < J; ++j) k[j] = 1 + static_cast<int>(stream.uniform01() * 3);
    double sigma2 = stream.uniform01();

    auto w = mallows_weights(preds, y, k, sigma2);
    w.validate();
    double c_star = criterion(preds, y, k, sigma2, w.w);
    double c_eq = criterion(preds, y, k, sigma2, equal_weights(J).w);
    REQUIRE(c_star <= c_eq + 1e-9);
    for (int j = 0; j < J; ++j) {
      std::vector<double> vertex(J, 0.0);
      vertex[j] = 1.0;
      REQUIRE(c_star <= criterion(preds, y, k, sigma2, vertex) + 1e-9);
    }
  }
}

TEST_CASE("pool_point") {
  REQUIRE(pool_point(WeightVector{{0.5, 0.5}}, {2.0, 4.0}) == Approx(3.0));
  REQUIRE(pool_point(WeightVector{{1.0, 0.0}}, {2.0, 4.0}) == Approx(2.0));
  REQUIRE(pool_point(WeightVector{{0.25, 0.75}}, {0.0, 4.0}) == Approx(3.0));
  REQUIRE_THROWS_AS(pool_point(WeightVector{{1.0}}, {2.0, 4.0}),
                    std::invalid_argument);
}
