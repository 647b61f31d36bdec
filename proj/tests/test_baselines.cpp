#include <doctest.h>

#include <cmath>

#include "rss/baselines.hpp"
#include "rss/error.hpp"
#include "rss/rng.hpp"

using namespace rss;

namespace {

/// Noise dataset where column `planted` (if >= 0) is shifted by +/- shift.
Dataset planted_dataset(Index n, Index p, std::uint64_t seed, Index planted, double shift) {
  auto rng = derive_stream(seed, 0);
  RowMatrix X(n, p);
  Labels y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    if (planted >= 0) X(i, planted) += shift * y[i];
  }
  return Dataset(X, y);
}

Index argmax(const std::vector<double>& v) {
  return static_cast<Index>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("ttest_scores") {
  SUBCASE("worked example") {
    RowMatrix X(4, 1);
    X << 1, 2, 0, 1;
    Labels y(4);
    y << 1, 1, -1, -1;
    // means 1.5 vs 0.5, variances 0.5 each: t = 1 / sqrt(0.25 + 0.25).
    const auto t = ttest_scores(Dataset(X, y));
    CHECK(t[0] == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("identical classes score zero") {
    RowMatrix X(4, 3);
    X << 1, 2, 3,  //
        4, 5, 6,   //
        1, 2, 3,   //
        4, 5, 6;
    Labels y(4);
    y << 1, 1, -1, -1;
    for (double v : ttest_scores(Dataset(X, y))) CHECK(v == 0.0);
  }
  SUBCASE("planted column ranks first and scores are scale invariant") {
    const auto d = planted_dataset(40, 30, 1, 17, 1.5);
    const auto t = ttest_scores(d);
    CHECK(argmax(t) == 17);
    RowMatrix X = d.X();
    X.col(17) *= 1000.0;
    X.col(3) = X.col(3) * -2.0 + Eigen::VectorXd::Constant(40, 5.0);
    const auto u = ttest_scores(Dataset(X, d.y()));
    for (std::size_t j = 0; j < t.size(); ++j) CHECK(u[j] == doctest::Approx(t[j]).epsilon(1e-9));
  }
  SUBCASE("one sample per class is rejected") {
    RowMatrix X(3, 1);
    X << 1, 2, 3;
    Labels y(3);
    y << 1, -1, -1;
    CHECK_THROWS_AS(ttest_scores(Dataset(X, y)), Error);
  }
}

TEST_CASE("l1 and l2 weight scores") {
  const auto d = planted_dataset(60, 40, 2, 5, 2.0);
  SolverConfig cfg;
  cfg.lambda = 0.2;
  const auto l1 = l1_weight_scores(d, cfg);
  CHECK(argmax(l1) == 5);
  CHECK(std::count_if(l1.begin(), l1.end(), [](double v) { return v > 0; }) < 40);
  for (double v : l1) CHECK(v >= 0.0);

  const auto l2 = l2_weight_scores(d, 1.0);
  CHECK(argmax(l2) == 5);
  for (double v : l2) CHECK(v > 0.0);

  SolverConfig tight = cfg;
  tight.max_iters = 1;
  tight.lambda = 100;
  CHECK_THROWS_AS(l1_weight_scores(d, tight), Error);
}

TEST_CASE("randomized_l1") {
  const auto d = planted_dataset(60, 40, 3, 9, 2.0);
  RandL1Config cfg;
  cfg.K = 30;
  cfg.solver.lambda = 0.2;
  const auto s = randomized_l1(d, cfg);
  s.validate();
  CHECK(s.K == 30);
  CHECK(s.counts[9] == 30);
  for (std::size_t j = 0; j < s.counts.size(); ++j) {
    if (j != 9) CHECK(s.counts[j] < 30);
  }

  SUBCASE("weakness 1 is plain subsampled L1") {
    cfg.weakness = 1.0;
    const auto a = randomized_l1(d, cfg);
    a.validate();
    CHECK(a.counts[9] == 30);
  }
  SUBCASE("deterministic across thread counts") {
    cfg.threads = 4;
    CHECK(randomized_l1(d, cfg).counts == s.counts);
  }
  SUBCASE("invalid configuration") {
    cfg.weakness = 0.0;
    CHECK_THROWS_AS(randomized_l1(d, cfg), Error);
    cfg.weakness = 0.5;
    cfg.K = 0;
    CHECK_THROWS_AS(randomized_l1(d, cfg), Error);
  }
}
