#include <doctest.h>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "rss/error.hpp"
#include "rss/evaluation.hpp"
#include "rss/rng.hpp"

using namespace rss;

namespace {

Dataset separable(Index n, Index p, std::uint64_t seed, std::vector<Index> informative, double shift) {
  auto rng = derive_stream(seed, 0);
  RowMatrix X(n, p);
  Labels y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    for (auto j : informative) X(i, j) += shift * y[i];
  }
  return Dataset(X, y);
}

}  // namespace

TEST_CASE("precision_recall_curve matches a brute-force oracle") {
  auto rng = derive_stream(1, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = static_cast<Index>(2 + rng.below(11));
    std::vector<double> s(static_cast<std::size_t>(p));
    for (auto& v : s) v = static_cast<double>(rng.below(5));  // many ties
    std::vector<Index> truth;
    for (Index j = 0; j < p; ++j)
      if (rng.uniform() < 0.4) truth.push_back(j);
    if (truth.empty()) truth.push_back(0);
    const auto curve = precision_recall_curve(s, truth);
    const auto oracle = oracle::brute_pr(s, truth);
    REQUIRE(curve.points.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      CHECK(curve.points[k].threshold == oracle[k].threshold);
      CHECK(curve.points[k].precision == doctest::Approx(oracle[k].precision));
      CHECK(curve.points[k].recall == doctest::Approx(oracle[k].recall));
    }
    CHECK(curve.auc == doctest::Approx(oracle::brute_auc(oracle)));
    CHECK(pr_auc(curve.points) == doctest::Approx(curve.auc));
  }
}

TEST_CASE("PR area examples and invariance") {
  const std::vector<double> perfect{0.9, 0.8, 0.1, 0.0};
  const std::vector<Index> truth{0, 1};
  CHECK(precision_recall_curve(perfect, truth).auc == doctest::Approx(1.0));

  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  const auto c = precision_recall_curve(flat, truth);
  CHECK(c.points.size() == 1);
  CHECK(c.auc == doctest::Approx(0.75));  // (1 + 0.5) / 2

  auto rng = derive_stream(2, 0);
  std::vector<double> s(30);
  for (auto& v : s) v = rng.normal();
  std::vector<double> t(30);
  std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3 * v) + 7; });
  const std::vector<Index> tr{1, 4, 9, 22};
  CHECK(precision_recall_curve(s, tr).auc == doctest::Approx(precision_recall_curve(t, tr).auc));

  CHECK_THROWS_AS(precision_recall_curve(flat, std::vector<Index>{}), Error);
  CHECK_THROWS_AS(precision_recall_curve(flat, std::vector<Index>{4}), Error);
}

TEST_CASE("top_t_selection") {
  auto rng = derive_stream(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(20);
    for (auto& v : s) v = static_cast<double>(rng.below(6));
    const auto T = static_cast<Index>(1 + rng.below(20));
    CHECK(top_t_selection(s, T) == oracle::stable_top_t(s, T));
  }
  CHECK_THROWS_AS(top_t_selection(std::vector<double>{1.0}, 2), Error);
}

TEST_CASE("stratified_folds") {
  Labels y(23);
  for (Index i = 0; i < 23; ++i) y[i] = i < 13 ? 1 : -1;
  const auto f = stratified_folds(y, {5, 4, 1.0});
  std::vector<int> pos(5, 0), neg(5, 0);
  for (Index i = 0; i < 23; ++i) (y[i] == 1 ? pos : neg)[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])]++;
  for (int k = 0; k < 5; ++k) {
    CHECK(pos[static_cast<std::size_t>(k)] >= 2);
    CHECK(pos[static_cast<std::size_t>(k)] <= 3);
    CHECK(neg[static_cast<std::size_t>(k)] >= 2);
  }
  CHECK(stratified_folds(y, {5, 4, 1.0}) == f);
}

TEST_CASE("prediction_accuracy") {
  const auto train = separable(60, 10, 4, {2}, 3.0);
  const auto test = separable(60, 10, 5, {2}, 3.0);
  const std::vector<Index> good{2};
  CHECK(prediction_accuracy(train, test, good, 1.0) >= 0.95);
  const std::vector<Index> bad{5, 6};
  CHECK(prediction_accuracy(train, test, bad, 1.0) < 0.8);
  CHECK_THROWS_AS(prediction_accuracy(train, test, std::vector<Index>{}, 1.0), Error);
}

TEST_CASE("cv_threshold and cv_lambda") {
  const auto d = separable(60, 8, 6, {0, 1}, 1.5);
  // High scores exactly on informative columns: every grid value selecting
  // only them ties, so the largest such threshold wins.
  const std::vector<double> scores{0.95, 0.95, 0.35, 0.1, 0.1, 0.1, 0.1, 0.1};
  const auto grid = default_threshold_grid();
  CHECK(grid.size() == 7);
  CHECK(grid.front() == doctest::Approx(0.3));
  CHECK(grid.back() == doctest::Approx(0.9));
  CHECK(cv_threshold(d, scores, grid) == doctest::Approx(0.9));

  const std::vector<double> none{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  CHECK_THROWS_AS(cv_threshold(d, none, grid), Error);

  const std::vector<double> lambdas{0.001, 1.0, 10.0};
  const double lam = cv_lambda(d, lambdas);
  CHECK(lam > 0.001);
  const auto acc = cv_lambda_accuracy(d, lambdas);
  REQUIRE(acc.size() == 3);
  CHECK(acc[0] == doctest::Approx(0.5).epsilon(0.2));  // penalty-dominated: intercept only
  const auto best = std::max_element(acc.begin(), acc.end()) - acc.begin();
  CHECK(lam == lambdas[static_cast<std::size_t>(best)]);  // first maximum is the smallest weight
}

TEST_CASE("permutation_fp_estimate") {
  const auto d = separable(20, 5, 7, {}, 0.0);
  int calls = 0;
  Selector sel = [&](const Dataset& dd, std::uint64_t) {
    ++calls;
    CHECK(dd.count_label(1) == 10);
    StabilityScores s{{10, 10, 5, 0, 0}, 10};
    return s;
  };
  const auto one = permutation_fp_estimate(d, sel, 0.5, 1, 0);
  CHECK(calls == 1);
  CHECK(one.estimate == 3.0);
  CHECK(one.replicate_counts == std::vector<std::int64_t>{3});
  const auto none = permutation_fp_estimate(d, sel, 1.5, 4, 0);
  CHECK(none.estimate == 0.0);
  CHECK_THROWS_AS(permutation_fp_estimate(d, sel, 0.5, 0, 0), Error);

  // Labels actually get permuted, and deterministically.
  std::vector<Labels> seen_a, seen_b;
  Selector rec_a = [&](const Dataset& dd, std::uint64_t) { seen_a.push_back(dd.y()); return StabilityScores{{0, 0, 0, 0, 0}, 1}; };
  Selector rec_b = [&](const Dataset& dd, std::uint64_t) { seen_b.push_back(dd.y()); return StabilityScores{{0, 0, 0, 0, 0}, 1}; };
  permutation_fp_estimate(d, rec_a, 0.5, 3, 9);
  permutation_fp_estimate(d, rec_b, 0.5, 3, 9);
  CHECK(seen_a == seen_b);
  CHECK(seen_a[0] != d.y());
  CHECK(seen_a[0] != seen_a[1]);
}

TEST_CASE("evaluation edge cases") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2, 0.1};
  const std::vector<Index> truth{0, 2};
  const auto c = precision_recall_curve(s, truth);
  REQUIRE(c.points.size() == 5);
  CHECK(c.points[1].precision == 0.5);
  CHECK(c.points[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(c.points[2].recall == 1.0);
  CHECK(c.points[4].precision == doctest::Approx(0.4));
  CHECK(top_t_selection(s, 5) == std::vector<Index>{0, 1, 2, 3, 4});

  const auto d = separable(30, 4, 8, {0}, 2.0);
  const std::vector<double> grid{0.6};
  const std::vector<double> scores{0.9, 0.1, 0.1, 0.1};
  CHECK(cv_threshold(d, scores, grid) == 0.6);

  // Intercept-only model on constant features: majority-class rate.
  RowMatrix Z = RowMatrix::Zero(10, 2);
  Labels y(10);
  y << 1, 1, 1, 1, 1, 1, 1, -1, -1, -1;
  const Dataset zd(Z, y);
  CHECK(prediction_accuracy(zd, zd, std::vector<Index>{0, 1}, 1.0) == doctest::Approx(0.7));
}
