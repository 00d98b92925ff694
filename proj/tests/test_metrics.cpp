#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "linkrec/error.hpp"
#include "linkrec/metrics.hpp"
#include "test_support.hpp"

using namespace linkrec;

TEST_CASE("symmetrize_scores") {
  Mat s = Mat::Zero(3, 3);
  s(0, 1) = 0.8;
  s(1, 0) = 0.6;
  s(0, 2) = 0.2;
  s(2, 0) = 0.2;
  const ScoredPairs pairs = symmetrize_scores(s);
  CHECK(pairs.size() == 3);  // n(n-1)/2
  CHECK(pairs[0].i == 0);
  CHECK(pairs[0].j == 1);
  CHECK(pairs[0].score == doctest::Approx(0.7));
  CHECK(pairs[1].score == doctest::Approx(0.2));

  // Symmetric input passes through unchanged.
  Rng rng(1);
  const Mat sym = symmetrized(test::random_matrix(5, 5, rng));
  for (const ScoredPair& sp : symmetrize_scores(sym))
    CHECK(sp.score == sym(sp.i, sp.j));
}

TEST_CASE("auc basics") {
  CHECK(auc(std::vector<double>{0.9}, std::vector<double>{0.1}) == 1.0);
  CHECK(auc(std::vector<double>{0.5}, std::vector<double>{0.5}) == 0.5);
  CHECK(auc(std::vector<double>{0.8, 0.4}, std::vector<double>{0.6, 0.2}) ==
        0.75);
  CHECK_THROWS_AS(auc({}, std::vector<double>{0.1}), std::invalid_argument);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1}, {}), std::invalid_argument);
}

TEST_CASE("rank-sum auc equals brute force on 1000 random tied instances") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t p = 1 + rng.bounded(50);
    const size_t q = 1 + rng.bounded(50);
    // Coarse score grid forces plenty of ties.
    std::vector<double> pos(p), neg(q);
    for (double& s : pos) s = static_cast<double>(rng.bounded(8)) / 7.0;
    for (double& s : neg) s = static_cast<double>(rng.bounded(8)) / 7.0;
    CHECK(auc(pos, neg) == test::auc_bruteforce(pos, neg));
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(5);
  std::vector<double> pos(20), neg(30);
  for (double& s : pos) s = rng.uniform();
  for (double& s : neg) s = rng.uniform();
  const double base = auc(pos, neg);

  auto apply = [](std::vector<double> v, auto f) {
    std::transform(v.begin(), v.end(), v.begin(), f);
    return v;
  };
  auto affine = [](double x) { return 3.0 * x + 2.0; };
  auto expf = [](double x) { return std::exp(x); };
  CHECK(auc(apply(pos, affine), apply(neg, affine)) == base);
  CHECK(auc(apply(pos, expf), apply(neg, expf)) == base);
}

TEST_CASE("auc complement identity for tie-free inputs") {
  Rng rng(6);
  std::vector<double> pos, neg;
  for (int i = 0; i < 25; ++i) pos.push_back(rng.uniform() + 2.0 * i);
  for (int i = 0; i < 15; ++i) neg.push_back(rng.uniform() + 2.0 * i + 0.5);
  CHECK(auc(pos, neg) + auc(neg, pos) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("average_precision") {
  CHECK(average_precision(std::vector<ScoredLabel>{{0.9, 1}, {0.1, 0}}) == 1.0);
  CHECK(average_precision(std::vector<ScoredLabel>{{0.9, 0}, {0.1, 1}}) == 0.5);
  CHECK(average_precision(std::vector<ScoredLabel>{{0.3, 1}}) == 1.0);

  // Perfect ranking: every positive above every negative.
  std::vector<ScoredLabel> perfect;
  for (int i = 0; i < 5; ++i) perfect.push_back({10.0 - i, 1});
  for (int i = 0; i < 5; ++i) perfect.push_back({1.0 - i, 0});
  CHECK(average_precision(perfect) == 1.0);

  CHECK_THROWS_AS(average_precision(std::vector<ScoredLabel>{{0.5, 0}}),
                  std::invalid_argument);

  // Ties keep input order: a positive listed before an equal-scored negative
  // ranks above it.
  CHECK(average_precision(std::vector<ScoredLabel>{{0.5, 1}, {0.5, 0}}) == 1.0);
  CHECK(average_precision(std::vector<ScoredLabel>{{0.5, 0}, {0.5, 1}}) == 0.5);
}

TEST_CASE("precision_at_l") {
  ScoredPairs ranked{{0, 1, 0.9}, {0, 2, 0.8}, {1, 2, 0.7}, {0, 3, 0.6}};
  const std::vector<Edge> probe{{0, 1}, {0, 2}, {0, 3}};
  CHECK(precision_at_l(ranked, probe, 4) == 0.75);  // 3 of top-4
  CHECK(precision_at_l(ranked, {{0, 1}, {0, 2}}, 2) == 1.0);
  CHECK_THROWS_AS(precision_at_l(ranked, {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(precision_at_l(ranked, probe, 5), std::invalid_argument);
  CHECK_THROWS_AS(precision_at_l(ranked, probe, 0), std::invalid_argument);
}

TEST_CASE("rank_pairs breaks ties by pair index") {
  ScoredPairs pairs{{1, 2, 0.5}, {0, 1, 0.5}, {0, 2, 0.9}};
  const ScoredPairs desc = rank_pairs(pairs, true);
  CHECK(desc[0].score == 0.9);
  CHECK(desc[1].i == 0);  // (0,1) before (1,2) at equal score
  CHECK(desc[2].i == 1);
  const ScoredPairs asc = rank_pairs(pairs, false);
  CHECK(asc[0].i == 0);
  CHECK(asc[0].j == 1);
}

TEST_CASE("baseline scores on hand-checked graphs") {
  const Graph path(3, {{0, 1}, {1, 2}});
  auto score_of = [](const ScoredPairs& pairs, NodeId i, NodeId j) {
    for (const ScoredPair& sp : pairs)
      if (sp.i == i && sp.j == j) return sp.score;
    FAIL("pair not found");
    return 0.0;
  };

  const ScoredPairs cn = baseline_scores(BaselineKind::kCommonNeighbors, path);
  CHECK(score_of(cn, 0, 2) == 1.0);
  const ScoredPairs ra = baseline_scores(BaselineKind::kResourceAllocation, path);
  CHECK(score_of(ra, 0, 2) == 0.5);  // the middle node has degree 2

  const Graph triangle(3, {{0, 1}, {0, 2}, {1, 2}});
  CHECK(score_of(baseline_scores(BaselineKind::kCommonNeighbors, triangle), 0,
                 1) == 1.0);

  // Star with k leaves: RA between two leaves is 1/k.
  for (NodeId k = 2; k <= 10; ++k) {
    std::vector<Edge> edges;
    for (NodeId leaf = 1; leaf <= k; ++leaf) edges.emplace_back(0, leaf);
    const Graph star(k + 1, edges);
    const ScoredPairs scores =
        baseline_scores(BaselineKind::kResourceAllocation, star);
    CHECK(score_of(scores, 1, 2) ==
          doctest::Approx(1.0 / static_cast<double>(k)).epsilon(1e-12));
  }
}

TEST_CASE("baseline properties on random graphs") {
  const Graph g = test::random_graph(14, 30, 4);
  const ScoredPairs cn = baseline_scores(BaselineKind::kCommonNeighbors, g);
  const ScoredPairs ra = baseline_scores(BaselineKind::kResourceAllocation, g);
  const ScoredPairs lp0 = baseline_scores(BaselineKind::kLocalPath, g, 0.0);

  for (size_t k = 0; k < cn.size(); ++k) {
    CHECK(cn[k].score >= 0.0);
    CHECK(ra[k].score >= 0.0);
    CHECK(lp0[k].score == cn[k].score);  // LP with epsilon=0 reduces to A^2
  }
  CHECK_THROWS_AS(baseline_from_string("Katz"), ConfigError);
  CHECK(baseline_from_string("cn") == BaselineKind::kCommonNeighbors);
}

TEST_CASE("evaluate_reconstruction with a perfect oracle") {
  // Original: 12-node graph; observed drops two edges.
  const Graph original = test::random_graph(12, 24, 9);
  const Graph observed = split_observed(original, 0.9, 3);
  const std::vector<Edge> missing =
      edge_difference(original.edges(), observed.edges());
  REQUIRE(missing.size() == 2);

  Mat scores = Mat::Zero(12, 12);
  for (const Edge& e : missing) {
    scores(e.u, e.v) = 1.0;
    scores(e.v, e.u) = 1.0;
  }

  const PerturbationResult spurious = perturb(observed, 0.0, 0.1, 5);
  REQUIRE_FALSE(spurious.added.empty());
  Mat sp_scores = Mat::Ones(12, 12);
  for (const Edge& e : spurious.added) {
    sp_scores(e.u, e.v) = 0.0;
    sp_scores(e.v, e.u) = 0.0;
  }

  const MetricsReport report = evaluate_reconstruction(
      scores, original, observed, spurious, sp_scores);
  CHECK(report.auc == 1.0);
  CHECK(report.ap == 1.0);
  CHECK(report.precision_missing == 1.0);
  CHECK(report.precision_spurious == 1.0);
  CHECK(report.auc_spurious == 1.0);
  CHECK(report.L_missing == 2);
  CHECK(report.L_spurious == static_cast<int64_t>(spurious.added.size()));

  const std::string json = report.to_json();
  CHECK(json.find("\"auc\"") != std::string::npos);
  CHECK(json.find("\"precision_spurious\"") != std::string::npos);
}

TEST_CASE("random scores produce chance-level missing-link AUC") {
  const Graph original = test::random_graph(30, 120, 31);
  const Graph observed = split_observed(original, 0.8, 7);
  const PerturbationResult spurious = perturb(observed, 0.0, 0.1, 11);

  double total = 0.0;
  Rng rng(123);
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const Mat scores = test::random_matrix(30, 30, rng, 0.0, 1.0);
    const MetricsReport report = evaluate_reconstruction(
        scores, original, observed, spurious, scores);
    total += report.auc;
  }
  CHECK(std::abs(total / trials - 0.5) < 0.05);
}

TEST_CASE("evaluate_reconstruction rejects empty probes") {
  const Graph original = test::random_graph(10, 20, 1);
  const PerturbationResult spurious = perturb(original, 0.0, 0.1, 2);
  const Mat scores = Mat::Zero(10, 10);
  // observed == original -> no missing links.
  CHECK_THROWS_AS(
      evaluate_reconstruction(scores, original, original, spurious, scores),
      DataError);
}
