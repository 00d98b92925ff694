#include "linkrec/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "linkrec/error.hpp"
#include "linkrec/io.hpp"

namespace linkrec {

namespace {

uint64_t edge_key(NodeId u, NodeId v) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(u)) << 32) |
         static_cast<uint32_t>(v);
}

std::unordered_set<uint64_t> edge_set(const std::vector<Edge>& edges) {
  std::unordered_set<uint64_t> keys;
  keys.reserve(edges.size() * 2);
  for (const Edge& e : edges) keys.insert(edge_key(e.u, e.v));
  return keys;
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j{{"auc", auc},
                   {"ap", ap},
                   {"precision_missing", precision_missing},
                   {"precision_spurious", precision_spurious},
                   {"auc_spurious", auc_spurious},
                   {"L_missing", L_missing},
                   {"L_spurious", L_spurious}};
  return j.dump(2) + "\n";
}

ScoredPairs symmetrize_scores(const Mat& scores) {
  if (scores.rows() != scores.cols())
    throw std::invalid_argument("symmetrize_scores: matrix not square");
  const auto n = static_cast<NodeId>(scores.rows());
  ScoredPairs pairs;
  pairs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      pairs.push_back({i, j, 0.5 * (scores(i, j) + scores(j, i))});
  return pairs;
}

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("auc: empty score list");
  std::vector<std::pair<double, int>> pool;
  pool.reserve(pos.size() + neg.size());
  for (double s : pos) pool.emplace_back(s, 1);
  for (double s : neg) pool.emplace_back(s, 0);
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Twice the positive midrank sum stays integral, so the rank-sum route is
  // bit-identical to brute-force pair counting.
  int64_t twice_pos_rank_sum = 0;
  size_t i = 0;
  while (i < pool.size()) {
    size_t j = i;
    int64_t positives = 0;
    while (j < pool.size() && pool[j].first == pool[i].first) {
      positives += pool[j].second;
      ++j;
    }
    // 1-based ranks i+1..j share midrank (i+1+j)/2.
    twice_pos_rank_sum += positives * static_cast<int64_t>(i + 1 + j);
    i = j;
  }
  const auto p = static_cast<int64_t>(pos.size());
  const auto q = static_cast<int64_t>(neg.size());
  const int64_t twice_wins = twice_pos_rank_sum - p * (p + 1);
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(p) *
                                            static_cast<double>(q));
}

double average_precision(std::span<const ScoredLabel> items) {
  std::vector<ScoredLabel> ranked(items.begin(), items.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) {
                     return a.score > b.score;
                   });
  int64_t positives = 0;
  double sum = 0.0;
  for (size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].label) {
      ++positives;
      sum += static_cast<double>(positives) / static_cast<double>(k + 1);
    }
  }
  if (positives == 0)
    throw std::invalid_argument("average_precision: no positive labels");
  return sum / static_cast<double>(positives);
}

ScoredPairs rank_pairs(ScoredPairs pairs, bool descending) {
  std::sort(pairs.begin(), pairs.end(),
            [descending](const ScoredPair& a, const ScoredPair& b) {
              if (a.score != b.score)
                return descending ? a.score > b.score : a.score < b.score;
              if (a.i != b.i) return a.i < b.i;
              return a.j < b.j;
            });
  return pairs;
}

double precision_at_l(const ScoredPairs& ranked, const std::vector<Edge>& probe,
                      size_t l) {
  if (probe.empty()) throw std::invalid_argument("precision_at_l: empty probe");
  if (l < 1 || l > ranked.size())
    throw std::invalid_argument("precision_at_l: L out of range");
  const auto keys = edge_set(probe);
  size_t hits = 0;
  for (size_t k = 0; k < l; ++k)
    hits += keys.count(edge_key(ranked[k].i, ranked[k].j));
  return static_cast<double>(hits) / static_cast<double>(l);
}

MetricsReport evaluate_reconstruction(const Mat& scores_observed,
                                      const Graph& original,
                                      const Graph& observed,
                                      const PerturbationResult& spurious_test,
                                      const Mat& scores_spurious) {
  if (scores_observed.rows() != original.node_count() ||
      original.node_count() != observed.node_count())
    throw DataError("evaluate_reconstruction: node counts disagree");

  const std::vector<Edge> missing =
      edge_difference(original.edges(), observed.edges());
  if (missing.empty())
    throw DataError("evaluate_reconstruction: no missing links to score");
  const auto missing_keys = edge_set(missing);

  // Candidate pool: every pair the observed graph does not already contain.
  ScoredPairs pool;
  std::vector<double> pos, neg;
  std::vector<ScoredLabel> labeled;
  for (const ScoredPair& sp : symmetrize_scores(scores_observed)) {
    if (observed.has_edge(sp.i, sp.j)) continue;
    pool.push_back(sp);
    const bool is_missing = missing_keys.count(edge_key(sp.i, sp.j)) > 0;
    labeled.push_back({sp.score, is_missing ? 1 : 0});
    if (is_missing)
      pos.push_back(sp.score);
    else if (!original.has_edge(sp.i, sp.j))
      neg.push_back(sp.score);
  }

  MetricsReport report;
  report.auc = auc(pos, neg);
  report.ap = average_precision(labeled);
  report.L_missing = static_cast<int64_t>(missing.size());
  report.precision_missing =
      precision_at_l(rank_pairs(pool, /*descending=*/true), missing, missing.size());

  // Spurious links: the test graph's own edges ranked ascending; the
  // injected fakes should sit at the bottom of the likelihood ranking.
  const Graph& test_graph = spurious_test.graph;
  if (spurious_test.added.empty())
    throw DataError("evaluate_reconstruction: spurious test has no injected edges");
  if (scores_spurious.rows() != test_graph.node_count())
    throw DataError("evaluate_reconstruction: spurious score shape mismatch");
  const auto injected_keys = edge_set(spurious_test.added);

  ScoredPairs existing;
  std::vector<double> low_pos, low_neg;  // negated scores
  for (const Edge& e : test_graph.edges()) {
    const double s =
        0.5 * (scores_spurious(e.u, e.v) + scores_spurious(e.v, e.u));
    existing.push_back({e.u, e.v, s});
    if (injected_keys.count(edge_key(e.u, e.v)))
      low_pos.push_back(-s);
    else
      low_neg.push_back(-s);
  }
  report.L_spurious = static_cast<int64_t>(spurious_test.added.size());
  report.precision_spurious =
      precision_at_l(rank_pairs(existing, /*descending=*/false),
                     spurious_test.added, spurious_test.added.size());
  report.auc_spurious = low_neg.empty() ? 1.0 : auc(low_pos, low_neg);
  return report;
}

BaselineKind baseline_from_string(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(c)));
  if (up == "CN") return BaselineKind::kCommonNeighbors;
  if (up == "RA") return BaselineKind::kResourceAllocation;
  if (up == "LP") return BaselineKind::kLocalPath;
  throw ConfigError("unknown baseline kind: " + name);
}

ScoredPairs baseline_scores(BaselineKind kind, const Graph& g, double epsilon) {
  const Mat a = to_adjacency(g);
  Mat s;
  switch (kind) {
    case BaselineKind::kCommonNeighbors:
      s.noalias() = a * a;
      break;
    case BaselineKind::kResourceAllocation: {
      const std::vector<int> deg = g.degrees();
      Mat weighted = a;
      for (Eigen::Index w = 0; w < a.rows(); ++w)
        if (deg[static_cast<size_t>(w)] > 0)
          weighted.row(w) /= static_cast<double>(deg[static_cast<size_t>(w)]);
      s.noalias() = a * weighted;
      break;
    }
    case BaselineKind::kLocalPath: {
      Mat a2;
      a2.noalias() = a * a;
      s = a2;
      s.noalias() += epsilon * (a2 * a);
      break;
    }
  }
  return symmetrize_scores(s);
}

void write_scores_csv(const std::filesystem::path& path,
                      const ScoredPairs& ranked,
                      const std::vector<Edge>& probe) {
  const auto keys = edge_set(probe);
  std::ostringstream out;
  out << "i,j,score,rank,in_probe\n";
  out.precision(17);
  for (size_t k = 0; k < ranked.size(); ++k) {
    const ScoredPair& sp = ranked[k];
    out << sp.i << "," << sp.j << "," << sp.score << "," << (k + 1) << ","
        << (keys.count(edge_key(sp.i, sp.j)) ? 1 : 0) << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace linkrec
