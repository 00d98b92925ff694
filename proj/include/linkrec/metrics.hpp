#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "linkrec/graph.hpp"
#include "linkrec/matrix.hpp"

namespace linkrec {

struct ScoredPair {
  NodeId i = 0;  // i < j
  NodeId j = 0;
  double score = 0.0;
};
using ScoredPairs = std::vector<ScoredPair>;

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 1 = relevant
};

struct MetricsReport {
  double auc = 0.0;  // missing-link ranking
  double ap = 0.0;
  double precision_missing = 0.0;
  double precision_spurious = 0.0;
  double auc_spurious = 0.0;  // injected edges as positives-for-low-score
  int64_t L_missing = 0;
  int64_t L_spurious = 0;

  std::string to_json() const;
};

// Per unordered pair (i < j), the average of the two directed scores;
// diagonal discarded. Pairs are emitted in lexicographic order.
ScoredPairs symmetrize_scores(const Mat& scores);

// (#{pos > neg} + 0.5 #{pos = neg}) / (|pos| |neg|), via a rank-sum over the
// sorted pool; tie groups contribute exact half credit.
double auc(std::span<const double> pos, std::span<const double> neg);

// AP over the descending-score ranking; equal scores keep input order, so
// the caller's ordering is the deterministic tie key.
double average_precision(std::span<const ScoredLabel> items);

// Sorted copy: by score (descending or ascending), ties by pair index.
ScoredPairs rank_pairs(ScoredPairs pairs, bool descending);

// Fraction of the first L ranked pairs that belong to the probe set.
double precision_at_l(const ScoredPairs& ranked, const std::vector<Edge>& probe,
                      size_t l);

// Missing-link protocol: candidate pool = pairs absent from the observed
// graph, positives = original \ observed edges, negatives = the original
// graph's non-edges. Spurious protocol: rank the spurious test graph's
// existing edges ascending and recover the injected set. scores_observed and
// scores_spurious are the model outputs on the observed and test graphs.
MetricsReport evaluate_reconstruction(const Mat& scores_observed,
                                      const Graph& original,
                                      const Graph& observed,
                                      const PerturbationResult& spurious_test,
                                      const Mat& scores_spurious);

enum class BaselineKind { kCommonNeighbors, kResourceAllocation, kLocalPath };

BaselineKind baseline_from_string(const std::string& name);

// Heuristic similarity scores for every pair i < j of the graph.
// CN = |N(u) ∩ N(v)|; RA = sum over common neighbors of 1/deg;
// LP = A^2 + epsilon A^3.
ScoredPairs baseline_scores(BaselineKind kind, const Graph& g,
                            double epsilon = 1e-3);

// CSV rows "i,j,score,rank,in_probe" for an already-ranked list.
void write_scores_csv(const std::filesystem::path& path,
                      const ScoredPairs& ranked,
                      const std::vector<Edge>& probe);

}  // namespace linkrec
