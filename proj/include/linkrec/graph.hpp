#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "linkrec/matrix.hpp"

namespace linkrec {

using NodeId = int32_t;

// Unordered node pair stored canonically with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  Edge() = default;
  Edge(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected, unweighted graph over dense 0-indexed node ids.
// Invariants: no self-loops, no duplicates, endpoints < node_count().
class Graph {
 public:
  Graph(NodeId n, std::vector<Edge> edges);

  NodeId node_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }  // sorted, unique
  size_t edge_count() const { return edges_.size(); }

  bool has_edge(NodeId u, NodeId v) const;

  // All node pairs (u < v) absent from the graph, in lexicographic order.
  std::vector<Edge> non_edges() const;

  std::vector<int> degrees() const;
  std::vector<std::vector<NodeId>> adjacency_lists() const;

 private:
  uint64_t key(NodeId u, NodeId v) const;

  NodeId n_;
  std::vector<Edge> edges_;
  std::unordered_set<uint64_t> edge_keys_;
};

struct PerturbationResult {
  Graph graph;               // perturbed graph
  std::vector<Edge> deleted; // removed from the source, sorted
  std::vector<Edge> added;   // injected non-edges of the source, sorted
};

struct Dataset {
  Graph original;
  Graph observed;
  std::vector<PerturbationResult> train;
  std::vector<PerturbationResult> val;
  std::vector<Edge> missing;   // original-graph edges absent from observed
  std::vector<Edge> spurious;  // empty under the split protocol
  int val_overlap = 0;         // residual train/val perturbation overlap
};

// Edge-list file: one "u v" pair per line, '#' comments, optional
// "# nodes: N" header overriding the 1 + max-id node count.
Graph load_edge_list(const std::filesystem::path& path);
void save_edge_list(const Graph& g, const std::filesystem::path& path);

// Permissive loader for raw datasets: arbitrary non-negative integer labels
// are remapped to dense ids (ascending label order); self-loop lines are
// dropped. Returns the graph and the dense-id -> original-label table.
std::pair<Graph, std::vector<int64_t>> load_edge_list_remapped(
    const std::filesystem::path& path);

Mat to_adjacency(const Graph& g);

// Uniform random subgraph keeping round(keep_fraction * |E|) edges.
Graph split_observed(const Graph& g, double keep_fraction, uint64_t seed);

// Random mapping: delete round(del_fraction * |E|) existing edges and add
// round(add_fraction * |E|) non-edges, both uniform without replacement.
PerturbationResult perturb(const Graph& g, double del_fraction,
                           double add_fraction, uint64_t seed);

// Observed split plus t augmented graphs with a 90/10 train/val split.
// Validation perturbations are resampled (bounded attempts) until their
// deleted/added sets are disjoint from every training perturbation.
Dataset build_dataset(const Graph& original, double keep_fraction, int t,
                      double del_fraction, double add_fraction, uint64_t seed);

// Set helper shared with evaluation: sorted difference a \ b.
std::vector<Edge> edge_difference(const std::vector<Edge>& a,
                                  const std::vector<Edge>& b);

}  // namespace linkrec
