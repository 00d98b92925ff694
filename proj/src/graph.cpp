#include "linkrec/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "linkrec/error.hpp"
#include "linkrec/io.hpp"
#include "linkrec/rng.hpp"

namespace linkrec {

namespace {

uint64_t pair_key(NodeId n, NodeId u, NodeId v) {
  return static_cast<uint64_t>(u) * static_cast<uint64_t>(n) +
         static_cast<uint64_t>(v);
}

std::vector<Edge> sorted_unique(std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

long long round_count(double fraction, size_t total) {
  return std::llround(fraction * static_cast<double>(total));
}

}  // namespace

Graph::Graph(NodeId n, std::vector<Edge> edges)
    : n_(n), edges_(sorted_unique(std::move(edges))) {
  if (n_ < 1) throw DataError("graph needs at least one node");
  edge_keys_.reserve(edges_.size() * 2);
  for (const Edge& e : edges_) {
    if (e.u == e.v) throw DataError("self-loop rejected");
    if (e.u < 0 || e.v >= n_)
      throw DataError("edge endpoint out of range: " + std::to_string(e.u) +
                      " " + std::to_string(e.v));
    edge_keys_.insert(pair_key(n_, e.u, e.v));
  }
}

uint64_t Graph::key(NodeId u, NodeId v) const {
  Edge e(u, v);
  return pair_key(n_, e.u, e.v);
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u == v) return false;
  return edge_keys_.count(key(u, v)) > 0;
}

std::vector<Edge> Graph::non_edges() const {
  std::vector<Edge> out;
  const size_t total = static_cast<size_t>(n_) * (n_ - 1) / 2;
  out.reserve(total - edges_.size());
  for (NodeId u = 0; u < n_; ++u)
    for (NodeId v = u + 1; v < n_; ++v)
      if (!edge_keys_.count(pair_key(n_, u, v))) out.emplace_back(u, v);
  return out;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<size_t>(n_), 0);
  for (const Edge& e : edges_) {
    ++deg[static_cast<size_t>(e.u)];
    ++deg[static_cast<size_t>(e.v)];
  }
  return deg;
}

std::vector<std::vector<NodeId>> Graph::adjacency_lists() const {
  std::vector<std::vector<NodeId>> adj(static_cast<size_t>(n_));
  for (const Edge& e : edges_) {
    adj[static_cast<size_t>(e.u)].push_back(e.v);
    adj[static_cast<size_t>(e.v)].push_back(e.u);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

namespace {

struct ParsedLine {
  bool has_edge = false;
  int64_t a = 0;
  int64_t b = 0;
};

// Strips an optional "# nodes: N" header comment into node_override.
ParsedLine parse_line(const std::string& raw, size_t lineno,
                      int64_t* node_override) {
  std::string line = raw;
  if (auto hash = line.find('#'); hash != std::string::npos) {
    std::istringstream comment(line.substr(hash + 1));
    std::string word;
    if (comment >> word && (word == "nodes:" || word == "nodes")) {
      int64_t n = 0;
      if (comment >> n && n > 0) *node_override = n;
    }
    line.resize(hash);
  }
  std::istringstream ss(line);
  int64_t a = 0, b = 0;
  if (!(ss >> a)) {
    std::string any;
    if (std::istringstream(line) >> any)
      throw DataError("malformed edge line " + std::to_string(lineno));
    return {};  // blank
  }
  std::string extra;
  if (!(ss >> b) || (ss >> extra))
    throw DataError("malformed edge line " + std::to_string(lineno) +
                    ": expected exactly two node ids");
  if (a < 0 || b < 0)
    throw DataError("negative node id on line " + std::to_string(lineno));
  return {true, a, b};
}

std::vector<ParsedLine> parse_edge_file(const std::filesystem::path& path,
                                        int64_t* node_override) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path.string());
  std::vector<ParsedLine> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    ParsedLine p = parse_line(line, lineno, node_override);
    if (p.has_edge) rows.push_back(p);
  }
  if (rows.empty()) throw DataError("empty edge set: " + path.string());
  return rows;
}

}  // namespace

Graph load_edge_list(const std::filesystem::path& path) {
  int64_t node_override = 0;
  const auto rows = parse_edge_file(path, &node_override);
  int64_t max_id = 0;
  std::vector<Edge> edges;
  edges.reserve(rows.size());
  for (const ParsedLine& p : rows) {
    if (p.a == p.b) throw DataError("self-loop rejected in " + path.string());
    max_id = std::max({max_id, p.a, p.b});
    edges.emplace_back(static_cast<NodeId>(p.a), static_cast<NodeId>(p.b));
  }
  const int64_t n = node_override > 0 ? node_override : max_id + 1;
  if (max_id >= n)
    throw DataError("node id exceeds declared node count in " + path.string());
  return Graph(static_cast<NodeId>(n), std::move(edges));
}

std::pair<Graph, std::vector<int64_t>> load_edge_list_remapped(
    const std::filesystem::path& path) {
  int64_t ignored = 0;
  const auto rows = parse_edge_file(path, &ignored);
  std::map<int64_t, NodeId> to_dense;
  for (const ParsedLine& p : rows) {
    if (p.a == p.b) continue;  // raw datasets may carry self-loops; drop them
    to_dense.emplace(p.a, 0);
    to_dense.emplace(p.b, 0);
  }
  std::vector<int64_t> labels;
  labels.reserve(to_dense.size());
  for (auto& [label, dense] : to_dense) {
    dense = static_cast<NodeId>(labels.size());
    labels.push_back(label);
  }
  std::vector<Edge> edges;
  edges.reserve(rows.size());
  for (const ParsedLine& p : rows) {
    if (p.a == p.b) continue;
    edges.emplace_back(to_dense.at(p.a), to_dense.at(p.b));
  }
  if (edges.empty()) throw DataError("empty edge set: " + path.string());
  return {Graph(static_cast<NodeId>(labels.size()), std::move(edges)),
          std::move(labels)};
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# nodes: " << g.node_count() << "\n";
  for (const Edge& e : g.edges()) out << e.u << " " << e.v << "\n";
  atomic_write(path, out.str());
}

Mat to_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Mat a = Mat::Zero(n, n);
  for (const Edge& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

Graph split_observed(const Graph& g, double keep_fraction, uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("keep_fraction must be in (0, 1]");
  const long long k = round_count(keep_fraction, g.edge_count());
  if (k < 1) throw DataError("observed graph would be empty");
  Rng rng(seed);
  const auto picks = sample_indices(g.edge_count(), static_cast<size_t>(k), rng);
  std::vector<Edge> kept;
  kept.reserve(picks.size());
  for (size_t i : picks) kept.push_back(g.edges()[i]);
  return Graph(g.node_count(), std::move(kept));
}

PerturbationResult perturb(const Graph& g, double del_fraction,
                           double add_fraction, uint64_t seed) {
  if (!(del_fraction >= 0.0 && del_fraction <= 1.0))
    throw ConfigError("del_fraction must be in [0, 1]");
  if (!(add_fraction >= 0.0 && add_fraction <= 1.0))
    throw ConfigError("add_fraction must be in [0, 1]");

  const size_t m = g.edge_count();
  const auto n_del = static_cast<size_t>(round_count(del_fraction, m));
  const auto n_add = static_cast<size_t>(round_count(add_fraction, m));

  Rng rng(seed);

  std::vector<Edge> deleted;
  deleted.reserve(n_del);
  for (size_t i : sample_indices(m, n_del, rng)) deleted.push_back(g.edges()[i]);
  std::sort(deleted.begin(), deleted.end());

  const std::vector<Edge> candidates = g.non_edges();
  if (n_add > candidates.size())
    throw DataError("requested add count exceeds available non-edges");
  std::vector<Edge> added;
  added.reserve(n_add);
  for (size_t i : sample_indices(candidates.size(), n_add, rng))
    added.push_back(candidates[i]);
  std::sort(added.begin(), added.end());

  std::vector<Edge> edges = edge_difference(g.edges(), deleted);
  edges.insert(edges.end(), added.begin(), added.end());
  return {Graph(g.node_count(), std::move(edges)), std::move(deleted),
          std::move(added)};
}

std::vector<Edge> edge_difference(const std::vector<Edge>& a,
                                  const std::vector<Edge>& b) {
  std::vector<Edge> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

namespace {

// Keys of a perturbation's touched pairs, for the train/val leakage check.
void insert_keys(const PerturbationResult& p, NodeId n,
                 std::unordered_set<uint64_t>* keys) {
  for (const Edge& e : p.deleted)
    keys->insert(pair_key(n, e.u, e.v));
  for (const Edge& e : p.added)
    keys->insert(pair_key(n, e.u, e.v));
}

int overlap_count(const PerturbationResult& p, NodeId n,
                  const std::unordered_set<uint64_t>& keys) {
  int c = 0;
  for (const Edge& e : p.deleted) c += keys.count(pair_key(n, e.u, e.v));
  for (const Edge& e : p.added) c += keys.count(pair_key(n, e.u, e.v));
  return c;
}

}  // namespace

Dataset build_dataset(const Graph& original, double keep_fraction, int t,
                      double del_fraction, double add_fraction, uint64_t seed) {
  if (t < 2) throw ConfigError("need at least 2 augmented graphs");

  Graph observed = split_observed(original, keep_fraction, derive_seed(seed, 0));
  const NodeId n = observed.node_count();

  std::vector<PerturbationResult> all;
  all.reserve(static_cast<size_t>(t));
  for (int i = 0; i < t; ++i)
    all.push_back(
        perturb(observed, del_fraction, add_fraction, derive_seed(seed, 100 + i)));

  const auto val_count =
      std::max<size_t>(1, static_cast<size_t>(round_count(0.1, t)));
  Rng split_rng(derive_seed(seed, 1));
  const auto order = shuffled_indices(static_cast<size_t>(t), split_rng);

  Dataset ds{original, std::move(observed), {}, {}, {}, {}, 0};
  std::unordered_set<uint64_t> train_keys;
  for (size_t r = 0; r + val_count < static_cast<size_t>(t); ++r) {
    ds.train.push_back(std::move(all[order[r]]));
    insert_keys(ds.train.back(), n, &train_keys);
  }
  // Validation missing/spurious links must not appear in any training
  // perturbation; resample with fresh derived seeds until disjoint.
  constexpr int kMaxAttempts = 64;
  for (size_t r = static_cast<size_t>(t) - val_count; r < static_cast<size_t>(t);
       ++r) {
    PerturbationResult best = std::move(all[order[r]]);
    int best_overlap = overlap_count(best, n, train_keys);
    for (int attempt = 1; attempt <= kMaxAttempts && best_overlap > 0; ++attempt) {
      PerturbationResult retry =
          perturb(ds.observed, del_fraction, add_fraction,
                  derive_seed(seed, 10000 + 1000 * order[r] + attempt));
      const int o = overlap_count(retry, n, train_keys);
      if (o < best_overlap) {
        best = std::move(retry);
        best_overlap = o;
      }
    }
    ds.val_overlap += best_overlap;
    ds.val.push_back(std::move(best));
  }

  ds.missing = edge_difference(original.edges(), ds.observed.edges());
  return ds;
}

}  // namespace linkrec
