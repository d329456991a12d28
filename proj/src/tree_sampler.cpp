#include "rstmrf/tree_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>


namespace rstmrf {

namespace {

constexpr Index kTerminal = -2;

SpanningForest run_wilson(const TreeDistribution& dist, Index root, bool use_terminal,
                          RngStream& rng, const WilsonOptions& options, WilsonStats* stats) {
  const GridGraph& g = *dist.graph;
  const Index n = g.vertex_count();
  if (dist.weights.size() != g.edge_count())
    throw std::invalid_argument("wilson: weight vector does not match graph");
  const double rho = use_terminal ? dist.terminal_weight : 0.0;

  std::vector<double> total(static_cast<std::size_t>(n), rho);
  for (Index v = 0; v < n; ++v)
    for (Index e : g.incident_edges(v)) total[v] += dist.weights[e];

  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::vector<Index> next(static_cast<std::size_t>(n), kNoParent);
  std::vector<Index> next_edge(static_cast<std::size_t>(n), -1);
  if (!use_terminal) in_tree[root] = 1;

  std::uint64_t steps = 0;
  for (Index start = 0; start < n; ++start) {
    Index u = start;
    while (u != kTerminal && !in_tree[u]) {
      if (++steps > options.max_steps) throw StepBudgetExceeded(options.max_steps);
      if (!(total[u] > 0.0)) throw StepBudgetExceeded(options.max_steps);
      const double r = rng.uniform() * total[u];
      auto nb = g.neighbors(u);
      auto ie = g.incident_edges(u);
      double acc = 0.0;
      Index pick = kTerminal;
      Index pick_edge = -1;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        acc += dist.weights[ie[k]];
        if (r < acc) {
          pick = nb[k];
          pick_edge = ie[k];
          break;
        }
      }
      if (pick == kTerminal && rho == 0.0) {  // rounding at the top of the CDF
        pick = nb.back();
        pick_edge = ie.back();
      }
      next[u] = pick;
      next_edge[u] = pick_edge;
      u = pick;
    }
    for (u = start; u != kTerminal && !in_tree[u]; u = next[u]) in_tree[u] = 1;
  }

  SpanningForest f;
  f.parent.assign(static_cast<std::size_t>(n), kNoParent);
  f.parent_edge.assign(static_cast<std::size_t>(n), -1);
  f.included_edges.reserve(static_cast<std::size_t>(n - 1));
  for (Index v = 0; v < n; ++v) {
    if ((!use_terminal && v == root) || next[v] == kTerminal) {
      ++f.component_count;
      continue;
    }
    f.parent[v] = next[v];
    f.parent_edge[v] = next_edge[v];
    f.included_edges.push_back(next_edge[v]);
  }
  if (stats) {
    stats->steps = steps;
    stats->terminal_hits_kept =
        use_terminal ? static_cast<std::uint64_t>(f.component_count) : 0;
  }
  return f;
}

}  // namespace

SpanningForest wilson_sample(const TreeDistribution& dist, Index root, RngStream& rng,
                             const WilsonOptions& options, WilsonStats* stats) {
  if (dist.terminal_weight != 0.0)
    throw std::invalid_argument("wilson_sample: use wilson_sample_terminal when rho > 0");
  if (root < 0 || root >= dist.graph->vertex_count())
    throw std::invalid_argument("wilson_sample: root out of range");
  return run_wilson(dist, root, false, rng, options, stats);
}

SpanningForest wilson_sample_terminal(const TreeDistribution& dist, RngStream& rng,
                                      const WilsonOptions& options, WilsonStats* stats) {
  if (!(dist.terminal_weight > 0.0))
    throw std::invalid_argument("wilson_sample_terminal: terminal weight must be positive");
  return run_wilson(dist, kNoParent, true, rng, options, stats);
}

Vector conjugate_weights(const GridGraph& graph, const Vector& base_weights, const Vector& image,
                         const DifferencePrior& prior, double weight_floor) {
  if (image.size() != graph.vertex_count() || base_weights.size() != graph.edge_count())
    throw std::invalid_argument("conjugate_weights: size mismatch");
  Vector w(graph.edge_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto& ed = graph.edge(e);
    w[e] = std::max(base_weights[e] * prior.density(prior.edge_scale(e) * (image[ed.u] - image[ed.v])),
                    weight_floor);
  }
  return w;
}

namespace {

struct UnionFind {
  std::vector<Index> p;
  explicit UnionFind(Index n) : p(static_cast<std::size_t>(n)) { std::iota(p.begin(), p.end(), 0); }
  Index find(Index a) {
    while (p[a] != a) a = p[a] = p[p[a]];
    return a;
  }
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[a] = b;
    return true;
  }
};

}  // namespace

std::vector<WeightedTree> enumerate_trees(const GridGraph& graph, const Vector& weights) {
  const Index m = graph.edge_count();
  const Index n = graph.vertex_count();
  if (m > kMaxEnumerationEdges)
    throw std::invalid_argument("enumerate_trees: graph too large to enumerate");
  std::vector<WeightedTree> out;
  const Index k = n - 1;
  if (k > m) return out;
  if (k == 0) {
    out.push_back({forest_from_edges(graph, {}), 1.0});
    return out;
  }

  std::vector<Index> edges;
  double total = 0.0;
  // Gosper's hack over all m-bit masks with k set bits
  const std::uint64_t limit = std::uint64_t{1} << m;
  for (std::uint64_t mask = (std::uint64_t{1} << k) - 1; mask < limit;) {
    UnionFind uf(n);
    bool acyclic = true;
    edges.clear();
    for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
      const Index e = std::countr_zero(bits);
      if (!uf.unite(graph.edge(e).u, graph.edge(e).v)) {
        acyclic = false;
        break;
      }
      edges.push_back(e);
    }
    if (acyclic) {
      double p = 1.0;
      for (Index e : edges) p *= weights[e];
      total += p;
      out.push_back({forest_from_edges(graph, edges), p});
    }
    const std::uint64_t c = mask & (~mask + 1);
    const std::uint64_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  for (auto& t : out) t.probability /= total;
  return out;
}

// Gaussian elimination on the graph itself (Kron reduction). The deleted
// vertex acts as ground; eliminating v has pivot = total weight at v, and
// every neighbour pair gains w_av w_bv / pivot. All terms stay positive, so
// the determinant keeps full relative accuracy even with tiny weights, where
// a factorization of the assembled matrix would cancel.
double log_matrix_tree_count(const GridGraph& graph, bool squared, Index deleted) {
  const Index n = graph.vertex_count();
  if (deleted < 0 || deleted >= n) throw std::invalid_argument("matrix_tree_count: bad vertex");
  if (n == 1) return 0.0;

  std::vector<std::unordered_map<Index, double>> adj(static_cast<std::size_t>(n));
  std::vector<double> ground(static_cast<std::size_t>(n), 0.0);
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto& ed = graph.edge(e);
    const double w = squared ? graph.weights()[e] * graph.weights()[e] : graph.weights()[e];
    if (ed.u == deleted || ed.v == deleted) {
      ground[ed.u == deleted ? ed.v : ed.u] += w;
    } else {
      adj[ed.u][ed.v] += w;
      adj[ed.v][ed.u] += w;
    }
  }

  // greedy minimum degree with a lazy heap
  using Entry = std::pair<std::size_t, Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  done[deleted] = 1;
  for (Index v = 0; v < n; ++v)
    if (v != deleted) heap.push({adj[v].size(), v});

  double logdet = 0.0;
  while (!heap.empty()) {
    const auto [deg, v] = heap.top();
    heap.pop();
    if (done[v] || deg != adj[v].size()) continue;
    done[v] = 1;
    double pivot = ground[v];
    for (const auto& [u, w] : adj[v]) pivot += w;
    if (!(pivot > 0.0))
      throw std::invalid_argument("matrix_tree_count: reduced Laplacian is singular (disconnected?)");
    logdet += std::log(pivot);
    std::vector<std::pair<Index, double>> nb(adj[v].begin(), adj[v].end());
    for (const auto& [a, wa] : nb) {
      adj[a].erase(v);
      ground[a] += wa * ground[v] / pivot;
    }
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        const double w = nb[i].second * nb[j].second / pivot;
        adj[nb[i].first][nb[j].first] += w;
        adj[nb[j].first][nb[i].first] += w;
      }
    for (const auto& [a, wa] : nb) heap.push({adj[a].size(), a});
    adj[v].clear();
  }
  return logdet;
}

double matrix_tree_count(const GridGraph& graph, bool squared, Index deleted) {
  return std::exp(log_matrix_tree_count(graph, squared, deleted));
}

}  // namespace rstmrf
