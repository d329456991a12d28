#include "rstmrf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

namespace rstmrf {

GridGraph::GridGraph(Index height, Index width, std::vector<Edge> edges, Vector weights,
                     double terminal_weight)
    : height_(height),
      width_(width),
      edges_(std::move(edges)),
      weights_(std::move(weights)),
      terminal_weight_(terminal_weight) {
  if (height < 1 || width < 1) throw std::invalid_argument("GridGraph: dimensions must be positive");
  if (!(terminal_weight >= 0.0) || !std::isfinite(terminal_weight))
    throw std::invalid_argument("GridGraph: terminal weight must be finite and nonnegative");
  if (weights_.size() != edge_count())
    throw std::invalid_argument("GridGraph: one weight per edge required");
  const Index n = vertex_count();
  for (Index e = 0; e < edge_count(); ++e) {
    auto& ed = edges_[static_cast<std::size_t>(e)];
    if (ed.u > ed.v) std::swap(ed.u, ed.v);
    if (ed.u < 0 || ed.v >= n || ed.u == ed.v)
      throw std::invalid_argument("GridGraph: edge endpoints out of range or self-loop");
    if (!(weights_[e] > 0.0) || !std::isfinite(weights_[e]))
      throw std::invalid_argument("GridGraph: edge weights must be positive and finite");
  }

  std::vector<Index> deg(static_cast<std::size_t>(n), 0);
  for (const auto& ed : edges_) {
    ++deg[ed.u];
    ++deg[ed.v];
  }
  adj_offset_.assign(static_cast<std::size_t>(n + 1), 0);
  for (Index v = 0; v < n; ++v) adj_offset_[v + 1] = adj_offset_[v] + deg[v];
  adj_vertex_.resize(static_cast<std::size_t>(adj_offset_[n]));
  adj_edge_.resize(adj_vertex_.size());
  std::vector<Index> fill(adj_offset_.begin(), adj_offset_.end() - 1);
  for (Index e = 0; e < edge_count(); ++e) {
    const auto& ed = edges_[e];
    adj_vertex_[fill[ed.u]] = ed.v;
    adj_edge_[fill[ed.u]++] = e;
    adj_vertex_[fill[ed.v]] = ed.u;
    adj_edge_[fill[ed.v]++] = e;
  }
  for (Index v = 0; v < n; ++v) {
    auto nb = neighbors(v);
    for (std::size_t i = 1; i < nb.size(); ++i)
      if (std::find(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(i), nb[i]) !=
          nb.begin() + static_cast<std::ptrdiff_t>(i))
        throw std::invalid_argument("GridGraph: duplicate edge");
  }
}

Index GridGraph::max_degree() const {
  Index d = 0;
  for (Index v = 0; v < vertex_count(); ++v) d = std::max(d, degree(v));
  return d;
}

Index GridGraph::find_edge(Index a, Index b) const {
  auto nb = neighbors(a);
  auto ie = incident_edges(a);
  for (std::size_t i = 0; i < nb.size(); ++i)
    if (nb[i] == b) return ie[i];
  return -1;
}

bool GridGraph::is_connected() const {
  const Index n = vertex_count();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index count = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (Index u : neighbors(v))
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  return count == n;
}

GridGraph GridGraph::with_weights(Vector weights) const {
  return GridGraph(height_, width_, edges_, std::move(weights), terminal_weight_);
}

GridGraph GridGraph::with_terminal_weight(double rho) const {
  return GridGraph(height_, width_, edges_, weights_, rho);
}

GridGraph GridGraph::masked(const std::vector<bool>& keep) const {
  if (static_cast<Index>(keep.size()) != edge_count())
    throw std::invalid_argument("GridGraph::masked: mask size mismatch");
  std::vector<Edge> kept;
  std::vector<double> w;
  for (Index e = 0; e < edge_count(); ++e)
    if (keep[e]) {
      kept.push_back(edges_[e]);
      w.push_back(weights_[e]);
    }
  return GridGraph(height_, width_, std::move(kept),
                   Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())),
                   terminal_weight_);
}

namespace {

std::vector<Edge> lattice_edges(Index height, Index width) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(height * (width - 1) + width * (height - 1)));
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c) {
      const Index v = r * width + c;
      if (c + 1 < width) edges.push_back({v, v + 1});
      if (r + 1 < height) edges.push_back({v, v + width});
    }
  return edges;
}

}  // namespace

GridGraph build_grid(Index height, Index width, double uniform_weight, double terminal_weight) {
  if (height < 1 || width < 1) throw std::invalid_argument("build_grid: zero dimension");
  if (!(uniform_weight > 0.0)) throw std::invalid_argument("build_grid: weight must be positive");
  auto edges = lattice_edges(height, width);
  Vector w = Vector::Constant(static_cast<Index>(edges.size()), uniform_weight);
  return GridGraph(height, width, std::move(edges), std::move(w), terminal_weight);
}

GridGraph build_anisotropic_grid(Index height, Index width, double kappa, double terminal_weight) {
  if (height < 1 || width < 1) throw std::invalid_argument("build_anisotropic_grid: zero dimension");
  if (!(kappa > 0.0)) throw std::invalid_argument("build_anisotropic_grid: kappa must be positive");
  auto edges = lattice_edges(height, width);
  Vector w(static_cast<Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e)
    w[static_cast<Index>(e)] = (edges[e].v == edges[e].u + 1) ? kappa : 1.0;
  return GridGraph(height, width, std::move(edges), std::move(w), terminal_weight);
}

std::vector<Index> SpanningForest::roots() const {
  std::vector<Index> r;
  for (Index v = 0; v < vertex_count(); ++v)
    if (parent[v] == kNoParent) r.push_back(v);
  return r;
}

std::vector<Index> SpanningForest::edge_key() const {
  std::vector<Index> key = included_edges;
  std::sort(key.begin(), key.end());
  return key;
}

SpanningForest forest_from_edges(const GridGraph& graph, std::span<const Index> edges,
                                 std::span<const Index> preferred_roots) {
  const Index n = graph.vertex_count();
  std::vector<std::vector<std::pair<Index, Index>>> adj(static_cast<std::size_t>(n));
  for (Index e : edges) {
    if (e < 0 || e >= graph.edge_count())
      throw std::invalid_argument("forest_from_edges: edge index out of range");
    const auto& ed = graph.edge(e);
    adj[ed.u].push_back({ed.v, e});
    adj[ed.v].push_back({ed.u, e});
  }

  SpanningForest f;
  f.parent.assign(static_cast<std::size_t>(n), kNoParent);
  f.parent_edge.assign(static_cast<std::size_t>(n), -1);
  f.included_edges.assign(edges.begin(), edges.end());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);

  auto grow = [&](Index root) {
    std::queue<Index> q;
    q.push(root);
    seen[root] = 1;
    ++f.component_count;
    while (!q.empty()) {
      const Index v = q.front();
      q.pop();
      for (auto [u, e] : adj[v]) {
        if (e == f.parent_edge[v]) continue;
        if (seen[u]) throw std::invalid_argument("forest_from_edges: edges contain a cycle");
        seen[u] = 1;
        f.parent[u] = v;
        f.parent_edge[u] = e;
        q.push(u);
      }
    }
  };
  for (Index r : preferred_roots)
    if (r >= 0 && r < n && !seen[r]) grow(r);
  for (Index v = 0; v < n; ++v)
    if (!seen[v]) grow(v);
  if (static_cast<Index>(edges.size()) != n - f.component_count)
    throw std::invalid_argument("forest_from_edges: duplicate edges");
  return f;
}

DifferenceOperator difference_operator(const GridGraph& graph, std::span<const Index> edges,
                                       std::span<const Index> roots, double root_weight) {
  const Index rows = static_cast<Index>(edges.size() + roots.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * edges.size() + roots.size());
  Index row = 0;
  for (Index e : edges) {
    const auto& ed = graph.edge(e);
    trips.emplace_back(row, ed.u, 1.0);
    trips.emplace_back(row, ed.v, -1.0);
    ++row;
  }
  for (Index r : roots) trips.emplace_back(row++, r, root_weight);

  DifferenceOperator op;
  op.matrix.resize(rows, graph.vertex_count());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.edge_rows = static_cast<Index>(edges.size());
  op.root_vertices.assign(roots.begin(), roots.end());
  return op;
}

DifferenceOperator difference_operator(const SpanningForest& forest, const GridGraph& graph,
                                       double root_weight, bool rooted) {
  const std::vector<Index> roots = rooted ? forest.roots() : std::vector<Index>{};
  return difference_operator(graph, forest.included_edges, roots, root_weight);
}

SparseMatrix weighted_laplacian(const GridGraph& graph, const Vector& edge_coefficients) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(4 * graph.edge_count()));
  for (Index e = 0; e < graph.edge_count(); ++e) {
    const auto& ed = graph.edge(e);
    const double c = edge_coefficients[e];
    trips.emplace_back(ed.u, ed.u, c);
    trips.emplace_back(ed.v, ed.v, c);
    trips.emplace_back(ed.u, ed.v, -c);
    trips.emplace_back(ed.v, ed.u, -c);
  }
  SparseMatrix L(graph.vertex_count(), graph.vertex_count());
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

SparseMatrix graph_laplacian(const GridGraph& graph) {
  return weighted_laplacian(graph, graph.weights().array().square().matrix());
}

void write_forest_csv(std::ostream& out, const SpanningForest& forest) {
  out << "components," << forest.component_count << '\n';
  for (Index e : forest.included_edges) out << e << '\n';
}

SpanningForest read_forest_csv(std::istream& in, const GridGraph& graph) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("components,", 0) != 0)
    throw std::invalid_argument("read_forest_csv: missing components header");
  const Index declared = std::stoll(line.substr(11));
  std::vector<Index> edges;
  while (std::getline(in, line))
    if (!line.empty()) edges.push_back(std::stoll(line));
  SpanningForest f = forest_from_edges(graph, edges);
  if (f.component_count != declared)
    throw std::invalid_argument("read_forest_csv: component count does not match edges");
  return f;
}

}  // namespace rstmrf
