#include "rstmrf/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "rstmrf/tree_sampler.hpp"

namespace rstmrf {

std::vector<Index> tree_depth_field(const SpanningForest& forest, const GridGraph& graph,
                                    Index root) {
  const Index n = graph.vertex_count();
  if (forest.vertex_count() != n) throw std::invalid_argument("tree_depth_field: size mismatch");
  if (root < 0 || root >= n) throw std::invalid_argument("tree_depth_field: root out of range");
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index e : forest.included_edges) {
    adj[graph.edge(e).u].push_back(graph.edge(e).v);
    adj[graph.edge(e).v].push_back(graph.edge(e).u);
  }
  std::vector<Index> depth(static_cast<std::size_t>(n), -1);
  auto bfs = [&](Index s) {
    std::queue<Index> q;
    depth[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const Index v = q.front();
      q.pop();
      for (Index u : adj[v])
        if (depth[u] < 0) {
          depth[u] = depth[v] + 1;
          q.push(u);
        }
    }
  };
  bfs(root);
  for (Index v = 0; v < n; ++v)
    if (depth[v] < 0 && forest.parent[v] == kNoParent) bfs(v);
  for (Index v = 0; v < n; ++v)
    if (depth[v] < 0) bfs(v);
  return depth;
}

std::optional<InterfaceRoughness> interface_roughness(const Image& img, double threshold) {
  const Index h = img.rows(), w = img.cols();
  // Crossing between horizontal neighbours is a vertical dual segment at row r;
  // crossing between vertical neighbours is a horizontal dual segment at column c.
  Index length = 0;
  std::set<Index> rows_covered, cols_covered;
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const bool here = img(r, c) >= threshold;
      if (c + 1 < w && here != (img(r, c + 1) >= threshold)) {
        ++length;
        rows_covered.insert(r);
      }
      if (r + 1 < h && here != (img(r + 1, c) >= threshold)) {
        ++length;
        cols_covered.insert(c);
      }
    }
  if (length == 0) return std::nullopt;
  const double span = static_cast<double>(std::max(rows_covered.size(), cols_covered.size()));
  return InterfaceRoughness{static_cast<double>(length), span};
}

std::vector<BenchmarkRow> benchmark_tree_runtime(const std::vector<Index>& sizes,
                                                 const std::vector<double>& kappas,
                                                 const std::vector<double>& rho_rels,
                                                 Index repeats, std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("benchmark_tree_runtime: repeats must be >= 1");
  std::vector<BenchmarkRow> rows;
  for (Index n : sizes)
    for (double kappa : kappas)
      for (double rho_rel : rho_rels) {
        if (rho_rel < 0.0) throw std::invalid_argument("benchmark_tree_runtime: rho_rel < 0");
        const double rho = rho_rel * std::max(kappa, 1.0);
        const GridGraph g = build_anisotropic_grid(n, n, kappa, rho);
        const TreeDistribution dist(g);
        RngStream rng(seed);
        double steps = 0.0;
        const auto t0 = std::chrono::steady_clock::now();
        for (Index k = 0; k < repeats; ++k) {
          WilsonStats stats;
          if (rho > 0.0)
            wilson_sample_terminal(dist, rng, {}, &stats);
          else
            wilson_sample(dist, 0, rng, {}, &stats);
          steps += static_cast<double>(stats.steps);
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rows.push_back({n, kappa, rho_rel, steps / repeats, ms / repeats});
      }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "grid_size,kappa,rho_rel,mean_steps,wall_time_ms\n";
  std::ostringstream line;
  line.precision(10);
  for (const auto& r : rows) {
    line.str("");
    line << r.grid_size << ',' << r.kappa << ',' << r.rho_rel << ',' << r.mean_steps << ','
         << r.wall_time_ms << '\n';
    out << line.str();
  }
}

Image depth_image(const std::vector<Index>& depth, Index height, Index width) {
  if (static_cast<Index>(depth.size()) != height * width)
    throw std::invalid_argument("depth_image: size mismatch");
  Image img(height, width);
  for (Index i = 0; i < height * width; ++i) img(i / width, i % width) = static_cast<double>(depth[i]);
  return img;
}

}  // namespace rstmrf
