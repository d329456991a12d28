#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rstmrf/types.hpp"

namespace rstmrf {

struct Edge {
  Index u;  // lower linear index (the +1 end of a difference row)
  Index v;  // higher linear index
};

/// Weighted simple graph on the pixels of a height x width image, with an
/// optional terminal vertex attached to every pixel with weight rho.
///
/// Vertices are linearized row-major. Every edge is stored oriented from the
/// lower to the higher vertex index. Weights are strictly positive; an edge of
/// weight zero is expressed by leaving it out.
class GridGraph {
 public:
  /// General constructor; edges must lie inside the grid and be pairwise distinct.
  GridGraph(Index height, Index width, std::vector<Edge> edges, Vector weights,
            double terminal_weight = 0.0);

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index vertex_count() const { return height_ * width_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  double terminal_weight() const { return terminal_weight_; }
  bool has_terminal() const { return terminal_weight_ > 0.0; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }
  const Vector& weights() const { return weights_; }

  /// Neighbors of v and the index of the connecting edge, in CSR order.
  std::span<const Index> neighbors(Index v) const {
    return {adj_vertex_.data() + adj_offset_[v], adj_vertex_.data() + adj_offset_[v + 1]};
  }
  std::span<const Index> incident_edges(Index v) const {
    return {adj_edge_.data() + adj_offset_[v], adj_edge_.data() + adj_offset_[v + 1]};
  }
  Index degree(Index v) const { return adj_offset_[v + 1] - adj_offset_[v]; }
  Index max_degree() const;

  /// Index of the edge {a, b}, or -1.
  Index find_edge(Index a, Index b) const;

  /// Connected through grid edges alone (the terminal vertex is ignored).
  bool is_connected() const;

  GridGraph with_weights(Vector weights) const;
  GridGraph with_terminal_weight(double rho) const;
  /// Subgraph keeping edges whose mask entry is true.
  GridGraph masked(const std::vector<bool>& keep) const;

 private:
  Index height_;
  Index width_;
  std::vector<Edge> edges_;
  Vector weights_;
  double terminal_weight_;
  std::vector<Index> adj_offset_;
  std::vector<Index> adj_vertex_;
  std::vector<Index> adj_edge_;
};

/// 4-connected lattice with a uniform edge weight.
GridGraph build_grid(Index height, Index width, double uniform_weight = 1.0,
                     double terminal_weight = 0.0);

/// Lattice whose horizontal edges carry kappa and vertical edges carry 1.
GridGraph build_anisotropic_grid(Index height, Index width, double kappa,
                                 double terminal_weight = 0.0);

inline constexpr Index kNoParent = -1;

/// Acyclic edge subset of a GridGraph. Each component has exactly one root,
/// the vertex whose parent is kNoParent. For forests drawn with a terminal
/// vertex the roots are the vertices that stepped into the terminal.
struct SpanningForest {
  std::vector<Index> parent;       // per vertex, kNoParent for roots
  std::vector<Index> parent_edge;  // per vertex, edge to parent or -1
  std::vector<Index> included_edges;
  Index component_count = 0;

  Index vertex_count() const { return static_cast<Index>(parent.size()); }
  std::vector<Index> roots() const;
  /// Sorted copy of included_edges, a canonical key for the forest.
  std::vector<Index> edge_key() const;
};

/// Builds a forest from an acyclic edge list. Components are rooted at the
/// entries of preferred_roots that they contain, otherwise at their lowest vertex.
/// Throws std::invalid_argument if the edges contain a cycle.
SpanningForest forest_from_edges(const GridGraph& graph, std::span<const Index> edges,
                                 std::span<const Index> preferred_roots = {});

struct DifferenceOperator {
  SparseMatrix matrix;           // rows: one per edge, then root rows
  Index edge_rows = 0;
  std::vector<Index> root_vertices;
};

/// Finite-difference operator of a forest: row k is (x_u - x_v) for the k-th
/// included edge. When rooted, appends one row root_weight * x_r per component root.
DifferenceOperator difference_operator(const SpanningForest& forest, const GridGraph& graph,
                                       double root_weight, bool rooted);

/// Same construction for an arbitrary edge subset and explicit roots.
DifferenceOperator difference_operator(const GridGraph& graph, std::span<const Index> edges,
                                       std::span<const Index> roots, double root_weight);

/// sum_e c_e (e_u - e_v)(e_u - e_v)^T over all graph edges.
SparseMatrix weighted_laplacian(const GridGraph& graph, const Vector& edge_coefficients);

/// L = D^T W^2 D over all graph edges.
SparseMatrix graph_laplacian(const GridGraph& graph);

/// "components,<k>" header followed by one included edge index per line.
void write_forest_csv(std::ostream& out, const SpanningForest& forest);
SpanningForest read_forest_csv(std::istream& in, const GridGraph& graph);

}  // namespace rstmrf
