#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rstmrf/graph.hpp"
#include "rstmrf/priors.hpp"
#include "rstmrf/rng.hpp"

namespace rstmrf {

/// P(T) proportional to the product of `weights` over the edges of T. With a
/// positive terminal weight the terminal vertex is joined to every pixel.
/// Holds a non-owning pointer to the graph.
struct TreeDistribution {
  const GridGraph* graph;
  Vector weights;
  double terminal_weight;

  explicit TreeDistribution(const GridGraph& g)
      : graph(&g), weights(g.weights()), terminal_weight(g.terminal_weight()) {}
  TreeDistribution(const GridGraph& g, Vector w, double rho)
      : graph(&g), weights(std::move(w)), terminal_weight(rho) {}
};

struct WilsonOptions {
  std::uint64_t max_steps = 1'000'000'000;
};

struct WilsonStats {
  std::uint64_t steps = 0;              // random-walk steps over all walks
  std::uint64_t terminal_hits_kept = 0;  // terminal steps that survived loop erasure
};

class StepBudgetExceeded : public std::runtime_error {
 public:
  explicit StepBudgetExceeded(std::uint64_t budget)
      : std::runtime_error("Wilson walk exceeded step budget of " + std::to_string(budget) +
                           " (disconnected graph or extreme weight ratio?)") {}
};

/// Weighted spanning tree rooted at `root` by loop-erased random walks.
/// Requires terminal_weight == 0.
SpanningForest wilson_sample(const TreeDistribution& dist, Index root, RngStream& rng,
                             const WilsonOptions& options = {}, WilsonStats* stats = nullptr);

/// Wilson's algorithm rooted at the terminal vertex. The returned forest drops
/// the terminal and its edges; each component is rooted at the vertex that
/// stepped into the terminal. Requires terminal_weight > 0.
SpanningForest wilson_sample_terminal(const TreeDistribution& dist, RngStream& rng,
                                      const WilsonOptions& options = {},
                                      WilsonStats* stats = nullptr);

/// w(e) * phi(s_e * (x_u - x_v)), raised to `weight_floor` if given.
Vector conjugate_weights(const GridGraph& graph, const Vector& base_weights, const Vector& image,
                         const DifferencePrior& prior, double weight_floor = 0.0);

struct WeightedTree {
  SpanningForest tree;
  double probability;
};

inline constexpr Index kMaxEnumerationEdges = 25;

/// Every spanning tree of a small graph with its exact probability under
/// `weights`. Refuses graphs with more than kMaxEnumerationEdges edges.
std::vector<WeightedTree> enumerate_trees(const GridGraph& graph, const Vector& weights);
inline std::vector<WeightedTree> enumerate_trees(const GridGraph& graph) {
  return enumerate_trees(graph, graph.weights());
}

/// Reduced-Laplacian determinant (vertex `deleted` removed). squared = true
/// uses D^T W^2 D, otherwise D^T W D.
double log_matrix_tree_count(const GridGraph& graph, bool squared, Index deleted = 0);
double matrix_tree_count(const GridGraph& graph, bool squared, Index deleted = 0);

}  // namespace rstmrf
