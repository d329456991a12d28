#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rstmrf/priors.hpp"

namespace rstmrf::testing {

// Integrates exp(log_prior_density) over R^n for a forest on at most three
// vertices by nested adaptive quadrature. Each vertex is integrated over its
// offset from the parent (unit Jacobian), split at 0 where the Laplace density
// has its kink. Each half line is mapped by t = tan(theta) / scale, which turns a
// Cauchy tail into a bounded smooth integrand.
inline double integrate_prior_density(const DifferencePrior& prior, const SpanningForest& forest,
                                      const GridGraph& graph) {
  const Index n = graph.vertex_count();
  std::vector<Index> order;
  for (Index v = 0; v < n; ++v)
    if (forest.parent[v] == kNoParent) order.push_back(v);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (Index v = 0; v < n; ++v)
      if (forest.parent[v] == order[i]) order.push_back(v);

  Vector x = Vector::Zero(n);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double half_pi = std::acos(0.0);

  auto level = [&](auto&& self, std::size_t depth) -> double {
    if (depth == order.size()) return std::exp(log_prior_density(prior, forest, graph, x));
    const Index v = order[depth];
    const double base = forest.parent[v] == kNoParent ? 0.0 : x[forest.parent[v]];
    const double tol = depth + 1 == order.size() ? 1e-9 : 1e-8;
    const double scale =
        forest.parent[v] == kNoParent ? prior.root_weight : prior.edge_scale(forest.parent_edge[v]);
    double total = 0.0;
    for (double sign : {1.0, -1.0}) {
      auto f = [&](double theta) {
        const double c = std::cos(theta);
        x[v] = base + sign * std::tan(theta) / scale;
        return self(self, depth + 1) / (c * c * scale);
      };
      total += Rule::integrate(f, 0.0, half_pi, 3, tol);
    }
    return total;
  };
  return level(level, 0);
}

}  // namespace rstmrf::testing
