#include "rstmrf/priors.hpp"

#include <algorithm>
#include <string>

namespace rstmrf {

Family parse_family(std::string_view name) {
  if (name == "gaussian" || name == "gmrf") return Family::Gaussian;
  if (name == "laplace" || name == "lmrf") return Family::Laplace;
  if (name == "cauchy" || name == "cmrf") return Family::Cauchy;
  throw std::invalid_argument("unknown prior family: " + std::string(name));
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Laplace: return "laplace";
    case Family::Cauchy: return "cauchy";
  }
  return "?";
}

DifferencePrior::DifferencePrior(Family f, double strength_, double root_weight_)
    : family(f), strength(strength_), root_weight(root_weight_) {
  if (!(strength > 0.0) || !std::isfinite(strength))
    throw std::invalid_argument("DifferencePrior: strength must be positive");
  if (!(root_weight > 0.0) || !std::isfinite(root_weight))
    throw std::invalid_argument("DifferencePrior: root weight must be positive");
}

double log_prior_density(const DifferencePrior& prior, const SpanningForest& forest,
                         const GridGraph& graph, const Vector& image) {
  if (image.size() != graph.vertex_count())
    throw std::invalid_argument("log_prior_density: image size mismatch");
  double acc = 0.0;
  for (Index v = 0; v < forest.vertex_count(); ++v)
    if (forest.parent[v] == kNoParent)
      acc += std::log(prior.root_weight) + prior.log_density(prior.root_weight * image[v]);
  for (Index e : forest.included_edges) {
    const auto& ed = graph.edge(e);
    const double s = prior.edge_scale(e);
    acc += std::log(s) + prior.log_density(s * (image[ed.u] - image[ed.v]));
  }
  return acc;
}

double sample_unit(Family family, RngStream& rng) {
  switch (family) {
    case Family::Gaussian:
      return rng.normal();
    case Family::Laplace: {
      const double m = rng.exponential(1.0);
      return rng.rademacher() * m;
    }
    case Family::Cauchy:
      return std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
  }
  return 0.0;
}

Vector sample_prior(const DifferencePrior& prior, const SpanningForest& forest,
                    const GridGraph& graph, RngStream& rng) {
  const Index n = forest.vertex_count();
  if (n != graph.vertex_count()) throw std::invalid_argument("sample_prior: forest/graph mismatch");

  // children in CSR layout, then a breadth-first sweep from every root
  std::vector<Index> offset(static_cast<std::size_t>(n + 1), 0);
  for (Index v = 0; v < n; ++v)
    if (forest.parent[v] != kNoParent) ++offset[forest.parent[v] + 1];
  for (Index v = 0; v < n; ++v) offset[v + 1] += offset[v];
  std::vector<Index> children(static_cast<std::size_t>(offset[n]));
  std::vector<Index> fill(offset.begin(), offset.end() - 1);
  for (Index v = 0; v < n; ++v)
    if (forest.parent[v] != kNoParent) children[fill[forest.parent[v]]++] = v;

  Vector x(n);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v)
    if (forest.parent[v] == kNoParent) {
      x[v] = sample_unit(prior.family, rng) / prior.root_weight;
      order.push_back(v);
    }
  for (std::size_t head = 0; head < order.size(); ++head) {
    const Index p = order[head];
    for (Index k = offset[p]; k < offset[p + 1]; ++k) {
      const Index c = children[k];
      x[c] = x[p] + sample_unit(prior.family, rng) / prior.edge_scale(forest.parent_edge[c]);
      order.push_back(c);
    }
  }
  return x;
}

double mixture_gamma(Family family, double scale) {
  switch (family) {
    case Family::Laplace: return scale;
    case Family::Cauchy: return 1.0 / scale;
    case Family::Gaussian: break;
  }
  throw std::invalid_argument("mixture_gamma: Gaussian family has no scale mixture");
}

double sample_aux_given_difference(Family family, double difference, double gamma,
                                   RngStream& rng) {
  switch (family) {
    case Family::Laplace: {
      const double d = std::max(std::abs(difference), kLaplaceDifferenceFloor / gamma);
      return 1.0 / rng.inverse_gaussian(gamma / d, gamma * gamma);
    }
    case Family::Cauchy:
      return 1.0 / rng.exponential(0.5 * (difference * difference + gamma * gamma));
    case Family::Gaussian: break;
  }
  throw std::invalid_argument("sample_aux_given_difference: not applicable to Gaussian family");
}

double sample_tau_marginal(Family family, double gamma, RngStream& rng) {
  switch (family) {
    case Family::Laplace:
      return rng.exponential(0.5 * gamma * gamma);
    case Family::Cauchy: {
      // InvGamma(1/2, gamma^2/2) = (gamma^2/2) / Gamma(1/2, 1) and Gamma(1/2, 1) = n^2/2
      double n;
      do {
        n = rng.normal();
      } while (n == 0.0);
      return gamma * gamma / (n * n);
    }
    case Family::Gaussian: break;
  }
  throw std::invalid_argument("sample_tau_marginal: not applicable to Gaussian family");
}

}  // namespace rstmrf
