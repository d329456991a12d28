#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

#include "rstmrf/graph.hpp"
#include "rstmrf/rng.hpp"

namespace rstmrf {

enum class Family { Gaussian, Laplace, Cauchy };

Family parse_family(std::string_view name);
std::string_view family_name(Family f);

/// Unit-scale, zero-centered difference density phi.
template <typename Scalar>
Scalar unit_density(Family family, Scalar z) {
  using std::abs;
  using std::exp;
  switch (family) {
    case Family::Gaussian:
      return exp(Scalar(-0.5) * z * z) / Scalar(std::sqrt(2.0 * std::numbers::pi));
    case Family::Laplace:
      return Scalar(0.5) * exp(-abs(z));
    case Family::Cauchy:
      return Scalar(1) / (Scalar(std::numbers::pi) * (Scalar(1) + z * z));
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar log_unit_density(Family family, Scalar z) {
  using std::abs;
  using std::log;
  using std::log1p;
  switch (family) {
    case Family::Gaussian:
      return Scalar(-0.5) * z * z - Scalar(0.5 * std::log(2.0 * std::numbers::pi));
    case Family::Laplace:
      return -abs(z) - Scalar(std::numbers::ln2);
    case Family::Cauchy:
      return -log1p(z * z) - Scalar(std::log(std::numbers::pi));
  }
  return Scalar(0);
}

/// Difference prior: the density of an edge difference d is s * phi(s * d)
/// with s the edge scale, and a root value x_r has density
/// root_weight * phi(root_weight * x_r).
struct DifferencePrior {
  Family family = Family::Gaussian;
  double strength = 1.0;
  double root_weight = 1.0;
  /// Optional per-edge scales indexed by graph edge; empty means `strength` everywhere.
  Vector edge_strength;

  DifferencePrior() = default;
  DifferencePrior(Family f, double strength_, double root_weight_);

  double edge_scale(Index e) const { return edge_strength.size() ? edge_strength[e] : strength; }
  double density(double z) const { return unit_density(family, z); }
  double log_density(double z) const { return log_unit_density(family, z); }
  bool is_scale_mixture() const { return family != Family::Gaussian; }
};

/// Normalized log-density of the forest-factorized prior: every component is
/// rooted at its parent-less vertex.
double log_prior_density(const DifferencePrior& prior, const SpanningForest& forest,
                         const GridGraph& graph, const Vector& image);

/// One draw of phi.
double sample_unit(Family family, RngStream& rng);

/// Exact prior draw: roots first, then differences propagated outward along
/// the forest.
Vector sample_prior(const DifferencePrior& prior, const SpanningForest& forest,
                    const GridGraph& graph, RngStream& rng);

// Scale mixtures. With d a difference whose density is s * phi(s * d):
//   Laplace: d ~ Laplace with rate gamma = s, d | tau ~ N(0, tau), tau ~ Exp(rate gamma^2 / 2),
//            1 / tau | d ~ InvGaussian(mean gamma / |d|, shape gamma^2).
//   Cauchy:  d ~ Cauchy with scale gamma = 1 / s, d | tau ~ N(0, tau),
//            tau ~ InvGamma(shape 1/2, scale gamma^2 / 2),
//            1 / tau | d ~ Gamma(shape 1, rate (d^2 + gamma^2) / 2).

/// Mixture parameter gamma for a difference of scale s.
double mixture_gamma(Family family, double scale);

/// Floor applied to |d| in the Laplace conditional, relative to 1 / gamma.
inline constexpr double kLaplaceDifferenceFloor = 1e-8;

/// Draw of the variance tau given the difference d. Throws for Gaussian.
double sample_aux_given_difference(Family family, double difference, double gamma, RngStream& rng);

/// Marginal draw of tau. Throws for Gaussian.
double sample_tau_marginal(Family family, double gamma, RngStream& rng);

inline double sample_aux_given_difference(const DifferencePrior& prior, double difference,
                                         RngStream& rng) {
  return sample_aux_given_difference(prior.family, difference,
                                     mixture_gamma(prior.family, prior.strength), rng);
}

inline double sample_tau_marginal(const DifferencePrior& prior, RngStream& rng) {
  return sample_tau_marginal(prior.family, mixture_gamma(prior.family, prior.strength), rng);
}

/// Per-row variances for the rows of a DifferenceOperator (edges, then roots).
struct AuxiliaryScales {
  Vector tau;
};

}  // namespace rstmrf
