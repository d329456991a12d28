#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rstmrf/forward.hpp"
#include "rstmrf/posterior.hpp"
#include "rstmrf/priors.hpp"

namespace rstmrf {

enum class ExperimentKind { Denoising, Deblurring, Inpainting };

ExperimentKind parse_experiment(const std::string& name);
std::string experiment_name(ExperimentKind kind);

struct ExperimentSettings {
  ExperimentKind kind = ExperimentKind::Denoising;
  std::string phantom = "shapes";
  Index height = 128;
  Index width = 128;
  double sigma = -1.0;  // negative selects the per-experiment default
  double blur_sd = 2.0;
  Index hole = -1;  // inpainting hole side; negative means half the smaller side
  std::uint64_t data_seed = 1;

  double effective_sigma() const;
};

/// Phantom, forward operator and noisy data for one experiment. The data RNG
/// is seeded by data_seed alone.
LinearProblem make_experiment_problem(const ExperimentSettings& settings);

/// Prior from a user-facing strength. For Gaussian and Laplace the edge
/// density is phi(lambda * d); for Cauchy it is phi(d / lambda), so a larger
/// lambda is more edge-preserving in every family. The same convention
/// applies to the root weight.
DifferencePrior prior_from_user_strength(Family family, double lambda, double root_lambda);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, Index n);

}  // namespace rstmrf
