#include "rstmrf/experiment.hpp"

#include <cmath>

namespace rstmrf {

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "denoising") return ExperimentKind::Denoising;
  if (name == "deblurring") return ExperimentKind::Deblurring;
  if (name == "inpainting") return ExperimentKind::Inpainting;
  throw std::invalid_argument("unknown experiment: " + name);
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Denoising: return "denoising";
    case ExperimentKind::Deblurring: return "deblurring";
    case ExperimentKind::Inpainting: return "inpainting";
  }
  return "?";
}

double ExperimentSettings::effective_sigma() const {
  if (sigma > 0.0) return sigma;
  return kind == ExperimentKind::Denoising    ? kDenoisingNoiseSd
         : kind == ExperimentKind::Deblurring ? kDeblurringNoiseSd
                                              : kInpaintingNoiseSd;
}

LinearProblem make_experiment_problem(const ExperimentSettings& s) {
  const Phantom phantom = make_phantom(s.phantom, s.height, s.width);
  ForwardOperator op;
  switch (s.kind) {
    case ExperimentKind::Denoising:
      op = make_identity_operator(s.height, s.width);
      break;
    case ExperimentKind::Deblurring:
      op = make_blur_operator(s.height, s.width, s.blur_sd);
      break;
    case ExperimentKind::Inpainting: {
      const Index side = s.hole >= 0 ? s.hole : std::min(s.height, s.width) / 2;
      op = make_center_hole_operator(s.height, s.width, side, side);
      break;
    }
  }
  RngStream noise(s.data_seed);
  return make_data(phantom, op, s.effective_sigma(), noise);
}

DifferencePrior prior_from_user_strength(Family family, double lambda, double root_lambda) {
  if (!(lambda > 0.0) || !(root_lambda > 0.0))
    throw std::invalid_argument("prior strength must be positive");
  if (family == Family::Cauchy) return DifferencePrior(family, 1.0 / lambda, 1.0 / root_lambda);
  return DifferencePrior(family, lambda, root_lambda);
}

std::vector<double> log_spaced(double lo, double hi, Index n) {
  if (n < 1 || !(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("log_spaced: bad range");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return v;
}

}  // namespace rstmrf
