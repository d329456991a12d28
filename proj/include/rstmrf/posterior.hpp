#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rstmrf/forward.hpp"
#include "rstmrf/graph.hpp"
#include "rstmrf/linalg.hpp"
#include "rstmrf/priors.hpp"
#include "rstmrf/tree_sampler.hpp"

namespace rstmrf {

/// Edges carrying a difference prior plus the vertices carrying a root term.
struct PriorStructure {
  std::vector<Index> edges;
  std::vector<Index> roots;

  Index rows() const { return static_cast<Index>(edges.size() + roots.size()); }
};

/// Forest edges; component roots when `rooted`.
PriorStructure structure_of(const SpanningForest& forest, bool rooted);
/// Every graph edge with an optional single root (the classical MRF).
PriorStructure full_graph_structure(const GridGraph& graph, Index root, bool rooted);

/// Per-row precision square roots Lambda for D built with unit root entries:
/// edge scales and root weights for the Gaussian family, tau^{-1/2} otherwise.
Vector prior_row_scales(const DifferencePrior& prior, const PriorStructure& structure,
                        const AuxiliaryScales* aux);

/// Resamples tau for every row of the structure given the image.
AuxiliaryScales sample_aux(const DifferencePrior& prior, const GridGraph& graph,
                           const PriorStructure& structure, const Vector& image, RngStream& rng);

struct ImageSamplerSettings {
  CgSettings cg;
  bool precondition = false;
  Index hutchinson_probes = 64;
};

struct ConditionalSample {
  Vector x;
  Index cg_iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Randomize-then-optimize draw from the Gaussian with precision
/// A^T A / sigma^2 + P^T P and mean solving (A^T A / sigma^2 + P^T P) m = A^T y / sigma^2:
/// solves for argmin ||(A x - y - sigma xi1) / sigma||^2 + ||P x - xi2||^2.
ConditionalSample sample_gaussian_conditional(const LinearProblem& problem,
                                              const SparseMatrix& scaled_prior_rows,
                                              RngStream& rng, const ImageSamplerSettings& settings,
                                              const Vector* warm_start = nullptr);

/// x | structure, tau, y. For the Gaussian family `aux` is ignored.
ConditionalSample sample_conditional_image(const LinearProblem& problem,
                                           const DifferencePrior& prior, const GridGraph& graph,
                                           const PriorStructure& structure,
                                           const AuxiliaryScales* aux, RngStream& rng,
                                           const ImageSamplerSettings& settings,
                                           const Vector* warm_start = nullptr);

struct ChainConfig {
  LinearProblem problem;
  DifferencePrior prior;
  bool rst = true;       // random spanning tree hyperprior; false gives the classical MRF
  bool rooted = true;
  double rho_rel = 0.0;  // terminal weight = rho_rel * phi(0) * max base weight; 0 disables
  Index root_vertex = 0;
  Index iterations = 1000;
  Index burn_in = -1;  // negative means 20% of iterations
  Index thinning = 1;
  Index n_chains = 1;
  std::uint64_t seed = 0;  // chain k uses seed + k
  Index threads = 0;       // 0 means hardware concurrency
  ImageSamplerSettings sampler;
  double weight_floor = 0.0;
  WilsonOptions wilson;
  Vector base_weights;  // tree hyperprior weights; empty means all ones
  bool keep_samples = false;

  Index effective_burn_in() const { return burn_in >= 0 ? burn_in : iterations / 5; }
};

struct ChainState {
  Vector x;
  SpanningForest forest;  // empty for the classical MRF
  PriorStructure structure;
  AuxiliaryScales aux;
  Index iteration = 0;
};

struct StepDiagnostics {
  Index cg_iterations = 0;
  bool cg_converged = true;
  std::uint64_t walk_steps = 0;
  Index components = 0;
};

/// One chain of the alternating tree / image Gibbs sampler. Owns the grid graph.
class GibbsSampler {
 public:
  /// Validates the configuration; throws std::invalid_argument on refused combinations.
  explicit GibbsSampler(ChainConfig config);

  const ChainConfig& config() const { return config_; }
  const GridGraph& graph() const { return *graph_; }
  double terminal_weight() const { return terminal_weight_; }

  ChainState initial_state() const;
  /// Conjugate weights, new forest, auxiliary scales (mixtures), new image.
  StepDiagnostics step(ChainState& state, RngStream& rng) const;

 private:
  ChainConfig config_;
  std::shared_ptr<const GridGraph> graph_;
  Vector base_weights_;
  double terminal_weight_ = 0.0;
};

inline StepDiagnostics gibbs_step(ChainState& state, const GibbsSampler& sampler, RngStream& rng) {
  return sampler.step(state, rng);
}

struct ChainDiagnostics {
  double mean_cg_iterations = 0.0;
  Index cg_failures = 0;
  double mean_components = 0.0;
  double mean_walk_steps = 0.0;
  double mean_sample_global_contrast = 0.0;
  double mean_sample_local_contrast = 0.0;
  double wall_time_ms = 0.0;
};

struct ChainSummary {
  Image mean;
  Image sd;
  Index retained = 0;
  std::vector<ChainDiagnostics> chains;
  std::vector<std::string> warnings;
  std::vector<Vector> samples;  // retained samples in chain order, when requested
};

/// Runs config.n_chains independent chains and pools their retained samples.
ChainSummary run_chains(const ChainConfig& config);

/// "RSTS" magic, then little-endian uint32 height, width, count, then count
/// row-major float32 images.
void write_sample_dump(std::ostream& out, Index height, Index width,
                       const std::vector<Vector>& samples);
std::vector<Image> read_sample_dump(std::istream& in);

}  // namespace rstmrf
