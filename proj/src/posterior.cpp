#include "rstmrf/posterior.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstring>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "rstmrf/diagnostics.hpp"

namespace rstmrf {

PriorStructure structure_of(const SpanningForest& forest, bool rooted) {
  PriorStructure s;
  s.edges = forest.included_edges;
  if (rooted) s.roots = forest.roots();
  return s;
}

PriorStructure full_graph_structure(const GridGraph& graph, Index root, bool rooted) {
  PriorStructure s;
  s.edges.resize(static_cast<std::size_t>(graph.edge_count()));
  for (Index e = 0; e < graph.edge_count(); ++e) s.edges[e] = e;
  if (rooted) s.roots.push_back(root);
  return s;
}

namespace {

double row_scale(const DifferencePrior& prior, const PriorStructure& s, Index row) {
  const Index ne = static_cast<Index>(s.edges.size());
  return row < ne ? prior.edge_scale(s.edges[row]) : prior.root_weight;
}

}  // namespace

Vector prior_row_scales(const DifferencePrior& prior, const PriorStructure& structure,
                        const AuxiliaryScales* aux) {
  const Index rows = structure.rows();
  Vector lambda(rows);
  if (!prior.is_scale_mixture()) {
    for (Index k = 0; k < rows; ++k) lambda[k] = row_scale(prior, structure, k);
    return lambda;
  }
  if (!aux || aux->tau.size() != rows)
    throw std::invalid_argument("prior_row_scales: auxiliary scales missing or mis-sized");
  return aux->tau.array().rsqrt();
}

AuxiliaryScales sample_aux(const DifferencePrior& prior, const GridGraph& graph,
                           const PriorStructure& structure, const Vector& image, RngStream& rng) {
  const Index ne = static_cast<Index>(structure.edges.size());
  AuxiliaryScales aux;
  aux.tau.resize(structure.rows());
  for (Index k = 0; k < structure.rows(); ++k) {
    double d;
    if (k < ne) {
      const auto& ed = graph.edge(structure.edges[k]);
      d = image[ed.u] - image[ed.v];
    } else {
      d = image[structure.roots[k - ne]];
    }
    const double gamma = mixture_gamma(prior.family, row_scale(prior, structure, k));
    aux.tau[k] = sample_aux_given_difference(prior.family, d, gamma, rng);
  }
  return aux;
}

ConditionalSample sample_gaussian_conditional(const LinearProblem& problem,
                                              const SparseMatrix& scaled_prior_rows,
                                              RngStream& rng, const ImageSamplerSettings& settings,
                                              const Vector* warm_start) {
  const Index n = problem.op.cols();
  const double sigma = problem.noise_sd;
  const double inv_var = 1.0 / (sigma * sigma);

  LinearOperatorStack stack;
  stack.add_term(forward_map(problem.op), inv_var);
  if (scaled_prior_rows.rows() > 0) {
    if (scaled_prior_rows.cols() != n) throw std::invalid_argument("prior rows: column mismatch");
    stack.add_term(LinearMap::from_sparse(scaled_prior_rows), 1.0);
  }

  Vector perturbed = problem.data;
  for (Index i = 0; i < perturbed.size(); ++i) perturbed[i] += sigma * rng.normal();
  Vector rhs = inv_var * apply_adjoint(problem.op, perturbed);
  if (scaled_prior_rows.rows() > 0) {
    Vector xi2(scaled_prior_rows.rows());
    for (Index i = 0; i < xi2.size(); ++i) xi2[i] = rng.normal();
    rhs.noalias() += scaled_prior_rows.transpose() * xi2;
  }

  Vector inv_diag;
  if (settings.precondition) {
    inv_diag = hutchinson_diagonal(stack, settings.hutchinson_probes, rng).cwiseInverse();
  }
  const Vector* start = (warm_start && warm_start->size() == n) ? warm_start : nullptr;
  CgResult res = cg_solve(stack, rhs, settings.cg, settings.precondition ? &inv_diag : nullptr, start);
  return {std::move(res.x), res.iterations, res.relative_residual, res.converged};
}

ConditionalSample sample_conditional_image(const LinearProblem& problem,
                                           const DifferencePrior& prior, const GridGraph& graph,
                                           const PriorStructure& structure,
                                           const AuxiliaryScales* aux, RngStream& rng,
                                           const ImageSamplerSettings& settings,
                                           const Vector* warm_start) {
  if (graph.vertex_count() != problem.op.cols())
    throw std::invalid_argument("sample_conditional_image: graph does not match problem");
  DifferenceOperator d = difference_operator(graph, structure.edges, structure.roots, 1.0);
  const Vector lambda = prior_row_scales(prior, structure, aux);
  const SparseMatrix scaled = lambda.asDiagonal() * d.matrix;
  return sample_gaussian_conditional(problem, scaled, rng, settings, warm_start);
}

GibbsSampler::GibbsSampler(ChainConfig config) : config_(std::move(config)) {
  const auto& op = config_.problem.op;
  if (config_.iterations < 1) throw std::invalid_argument("iterations must be positive");
  const Index burn = config_.effective_burn_in();
  if (burn < 0 || burn >= config_.iterations)
    throw std::invalid_argument("burn-in must satisfy 0 <= burn-in < iterations");
  if (config_.thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (config_.n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
  if (config_.rho_rel < 0.0) throw std::invalid_argument("rho_rel must be nonnegative");
  if (config_.root_vertex < 0 || config_.root_vertex >= op.cols())
    throw std::invalid_argument("root vertex out of range");
  if (!config_.rooted) {
    // the posterior is proper only if the constant image is seen by A
    const Vector a1 = apply_forward(op, Vector::Ones(op.cols()));
    if (a1.norm() == 0.0)
      throw std::invalid_argument("unrooted prior requires 1 not in Null(A)");
  }

  graph_ = std::make_shared<const GridGraph>(build_grid(op.height, op.width, 1.0, 0.0));
  base_weights_ = config_.base_weights.size() ? config_.base_weights
                                              : Vector(Vector::Ones(graph_->edge_count()));
  if (base_weights_.size() != graph_->edge_count() || (base_weights_.array() <= 0.0).any())
    throw std::invalid_argument("base weights must be positive, one per grid edge");
  terminal_weight_ = config_.rho_rel * unit_density(config_.prior.family, 0.0) * base_weights_.maxCoeff();
}

ChainState GibbsSampler::initial_state() const {
  const auto& problem = config_.problem;
  ChainState s;
  if (problem.op.kind == ForwardKind::Blur)
    s.x = Vector::Zero(problem.op.cols());
  else
    s.x = apply_adjoint(problem.op, problem.data);
  if (!config_.rst) s.structure = full_graph_structure(*graph_, config_.root_vertex, config_.rooted);
  return s;
}

StepDiagnostics GibbsSampler::step(ChainState& state, RngStream& rng) const {
  StepDiagnostics diag;
  const auto& prior = config_.prior;
  if (config_.rst) {
    const TreeDistribution dist(
        *graph_, conjugate_weights(*graph_, base_weights_, state.x, prior, config_.weight_floor),
        terminal_weight_);
    WilsonStats stats;
    state.forest = terminal_weight_ > 0.0
                       ? wilson_sample_terminal(dist, rng, config_.wilson, &stats)
                       : wilson_sample(dist, config_.root_vertex, rng, config_.wilson, &stats);
    state.structure = structure_of(state.forest, config_.rooted);
    diag.walk_steps = stats.steps;
    diag.components = state.forest.component_count;
  } else {
    diag.components = 1;
  }

  if (prior.is_scale_mixture()) {
    state.aux = sample_aux(prior, *graph_, state.structure, state.x, rng);
    if (!state.aux.tau.allFinite() || (state.aux.tau.array() <= 0.0).any())
      throw NumericalBreakdown("Gibbs step: non-finite auxiliary scale", state.iteration + 1);
  }

  ConditionalSample cs = sample_conditional_image(config_.problem, prior, *graph_, state.structure,
                                                  &state.aux, rng, config_.sampler, &state.x);
  if (!cs.x.allFinite())
    throw NumericalBreakdown("Gibbs step: non-finite image", state.iteration + 1);
  state.x = std::move(cs.x);
  ++state.iteration;
  diag.cg_iterations = cs.cg_iterations;
  diag.cg_converged = cs.converged;
  return diag;
}

namespace {

struct ChainResult {
  Vector mean;
  Vector m2;
  Index count = 0;
  ChainDiagnostics diag;
  std::vector<Vector> samples;
};

ChainResult run_one_chain(const GibbsSampler& sampler, Index chain) {
  const auto& cfg = sampler.config();
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(cfg.seed + static_cast<std::uint64_t>(chain));
  ChainState state = sampler.initial_state();
  const Index n = state.x.size();
  const Index h = cfg.problem.op.height, w = cfg.problem.op.width;
  const Index burn = cfg.effective_burn_in();

  ChainResult r;
  r.mean = Vector::Zero(n);
  r.m2 = Vector::Zero(n);
  double cg_iters = 0.0, components = 0.0, steps = 0.0, gc = 0.0, lc = 0.0;
  for (Index t = 1; t <= cfg.iterations; ++t) {
    const StepDiagnostics d = sampler.step(state, rng);
    cg_iters += static_cast<double>(d.cg_iterations);
    components += static_cast<double>(d.components);
    steps += static_cast<double>(d.walk_steps);
    if (!d.cg_converged) ++r.diag.cg_failures;
    if (t <= burn || (t - burn) % cfg.thinning != 0) continue;
    ++r.count;
    const Vector delta = state.x - r.mean;
    r.mean += delta / static_cast<double>(r.count);
    r.m2 += delta.cwiseProduct(state.x - r.mean);
    const auto img = Eigen::Map<const Image>(state.x.data(), h, w);
    gc += global_contrast(img);
    lc += max_local_contrast(img);
    if (cfg.keep_samples) r.samples.push_back(state.x);
  }
  const double iters = static_cast<double>(cfg.iterations);
  r.diag.mean_cg_iterations = cg_iters / iters;
  r.diag.mean_components = components / iters;
  r.diag.mean_walk_steps = steps / iters;
  if (r.count > 0) {
    r.diag.mean_sample_global_contrast = gc / static_cast<double>(r.count);
    r.diag.mean_sample_local_contrast = lc / static_cast<double>(r.count);
  }
  r.diag.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

ChainSummary run_chains(const ChainConfig& config) {
  const GibbsSampler sampler(config);
  const Index chains = config.n_chains;
  std::vector<ChainResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));

  Index workers = config.threads > 0 ? config.threads
                                     : static_cast<Index>(std::thread::hardware_concurrency());
  workers = std::clamp<Index>(workers, 1, chains);
  std::atomic<Index> next{0};
  auto work = [&] {
    for (Index k; (k = next.fetch_add(1)) < chains;) {
      try {
        results[k] = run_one_chain(sampler, k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (Index i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Pairwise (Chan et al.) merge in chain order keeps the result independent of scheduling.
  const Index n = config.problem.op.cols();
  Vector mean = Vector::Zero(n), m2 = Vector::Zero(n);
  Index count = 0;
  ChainSummary summary;
  Index failures = 0;
  for (auto& r : results) {
    if (r.count > 0) {
      const double na = static_cast<double>(count), nb = static_cast<double>(r.count);
      const Vector delta = r.mean - mean;
      mean += delta * (nb / (na + nb));
      m2 += r.m2 + delta.cwiseProduct(delta) * (na * nb / (na + nb));
      count += r.count;
    }
    failures += r.diag.cg_failures;
    summary.chains.push_back(r.diag);
    for (auto& s : r.samples) summary.samples.push_back(std::move(s));
  }
  const Index h = config.problem.op.height, w = config.problem.op.width;
  summary.retained = count;
  summary.mean = unflatten(mean, h, w);
  summary.sd = unflatten(count > 1 ? Vector((m2 / static_cast<double>(count - 1)).cwiseSqrt())
                                   : Vector(Vector::Zero(n)),
                         h, w);
  if (failures > 0)
    summary.warnings.push_back("conjugate gradients did not reach tolerance in " +
                               std::to_string(failures) + " image updates");
  if (config.rst && config.prior.family == Family::Cauchy &&
      config.problem.op.kind != ForwardKind::Identity)
    summary.warnings.push_back(
        "RST-CMRF with a blurring or masking operator is numerically unstable and rarely "
        "produces useful reconstructions");
  return summary;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.put(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.get())) << (8 * k);
  return v;
}

}  // namespace

void write_sample_dump(std::ostream& out, Index height, Index width,
                       const std::vector<Vector>& samples) {
  out.write("RSTS", 4);
  put_u32(out, static_cast<std::uint32_t>(height));
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    if (s.size() != height * width) throw std::invalid_argument("write_sample_dump: size mismatch");
    for (Index i = 0; i < s.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s[i])));
  }
}

std::vector<Image> read_sample_dump(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "RSTS", 4) != 0)
    throw std::invalid_argument("read_sample_dump: bad magic");
  const Index h = get_u32(in), w = get_u32(in), count = get_u32(in);
  std::vector<Image> out;
  for (Index k = 0; k < count; ++k) {
    Image img(h, w);
    for (Index i = 0; i < h * w; ++i) img(i / w, i % w) = std::bit_cast<float>(get_u32(in));
    if (!in) throw std::invalid_argument("read_sample_dump: truncated");
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace rstmrf
