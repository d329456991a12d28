// rstmrf: prior samples, posterior experiments and tree-sampler benchmarks.
//
// Exit codes: 0 success, 1 I/O or other runtime failure, 2 configuration
// error, 3 numerical breakdown.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rstmrf/rstmrf.hpp"

namespace fs = std::filesystem;
using namespace rstmrf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBreakdown = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

// PGM scaled to the image's own range.
void write_scaled_pgm(const fs::path& p, const Image& img) {
  write_pgm(p.string(), img, img.minCoeff(), img.maxCoeff(), 16);
}

struct Common {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string config;
};

struct PriorCmd {
  std::string family = "gaussian";
  bool rst = true;
  Index height = 128, width = 128;
  double lambda = 1.0;
  double root_lambda = -1.0;
  double rho_rel = 0.0;
  Index root = 0;
  Index samples = 1;
  Index iters = 100;  // Gibbs sweeps for the classical Laplace/Cauchy fields
  double cg_tol = 1e-6;
};

struct ExperimentCmd {
  std::string experiment = "denoising";
  std::string family = "gaussian";
  bool rst = true;
  bool unrooted = false;
  std::vector<double> lambdas;
  std::vector<double> sweep{1.0, 100.0, 5.0};
  double root_lambda = -1.0;
  double rho_rel = 1e-3;  // keeps Wilson's walks bounded at large lambda
  double sigma = -1.0;
  Index iters = 1000;
  Index chains = 1;
  Index burnin = -1;
  Index thinning = 1;
  Index threads = 0;
  double cg_tol = 1e-6;
  bool precondition = false;
  Index probes = 64;
  double weight_floor = 0.0;
  std::string phantom = "shapes";
  Index height = 128, width = 128;
  double blur_sd = 2.0;
  Index hole = -1;
  std::uint64_t data_seed = 1;
  bool dump_samples = false;
};

struct BenchCmd {
  std::vector<Index> sizes{32, 64, 128, 256};
  std::vector<double> kappas{1.0, 1e2, 1e4};
  std::vector<double> rhos{0.0, 0.1};
  Index repeats = 100;
};

// Flat key=value file; '#' starts a comment. Keys are long option names.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

// Merges config entries into the argument list of `sub`. Options given on
// the command line win; unknown keys are errors.
std::vector<std::string> merge_config(CLI::App* sub, const std::string& path,
                                      const std::vector<std::string>& cli_args) {
  std::vector<std::string> merged;
  for (const auto& [key, value] : read_config(path)) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw ConfigError("unknown config key '" + key + "' in " + path);
    if (opt->count() > 0) continue;
    merged.push_back("--" + key + "=" + value);
  }
  merged.insert(merged.end(), cli_args.begin(), cli_args.end());
  return merged;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Sampler seed; chain k uses seed + k")->capture_default_str();
  sub->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--config", c.config, "Flat key=value file of option defaults");
}

int cmd_sample_prior(const PriorCmd& cmd, const Common& common) {
  const Family family = parse_family(cmd.family);
  const double root_lambda = cmd.root_lambda > 0.0 ? cmd.root_lambda : cmd.lambda;
  const DifferencePrior prior = prior_from_user_strength(family, cmd.lambda, root_lambda);
  if (cmd.samples < 1) throw std::invalid_argument("samples must be positive");
  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  const GridGraph g = build_grid(cmd.height, cmd.width, 1.0, cmd.rst ? cmd.rho_rel : 0.0);
  if (cmd.root < 0 || cmd.root >= g.vertex_count()) throw std::invalid_argument("root out of range");
  RngStream rng(common.seed);

  std::optional<GibbsSampler> classical;
  if (!cmd.rst) {
    // No observations: the Gibbs sampler reduces to the prior on the full grid.
    ChainConfig cfg;
    cfg.problem = LinearProblem(
        make_mask_operator(cmd.height, cmd.width, std::vector<bool>(g.vertex_count(), false)), Vector(), 1.0);
    cfg.prior = prior;
    cfg.rst = false;
    cfg.root_vertex = cmd.root;
    cfg.sampler.cg.rel_tol = cmd.cg_tol;
    classical.emplace(cfg);
  }

  for (Index k = 0; k < cmd.samples; ++k) {
    const std::string tag = "sample_" + std::to_string(k);
    Vector x;
    if (cmd.rst) {
      const TreeDistribution dist(g);
      const SpanningForest f = dist.terminal_weight > 0.0 ? wilson_sample_terminal(dist, rng)
                                                          : wilson_sample(dist, cmd.root, rng);
      x = sample_prior(prior, f, g, rng);
      auto fo = open_out(dir / (tag + "_forest.csv"));
      write_forest_csv(fo, f);
      const Index depth_root = f.parent[cmd.root] == kNoParent || dist.terminal_weight == 0.0
                                   ? cmd.root
                                   : f.roots().front();
      write_scaled_pgm(dir / (tag + "_depth.pgm"),
                       depth_image(tree_depth_field(f, g, depth_root), cmd.height, cmd.width));
    } else {
      ChainState st = classical->initial_state();
      const Index sweeps = prior.is_scale_mixture() ? cmd.iters : 1;
      for (Index t = 0; t < sweeps; ++t) classical->step(st, rng);
      x = st.x;
    }
    const Image img = unflatten(x, cmd.height, cmd.width);
    write_scaled_pgm(dir / (tag + ".pgm"), img);
  }
  return 0;
}

int cmd_run_experiment(const ExperimentCmd& cmd, const Common& common) {
  ExperimentSettings es;
  es.kind = parse_experiment(cmd.experiment);
  es.phantom = cmd.phantom;
  es.height = cmd.height;
  es.width = cmd.width;
  es.sigma = cmd.sigma;
  es.blur_sd = cmd.blur_sd;
  es.hole = cmd.hole;
  es.data_seed = cmd.data_seed;
  const Family family = parse_family(cmd.family);
  const LinearProblem problem = make_experiment_problem(es);

  std::vector<double> lambdas = cmd.lambdas;
  if (lambdas.empty()) {
    if (cmd.sweep.size() != 3) throw std::invalid_argument("sweep takes lo,hi,count");
    lambdas = log_spaced(cmd.sweep[0], cmd.sweep[1], static_cast<Index>(cmd.sweep[2]));
  }

  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  const Phantom truth = make_phantom(es.phantom, es.height, es.width);
  write_pgm((dir / "truth.pgm").string(), truth.image, 0.0, 1.0, 16);
  write_pgm((dir / "data.pgm").string(), unflatten(apply_adjoint(problem.op, problem.data), es.height, es.width),
            0.0, 1.0, 16);

  auto contrast = open_out(dir / "contrast.csv");
  contrast << "lambda,mean_global_contrast,mean_local_contrast,sample_global_contrast,"
              "sample_local_contrast\n";
  auto runtime = open_out(dir / "runtime.csv");
  runtime << "lambda,mean_cg_iterations,cg_failures,mean_walk_steps,mean_components\n";
  // wall-clock times live apart so the other outputs stay reproducible
  auto timing = open_out(dir / "timing.csv");
  timing << "lambda,chain,wall_time_ms\n";

  for (double lambda : lambdas) {
    const double root_lambda = cmd.root_lambda > 0.0 ? cmd.root_lambda : lambda;
    ChainConfig cfg;
    cfg.problem = problem;
    cfg.prior = prior_from_user_strength(family, lambda, root_lambda);
    cfg.rst = cmd.rst;
    cfg.rooted = !cmd.unrooted;
    cfg.rho_rel = cmd.rho_rel;
    cfg.iterations = cmd.iters;
    cfg.burn_in = cmd.burnin;
    cfg.thinning = cmd.thinning;
    cfg.n_chains = cmd.chains;
    cfg.seed = common.seed;
    cfg.threads = cmd.threads;
    cfg.sampler.cg.rel_tol = cmd.cg_tol;
    cfg.sampler.precondition = cmd.precondition;
    cfg.sampler.hutchinson_probes = cmd.probes;
    cfg.weight_floor = cmd.weight_floor;
    cfg.keep_samples = cmd.dump_samples;

    const ChainSummary s = run_chains(cfg);
    for (const auto& w : s.warnings) std::cerr << "warning (lambda " << num(lambda) << "): " << w << '\n';

    const std::string tag = "lambda_" + num(lambda);
    write_pgm((dir / ("mean_" + tag + ".pgm")).string(), s.mean, 0.0, 1.0, 16);
    write_scaled_pgm(dir / ("sd_" + tag + ".pgm"), s.sd);
    {
      auto f = open_out(dir / ("mean_" + tag + ".csv"));
      write_image_csv(f, s.mean);
    }
    if (cmd.dump_samples) {
      auto f = open_out(dir / ("samples_" + tag + ".bin"));
      write_sample_dump(f, es.height, es.width, s.samples);
    }

    double sg = 0.0, sl = 0.0, cg = 0.0, steps = 0.0, comps = 0.0;
    Index failures = 0;
    for (std::size_t k = 0; k < s.chains.size(); ++k) {
      const auto& d = s.chains[k];
      sg += d.mean_sample_global_contrast;
      sl += d.mean_sample_local_contrast;
      cg += d.mean_cg_iterations;
      steps += d.mean_walk_steps;
      comps += d.mean_components;
      failures += d.cg_failures;
      timing << num(lambda) << ',' << k << ',' << num(d.wall_time_ms) << '\n';
    }
    const double nc = static_cast<double>(s.chains.size());
    contrast << num(lambda) << ',' << num(global_contrast(s.mean)) << ','
             << num(max_local_contrast(s.mean)) << ',' << num(sg / nc) << ',' << num(sl / nc) << '\n';
    runtime << num(lambda) << ',' << num(cg / nc) << ',' << failures << ',' << num(steps / nc) << ','
            << num(comps / nc) << '\n';
  }
  return 0;
}

int cmd_benchmark(const BenchCmd& cmd, const Common& common) {
  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  const auto rows = benchmark_tree_runtime(cmd.sizes, cmd.kappas, cmd.rhos, cmd.repeats, common.seed);
  // steps are seed-determined; wall times go to their own file
  auto steps = open_out(dir / "benchmark_steps.csv");
  steps << "grid_size,kappa,rho_rel,mean_steps\n";
  for (const auto& r : rows)
    steps << r.grid_size << ',' << num(r.kappa) << ',' << num(r.rho_rel) << ',' << num(r.mean_steps) << '\n';
  auto full = open_out(dir / "benchmark.csv");
  write_benchmark_csv(full, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random spanning tree Markov random field priors for imaging"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  PriorCmd prior;
  ExperimentCmd exp;
  BenchCmd bench;

  auto* sp = app.add_subcommand("sample-prior", "Draw (RST-)MRF prior samples");
  add_common(sp, common);
  sp->add_option("--family", prior.family, "gaussian, laplace or cauchy (gmrf, lmrf, cmrf)");
  sp->add_flag("--rst,!--no-rst", prior.rst, "Random spanning tree hyperprior");
  sp->add_option("--height", prior.height);
  sp->add_option("--width", prior.width);
  sp->add_option_function<Index>("--size", [&](Index n) { prior.height = prior.width = n; }, "Square grid side");
  sp->add_option("--lambda", prior.lambda, "Prior strength");
  sp->add_option("--root-lambda", prior.root_lambda, "Root strength (default: lambda)");
  sp->add_option("--rho-rel", prior.rho_rel, "Terminal weight; 0 gives a spanning tree");
  sp->add_option("--root", prior.root, "Root vertex (row-major index)");
  sp->add_option("--samples", prior.samples);
  sp->add_option("--iters", prior.iters, "Gibbs sweeps for classical Laplace/Cauchy fields");
  sp->add_option("--cg-tol", prior.cg_tol);

  auto* re = app.add_subcommand("run-experiment", "Posterior sampling for one experiment over a lambda sweep");
  add_common(re, common);
  re->add_option("--experiment", exp.experiment, "denoising, deblurring or inpainting");
  re->add_option("--family", exp.family);
  re->add_flag("--rst,!--no-rst", exp.rst);
  re->add_flag("--unrooted", exp.unrooted, "Drop the root term (needs 1 outside Null(A))");
  re->add_option("--lambda", exp.lambdas, "Prior strength(s); overrides --sweep")->delimiter(',');
  re->add_option("--sweep", exp.sweep, "lo,hi,count for a log-spaced lambda sweep")->delimiter(',')->expected(3);
  re->add_option("--root-lambda", exp.root_lambda, "Root strength (default: lambda)");
  re->add_option("--rho-rel", exp.rho_rel, "Terminal weight over phi(0); 0 samples exact spanning trees");
  re->add_option("--sigma", exp.sigma, "Noise standard deviation (default per experiment)");
  re->add_option("--iters", exp.iters);
  re->add_option("--chains", exp.chains);
  re->add_option("--burnin", exp.burnin, "Negative means 20% of iters");
  re->add_option("--thinning", exp.thinning);
  re->add_option("--threads", exp.threads, "0 uses every core");
  re->add_option("--cg-tol", exp.cg_tol);
  re->add_flag("--precondition", exp.precondition, "Jacobi preconditioner from a Hutchinson diagonal");
  re->add_option("--probes", exp.probes, "Hutchinson probes");
  re->add_option("--weight-floor", exp.weight_floor, "Lower bound on conjugated tree weights");
  re->add_option("--phantom", exp.phantom, "disk, rects, step or shapes");
  re->add_option("--height", exp.height);
  re->add_option("--width", exp.width);
  re->add_option_function<Index>("--size", [&](Index n) { exp.height = exp.width = n; });
  re->add_option("--blur-sd", exp.blur_sd);
  re->add_option("--hole", exp.hole, "Inpainting hole side (default: half the image)");
  re->add_option("--data-seed", exp.data_seed);
  re->add_flag("--dump-samples", exp.dump_samples, "Write retained samples as float32 records");

  auto* bt = app.add_subcommand("benchmark-trees", "Wilson walk steps on kappa-anisotropic grids");
  add_common(bt, common);
  bt->add_option("--sizes", bench.sizes)->delimiter(',');
  bt->add_option("--kappas", bench.kappas)->delimiter(',');
  bt->add_option("--rho-rel", bench.rhos, "Relative terminal weights; 0 is the plain sampler")->delimiter(',');
  bt->add_option("--repeats", bench.repeats);

  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    if (!common.config.empty()) {
      std::vector<std::string> rest(argv + 2, argv + argc);
      const std::vector<std::string> merged = merge_config(sub, common.config, rest);
      const std::string name = sub->get_name();
      app.clear();
      common = Common{};
      prior = PriorCmd{};
      exp = ExperimentCmd{};
      bench = BenchCmd{};
      std::vector<std::string> args{name};
      args.insert(args.end(), merged.begin(), merged.end());
      std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
      app.parse(args);
    }
    if (sub == sp) return cmd_sample_prior(prior, common);
    if (sub == re) return cmd_run_experiment(exp, common);
    return cmd_benchmark(bench, common);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalBreakdown& e) {
    std::cerr << "numerical breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  } catch (const StepBudgetExceeded& e) {
    std::cerr << "numerical breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
