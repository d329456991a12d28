#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "quadrature_oracle.hpp"
#include "rstmrf/priors.hpp"
#include "rstmrf/tree_sampler.hpp"
#include "stat_helpers.hpp"

using namespace rstmrf;
using namespace rstmrf::testing;

TEST_CASE("unit densities") {
  CHECK(unit_density(Family::Gaussian, 0.0) == doctest::Approx(0.3989422804));
  CHECK(unit_density(Family::Laplace, 0.0) == 0.5);
  CHECK(unit_density(Family::Cauchy, 0.0) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(unit_density(Family::Laplace, std::log(2.0)) == doctest::Approx(0.25));
  CHECK(unit_density(Family::Cauchy, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
  for (Family f : {Family::Gaussian, Family::Laplace, Family::Cauchy})
    for (double z : {-3.0, -0.2, 0.0, 1.5, 20.0})
      CHECK(log_unit_density(f, z) == doctest::Approx(std::log(unit_density(f, z))).epsilon(1e-12));
  // templated on scalar
  CHECK(unit_density(Family::Laplace, 0.0f) == 0.5f);
}

TEST_CASE("prior construction validates") {
  CHECK_THROWS_AS(DifferencePrior(Family::Gaussian, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DifferencePrior(Family::Gaussian, 1.0, -1.0), std::invalid_argument);
  CHECK(parse_family("lmrf") == Family::Laplace);
  CHECK_THROWS(parse_family("student"));
}

TEST_CASE("log prior density closed forms") {
  const GridGraph one = build_grid(1, 1);
  const SpanningForest f1 = forest_from_edges(one, {});
  CHECK(log_prior_density(DifferencePrior(Family::Gaussian, 1.0, 1.0), f1, one, Vector::Zero(1)) ==
        doctest::Approx(std::log(1.0 / std::sqrt(2.0 * std::numbers::pi))));

  const GridGraph path = build_grid(1, 2);
  const std::vector<Index> e0{0};
  const SpanningForest f2 = forest_from_edges(path, e0);
  CHECK(log_prior_density(DifferencePrior(Family::Laplace, 1.0, 1.0), f2, path, Vector::Zero(2)) ==
        doctest::Approx(std::log(0.25)));
}

TEST_CASE("rooted prior densities integrate to one") {
  const GridGraph g1 = build_grid(1, 1), g2 = build_grid(1, 2), g3 = build_grid(1, 3);
  const std::vector<Index> e1{0}, e2{0, 1};
  const std::vector<Index> middle{1};
  const SpanningForest f1 = forest_from_edges(g1, {});
  const SpanningForest f2 = forest_from_edges(g2, e1);
  const SpanningForest f3 = forest_from_edges(g3, e2, middle);
  for (Family fam : {Family::Gaussian, Family::Laplace, Family::Cauchy}) {
    DifferencePrior p(fam, 1.7, 0.8);
    CHECK(integrate_prior_density(p, f1, g1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(integrate_prior_density(p, f2, g2) == doctest::Approx(1.0).epsilon(1e-6));
    p.edge_strength = Vector(2);
    p.edge_strength << 0.6, 2.5;
    CHECK(integrate_prior_density(p, f3, g3) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("Gaussian forest density equals the rooted-GMRF formula") {
  RngStream rng(4);
  const GridGraph g = build_grid(3, 3);
  for (int k = 0; k < 5; ++k) {
    const SpanningForest t = wilson_sample(TreeDistribution(g), k, rng);
    DifferencePrior p(Family::Gaussian, 1.0, 0.7);
    p.edge_strength = Vector(g.edge_count());
    for (Index e = 0; e < g.edge_count(); ++e) p.edge_strength[e] = 0.5 + rng.uniform();
    // graph consisting of the tree edges with weights = edge scales
    std::vector<Edge> edges;
    std::vector<double> w;
    for (Index e : t.included_edges) {
      edges.push_back(g.edge(e));
      w.push_back(p.edge_strength[e]);
    }
    const GridGraph tree_graph(3, 3, edges, Eigen::Map<Vector>(w.data(), static_cast<Index>(w.size())));
    Matrix Q(graph_laplacian(tree_graph));
    const Index r = t.roots()[0];
    Q(r, r) += p.root_weight * p.root_weight;
    Vector x(9);
    for (Index i = 0; i < 9; ++i) x[i] = rng.normal();
    const double formula = -0.5 * 9 * std::log(2 * std::numbers::pi) + std::log(p.root_weight) +
                           0.5 * log_matrix_tree_count(tree_graph, true) - 0.5 * x.dot(Q * x);
    CHECK(log_prior_density(p, t, g, x) == doctest::Approx(formula).epsilon(1e-10));
  }
}

TEST_CASE("sample_prior on a path has the propagated covariance") {
  const GridGraph g = build_grid(1, 2);
  const std::vector<Index> e0{0};
  const SpanningForest f = forest_from_edges(g, e0);
  const DifferencePrior p(Family::Gaussian, 1.0, 1.0);
  RngStream rng(17);
  // var(x1^2) = 8, so 4e5 draws put the tolerance at about 4.5 standard errors
  const int n = 400000;
  Matrix acc = Matrix::Zero(2, 2);
  for (int k = 0; k < n; ++k) {
    const Vector x = sample_prior(p, f, g, rng);
    acc += x * x.transpose();
  }
  acc /= n;
  Matrix expected(2, 2);
  expected << 1, 1, 1, 2;
  CHECK((acc - expected).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("sample_prior: strength shrinks differences, Cauchy quartile") {
  const GridGraph g = build_grid(1, 2);
  const std::vector<Index> e0{0};
  const SpanningForest f = forest_from_edges(g, e0);
  RngStream rng(5);
  double prev = INFINITY;
  for (double lambda : {1.0, 10.0, 100.0}) {
    const DifferencePrior p(Family::Gaussian, lambda, 1.0);
    double s = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const Vector x = sample_prior(p, f, g, rng);
      s += (x[0] - x[1]) * (x[0] - x[1]);
    }
    CHECK(s < prev);
    prev = s;
  }
  const double scale = 0.5;  // strength 2
  const DifferencePrior c(Family::Cauchy, 1.0 / scale, 1.0);
  std::vector<double> d;
  for (int k = 0; k < 100000; ++k) {
    const Vector x = sample_prior(c, f, g, rng);
    d.push_back(std::abs(x[1] - x[0]));
  }
  std::nth_element(d.begin(), d.begin() + 50000, d.end());
  CHECK(std::abs(d[50000] - scale) < 0.05 * scale);
}

TEST_CASE("Gaussian prior samples have the expected mean log density") {
  RngStream rng(8);
  const GridGraph g = build_grid(3, 4);
  const SpanningForest t = wilson_sample(TreeDistribution(g), 0, rng);
  const DifferencePrior p(Family::Gaussian, 2.0, 0.5);
  const int n = 20000;
  double acc = 0.0, acc2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double l = log_prior_density(p, t, g, sample_prior(p, t, g, rng));
    acc += l;
    acc2 += l * l;
  }
  const double mean = acc / n, se = std::sqrt((acc2 / n - mean * mean) / n);
  const double entropy = 12 * 0.5 * std::log(2 * std::numbers::pi * std::numbers::e) -
                         std::log(p.root_weight) - 11 * std::log(p.strength);
  CHECK(std::abs(mean + entropy) < 4 * se);
}

TEST_CASE("scale-mixture marginals reproduce Laplace and Cauchy") {
  RngStream rng(99);
  const int n = 100000;
  for (double gamma : {1.0, 0.3}) {
    std::vector<double> lap, cau;
    for (int k = 0; k < n; ++k) {
      lap.push_back(std::sqrt(sample_tau_marginal(Family::Laplace, gamma, rng)) * rng.normal());
      cau.push_back(std::sqrt(sample_tau_marginal(Family::Cauchy, gamma, rng)) * rng.normal());
    }
    CHECK(ks_distance(lap, [&](double x) { return laplace_cdf(x, gamma); }) < 0.01);
    CHECK(ks_distance(cau, [&](double x) { return cauchy_cdf(x, gamma); }) < 0.01);
  }
  double tau_sum = 0.0;
  for (int k = 0; k < 1000000; ++k) tau_sum += sample_tau_marginal(Family::Laplace, 2.0, rng);
  CHECK(std::abs(tau_sum / 1e6 - 0.5) < 0.005);  // rate gamma^2/2 = 2, mean 1/2
  CHECK_THROWS_AS(sample_tau_marginal(Family::Gaussian, 1.0, rng), std::invalid_argument);
}

TEST_CASE("Cauchy conditional precision is exponential") {
  RngStream rng(3);
  for (auto [z, gamma] : {std::pair{0.4, 1.0}, {3.0, 0.2}}) {
    double s = 0.0;
    for (int k = 0; k < 100000; ++k) s += 1.0 / sample_aux_given_difference(Family::Cauchy, z, gamma, rng);
    CHECK(std::abs(s / 1e5 / (2.0 / (z * z + gamma * gamma)) - 1.0) < 0.01);
  }
}

namespace {

template <typename AuxDraw>
std::vector<double> two_block_chain(AuxDraw aux, RngStream& rng, int draws, int thin) {
  double z = 0.3;
  std::vector<double> out;
  for (int k = 0; k < 1000 + draws * thin; ++k) {
    const double tau = aux(z);
    z = std::sqrt(tau) * rng.normal();
    if (k >= 1000 && (k - 1000) % thin == 0) out.push_back(z);
  }
  return out;
}

}  // namespace

TEST_CASE("two-block Gibbs leaves the difference marginal invariant") {
  RngStream rng(123);
  const double gamma = 1.5;
  auto lap = two_block_chain(
      [&](double z) { return sample_aux_given_difference(Family::Laplace, z, gamma, rng); }, rng, 100000, 5);
  CHECK(ks_distance(lap, [&](double x) { return laplace_cdf(x, gamma); }) < 0.01);
  auto cau = two_block_chain(
      [&](double z) { return sample_aux_given_difference(Family::Cauchy, z, gamma, rng); }, rng, 100000, 5);
  CHECK(ks_distance(cau, [&](double x) { return cauchy_cdf(x, gamma); }) < 0.01);

  // Reading the inverse-Gaussian draw as tau itself (rather than 1/tau) does not
  // preserve the Laplace marginal.
  auto wrong = two_block_chain(
      [&](double z) {
        return rng.inverse_gaussian(gamma / std::max(std::abs(z), 1e-8), gamma * gamma);
      },
      rng, 20000, 5);
  CHECK(ks_distance(wrong, [&](double x) { return laplace_cdf(x, gamma); }) > 0.05);
}

TEST_CASE("Laplace conditional at zero difference is finite") {
  RngStream rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double tau = sample_aux_given_difference(Family::Laplace, 0.0, 2.0, rng);
    CHECK(std::isfinite(tau));
    CHECK(tau > 0.0);
  }
  CHECK_THROWS_AS(sample_aux_given_difference(Family::Gaussian, 0.1, 1.0, rng), std::invalid_argument);
}

TEST_CASE("mixture gamma conventions") {
  CHECK(mixture_gamma(Family::Laplace, 4.0) == 4.0);
  CHECK(mixture_gamma(Family::Cauchy, 4.0) == 0.25);
  CHECK_THROWS(mixture_gamma(Family::Gaussian, 1.0));
}
