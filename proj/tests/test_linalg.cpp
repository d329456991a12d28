#include <cmath>
#include <limits>

#include "doctest.h"
#include "rstmrf/graph.hpp"
#include "rstmrf/linalg.hpp"

using namespace rstmrf;

namespace {

LinearOperatorStack diagonal_stack(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  for (Index i = 0; i < d.size(); ++i) m.insert(i, i) = std::sqrt(d[i]);
  m.makeCompressed();
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(m), 1.0);
  return op;
}

// 64x64 grid Laplacian with lambda^2 added at the root, as D^T D with a root row.
LinearOperatorStack rooted_laplacian(Index n, double lambda) {
  const GridGraph g = build_grid(n, n);
  std::vector<Index> all(g.edge_count());
  for (Index e = 0; e < g.edge_count(); ++e) all[e] = e;
  const DifferenceOperator d = difference_operator(g, all, std::vector<Index>{0}, lambda);
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(d.matrix), 1.0);
  return op;
}

}  // namespace

TEST_CASE("identity solve is immediate") {
  LinearOperatorStack op;
  op.add_term(LinearMap::identity(10), 1.0);
  RngStream rng(1);
  Vector b(10);
  for (Index i = 0; i < 10; ++i) b[i] = rng.normal();
  const CgResult r = cg_solve(op, b, {});
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  CHECK((r.x - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("diagonal solve recovers ones") {
  const Index n = 50;
  Vector d = Vector::LinSpaced(n, 1.0, static_cast<double>(n));
  const LinearOperatorStack op = diagonal_stack(d);
  const CgResult r = cg_solve(op, d, {});
  CHECK(r.converged);
  CHECK(r.relative_residual <= 1e-6);
  // forward error is bounded by cond(op) * relative residual, cond = n here
  CHECK((r.x - Vector::Ones(n)).norm() / std::sqrt(double(n)) <= n * r.relative_residual);
  CgSettings tight;
  tight.rel_tol = 1e-12;
  CHECK((cg_solve(op, d, tight).x - Vector::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rooted 64x64 Laplacian meets the residual contract") {
  const LinearOperatorStack op = rooted_laplacian(64, 1.0);
  RngStream rng(2);
  Vector b(op.cols());
  for (Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
  const CgResult r = cg_solve(op, b, {});
  CHECK(r.converged);
  CHECK(r.iterations > 0);
  // recompute the residual independently of the solver
  const double res = (op * r.x - b).norm() / b.norm();
  CHECK(res <= 1e-6);
  CHECK(res == doctest::Approx(r.relative_residual));
}

TEST_CASE("iteration cap is reported, not hidden") {
  const LinearOperatorStack op = rooted_laplacian(32, 1e-3);
  RngStream rng(3);
  Vector b(op.cols());
  for (Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
  CgSettings s;
  s.max_iter = 5;
  const CgResult r = cg_solve(op, b, s);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
  CHECK(r.relative_residual > 1e-6);
}

TEST_CASE("preconditioned and plain solves agree") {
  // SPD with a wide diagonal range: rooted Laplacian plus a heterogeneous diagonal
  const Index n = 20;
  const GridGraph g = build_grid(n, n);
  std::vector<Index> all(g.edge_count());
  for (Index e = 0; e < g.edge_count(); ++e) all[e] = e;
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(difference_operator(g, all, std::vector<Index>{0}, 1.0).matrix), 1.0);
  SparseMatrix s(n * n, n * n);
  for (Index i = 0; i < n * n; ++i) s.insert(i, i) = std::pow(10.0, 2.0 * (i % 7) / 6.0);
  s.makeCompressed();
  op.add_term(LinearMap::from_sparse(s), 3.0);

  RngStream rng(5);
  Vector b(n * n);
  for (Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
  CgSettings cs;
  const CgResult plain = cg_solve(op, b, cs);
  const Vector inv = hutchinson_diagonal(op, 64, rng).cwiseInverse();
  const CgResult pre = cg_solve(op, b, cs, &inv);
  CHECK(plain.converged);
  CHECK(pre.converged);
  CHECK((plain.x - pre.x).norm() <= 10 * cs.rel_tol * plain.x.norm());
  CHECK(pre.iterations < plain.iterations);
  const Matrix dense = op.to_dense();
  const Vector exact = dense.llt().solve(b);
  CHECK((plain.x - exact).norm() / exact.norm() < 10 * cs.rel_tol);
  CHECK((pre.x - exact).norm() / exact.norm() < 10 * cs.rel_tol);
}

TEST_CASE("warm start") {
  const LinearOperatorStack op = rooted_laplacian(16, 1.0);
  RngStream rng(6);
  Vector b(op.cols());
  for (Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
  const CgResult first = cg_solve(op, b, {});
  const CgResult again = cg_solve(op, b, {}, nullptr, &first.x);
  CHECK(again.iterations == 0);
  CHECK(again.converged);
}

TEST_CASE("Hutchinson is exact on diagonals") {
  Vector d(6);
  d << 1, 2, 3, 0.5, 7, 1e-3;
  const LinearOperatorStack op = diagonal_stack(d);
  RngStream rng(7);
  for (Index probes : {1, 3, 64}) CHECK((hutchinson_diagonal(op, probes, rng) - d).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(hutchinson_diagonal(op, 0, rng), std::invalid_argument);
}

TEST_CASE("Hutchinson on a dense 5x5 matrix") {
  Matrix b(5, 5);
  b << 2, 0.3, -0.1, 0.4, 0.2,  //
      0.1, 1.5, 0.2, -0.3, 0.1,  //
      -0.2, 0.1, 1.8, 0.2, -0.4,  //
      0.3, -0.1, 0.2, 2.2, 0.1,  //
      0.1, 0.2, -0.3, 0.1, 1.7;
  SparseMatrix sb = b.sparseView();
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(sb), 1.0);
  const Vector exact = (b.transpose() * b).diagonal();
  RngStream rng(8);
  const Vector est = hutchinson_diagonal(op, 10000, rng);
  CHECK(((est - exact).cwiseAbs().array() / exact.array()).maxCoeff() < 0.05);
}

TEST_CASE("Hutchinson clamps tiny or negative estimates") {
  // indefinite term weight makes some estimates negative
  Matrix m = Matrix::Identity(3, 3);
  SparseMatrix sm = m.sparseView();
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(sm), -1.0);
  RngStream rng(9);
  CHECK((hutchinson_diagonal(op, 4, rng).array() == kDiagonalClamp).all());
}

TEST_CASE("stack application equals dense assembly") {
  RngStream rng(10);
  Matrix a(7, 5), c(3, 5);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
  SparseMatrix sa = a.sparseView(), sc = c.sparseView();
  LinearOperatorStack op;
  op.add_term(LinearMap::from_sparse(sa), 4.0);
  op.add_term(LinearMap::from_sparse(sc), 0.25);
  const Matrix expected = 4.0 * a.transpose() * a + 0.25 * c.transpose() * c;
  CHECK((op.to_dense() - expected).cwiseAbs().maxCoeff() < 1e-12);
  Vector x(5);
  for (Index i = 0; i < 5; ++i) x[i] = rng.normal();
  CHECK((op * x - expected * x).cwiseAbs().maxCoeff() < 1e-12);

  Matrix wrong(3, 4);
  SparseMatrix sw = wrong.sparseView();
  CHECK_THROWS_AS(op.add_term(LinearMap::from_sparse(sw), 1.0), std::invalid_argument);
}

TEST_CASE("solver errors") {
  LinearOperatorStack empty;
  CHECK_THROWS_AS(cg_solve(empty, Vector::Ones(3), {}), std::invalid_argument);

  Vector d = Vector::Ones(4);
  const LinearOperatorStack op = diagonal_stack(d);
  CgSettings bad;
  bad.rel_tol = 1.5;
  CHECK_THROWS_AS(cg_solve(op, d, bad), std::invalid_argument);

  Vector b = Vector::Ones(4);
  b[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cg_solve(op, b, {}), NumericalBreakdown);

  LinearOperatorStack nan_op;
  LinearMap m = LinearMap::identity(4);
  m.apply = [](const Vector& x, Vector& y) {
    y = x;
    y[1] = std::numeric_limits<double>::quiet_NaN();
  };
  nan_op.add_term(m, 1.0);
  try {
    cg_solve(nan_op, Vector::Ones(4), {});
    FAIL("expected breakdown");
  } catch (const NumericalBreakdown& e) {
    CHECK(e.iteration() == 0);
  }

  CHECK(cg_solve(op, Vector::Zero(4), {}).x.isZero());
}
