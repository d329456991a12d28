#include "rstmrf/linalg.hpp"

#include <cmath>
#include <memory>

namespace rstmrf {

LinearMap LinearMap::from_sparse(SparseMatrix m) {
  auto shared = std::make_shared<const SparseMatrix>(std::move(m));
  LinearMap map;
  map.rows = shared->rows();
  map.cols = shared->cols();
  map.apply = [shared](const Vector& x, Vector& y) { y.noalias() = *shared * x; };
  map.apply_transpose = [shared](const Vector& x, Vector& y) {
    y.noalias() = shared->transpose() * x;
  };
  return map;
}

LinearMap LinearMap::identity(Index n) {
  LinearMap map;
  map.rows = n;
  map.cols = n;
  map.apply = [](const Vector& x, Vector& y) { y = x; };
  map.apply_transpose = map.apply;
  return map;
}

void LinearOperatorStack::add_term(LinearMap map, double weight) {
  if (!terms_.empty() && map.cols != cols_)
    throw std::invalid_argument("LinearOperatorStack: column dimension mismatch");
  cols_ = map.cols;
  terms_.push_back({std::move(map), weight});
}

void LinearOperatorStack::apply(const Vector& x, Vector& out) const {
  if (terms_.empty()) throw std::invalid_argument("LinearOperatorStack: empty stack");
  out.setZero(cols_);
  for (const auto& t : terms_) {
    t.map.apply(x, scratch_in_);
    t.map.apply_transpose(scratch_in_, scratch_out_);
    out.noalias() += t.weight * scratch_out_;
  }
}

Matrix LinearOperatorStack::to_dense() const {
  Matrix m(cols_, cols_);
  Vector e = Vector::Zero(cols_), col;
  for (Index j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    apply(e, col);
    m.col(j) = col;
    e[j] = 0.0;
  }
  return m;
}

CgResult cg_solve(const LinearOperatorStack& op, const Vector& rhs, const CgSettings& settings,
                  const Vector* inverse_diagonal, const Vector* initial_guess) {
  if (op.empty()) throw std::invalid_argument("cg_solve: empty operator stack");
  const Index n = op.cols();
  if (rhs.size() != n) throw std::invalid_argument("cg_solve: rhs size mismatch");
  if (!(settings.rel_tol > 0.0 && settings.rel_tol < 1.0))
    throw std::invalid_argument("cg_solve: rel_tol must lie in (0, 1)");
  const Index max_iter = settings.max_iter > 0 ? settings.max_iter : 10 * n;

  CgResult res;
  const double bnorm = rhs.norm();
  if (!std::isfinite(bnorm)) throw NumericalBreakdown("cg_solve: non-finite right-hand side", 0);
  if (bnorm == 0.0) {
    res.x = Vector::Zero(n);
    res.converged = true;
    return res;
  }
  res.x = initial_guess ? *initial_guess : Vector::Zero(n);
  Vector r, z, p, q;
  op.apply(res.x, q);
  r = rhs - q;

  auto precondition = [&](const Vector& in, Vector& out) {
    if (inverse_diagonal)
      out = in.cwiseProduct(*inverse_diagonal);
    else
      out = in;
  };

  const double target = settings.rel_tol * bnorm;
  Index it = 0;
  // Outer loop restarts from the true residual if the recursive one drifted.
  while (true) {
    precondition(r, z);
    p = z;
    double rz = r.dot(z);
    double rnorm = r.norm();
    while (rnorm > target && it < max_iter) {
      op.apply(p, q);
      const double pq = p.dot(q);
      if (!std::isfinite(pq) || pq <= 0.0) {
        if (!std::isfinite(pq)) throw NumericalBreakdown("cg_solve: non-finite curvature", it);
        break;  // lost positive definiteness numerically; fall through to residual check
      }
      const double alpha = rz / pq;
      res.x.noalias() += alpha * p;
      r.noalias() -= alpha * q;
      precondition(r, z);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
      rnorm = r.norm();
      ++it;
      if (!std::isfinite(rnorm)) throw NumericalBreakdown("cg_solve: non-finite residual", it);
    }
    op.apply(res.x, q);
    r = rhs - q;
    const double true_norm = r.norm();
    if (!std::isfinite(true_norm)) throw NumericalBreakdown("cg_solve: non-finite residual", it);
    res.relative_residual = true_norm / bnorm;
    res.iterations = it;
    res.converged = true_norm <= target;
    if (res.converged || it >= max_iter || rnorm > target) break;
  }
  return res;
}

Vector hutchinson_diagonal(const LinearOperatorStack& op, Index probes, RngStream& rng) {
  if (probes < 1) throw std::invalid_argument("hutchinson_diagonal: probes must be >= 1");
  const Index n = op.cols();
  Vector acc = Vector::Zero(n), v(n), av;
  for (Index k = 0; k < probes; ++k) {
    for (Index i = 0; i < n; ++i) v[i] = rng.rademacher();
    op.apply(v, av);
    acc.noalias() += v.cwiseProduct(av);
  }
  acc /= static_cast<double>(probes);
  return acc.cwiseMax(kDiagonalClamp);
}

}  // namespace rstmrf
