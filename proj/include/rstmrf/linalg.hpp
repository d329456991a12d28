#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rstmrf/rng.hpp"
#include "rstmrf/types.hpp"

namespace rstmrf {

/// A linear map M given by its action and the action of its transpose.
struct LinearMap {
  Index rows = 0;
  Index cols = 0;
  std::function<void(const Vector&, Vector&)> apply;
  std::function<void(const Vector&, Vector&)> apply_transpose;

  static LinearMap from_sparse(SparseMatrix m);
  static LinearMap identity(Index n);
};

/// Sum of weighted normal-equation terms c_k * M_k^T M_k, all sharing the
/// same column dimension.
class LinearOperatorStack {
 public:
  void add_term(LinearMap map, double weight);

  bool empty() const { return terms_.empty(); }
  Index cols() const { return cols_; }
  std::size_t term_count() const { return terms_.size(); }
  const LinearMap& map(std::size_t k) const { return terms_[k].map; }
  double weight(std::size_t k) const { return terms_[k].weight; }

  void apply(const Vector& x, Vector& out) const;
  Vector operator*(const Vector& x) const {
    Vector out;
    apply(x, out);
    return out;
  }

  /// Dense matrix by applying the stack to unit vectors; small sizes only.
  Matrix to_dense() const;

 private:
  struct Term {
    LinearMap map;
    double weight;
  };
  std::vector<Term> terms_;
  Index cols_ = 0;
  mutable Vector scratch_in_, scratch_out_;
};

struct CgSettings {
  double rel_tol = 1e-6;
  Index max_iter = 0;  // 0 means 10 * n
};

struct CgResult {
  Vector x;
  Index iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// (Preconditioned) conjugate gradients on the SPD stack. Stops when
/// ||b - A x|| / ||b|| <= rel_tol; the reported residual is recomputed from
/// scratch. `inverse_diagonal` enables Jacobi preconditioning. Throws
/// NumericalBreakdown on NaN/Inf and std::invalid_argument on an empty stack.
CgResult cg_solve(const LinearOperatorStack& op, const Vector& rhs, const CgSettings& settings,
                  const Vector* inverse_diagonal = nullptr, const Vector* initial_guess = nullptr);

inline constexpr double kDiagonalClamp = 1e-12;

/// Hutchinson estimate of diag(op) with Rademacher probes, clamped below at kDiagonalClamp.
Vector hutchinson_diagonal(const LinearOperatorStack& op, Index probes, RngStream& rng);

}  // namespace rstmrf
