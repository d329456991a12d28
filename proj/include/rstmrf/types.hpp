#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace rstmrf {

using Index = std::int64_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Row-major pixel image. Vertex v of an h x w grid is pixel (v / w, v % w).
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const Vector> flatten(const Image& img) {
  return {img.data(), img.size()};
}

inline Image unflatten(const Vector& x, Index height, Index width) {
  if (x.size() != height * width) throw std::invalid_argument("unflatten: size mismatch");
  return Eigen::Map<const Image>(x.data(), height, width);
}

/// Raised when an iterative method produces NaN/Inf.
class NumericalBreakdown : public std::runtime_error {
 public:
  NumericalBreakdown(const std::string& what, Index iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  Index iteration() const { return iteration_; }

 private:
  Index iteration_;
};

}  // namespace rstmrf
