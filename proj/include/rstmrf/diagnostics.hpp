#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rstmrf/graph.hpp"
#include "rstmrf/types.hpp"

namespace rstmrf {

/// Largest |x_u - x_v| over 4-neighbour pixel pairs.
template <typename Derived>
typename Derived::Scalar max_local_contrast(const Eigen::MatrixBase<Derived>& img) {
  using Scalar = typename Derived::Scalar;
  Scalar best(0);
  if (img.cols() > 1)
    best = std::max(best, (img.rightCols(img.cols() - 1) - img.leftCols(img.cols() - 1))
                              .cwiseAbs()
                              .maxCoeff());
  if (img.rows() > 1)
    best = std::max(best, (img.bottomRows(img.rows() - 1) - img.topRows(img.rows() - 1))
                              .cwiseAbs()
                              .maxCoeff());
  return best;
}

/// max - min.
template <typename Derived>
typename Derived::Scalar global_contrast(const Eigen::MatrixBase<Derived>& img) {
  return img.maxCoeff() - img.minCoeff();
}

/// Graph distance to `root` inside its forest component. Vertices of other
/// components get their distance to their own component root.
std::vector<Index> tree_depth_field(const SpanningForest& forest, const GridGraph& graph,
                                    Index root);

struct InterfaceRoughness {
  double length;  // dual unit segments separating the two levels
  double span;    // larger of the axis extents those segments cover
  double ratio() const { return length / span; }
};

/// Level-set interface of `img` at `threshold`. Empty interface gives nullopt.
std::optional<InterfaceRoughness> interface_roughness(const Image& img, double threshold = 0.5);

struct BenchmarkRow {
  Index grid_size;
  double kappa;
  double rho_rel;
  double mean_steps;
  double wall_time_ms;
};

/// Mean Wilson walk steps and wall time on n x n grids whose horizontal edges
/// weigh kappa and vertical edges 1. rho_rel = 0 runs the plain sampler rooted
/// at vertex 0; otherwise the terminal weight is rho_rel * max(kappa, 1).
std::vector<BenchmarkRow> benchmark_tree_runtime(const std::vector<Index>& sizes,
                                                 const std::vector<double>& kappas,
                                                 const std::vector<double>& rho_rels,
                                                 Index repeats, std::uint64_t seed);

/// Columns grid_size,kappa,rho_rel,mean_steps,wall_time_ms.
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

/// Integer per-vertex field as an image, e.g. for write_pgm heat maps.
Image depth_image(const std::vector<Index>& depth, Index height, Index width);

}  // namespace rstmrf
