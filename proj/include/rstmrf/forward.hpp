#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rstmrf/linalg.hpp"
#include "rstmrf/rng.hpp"
#include "rstmrf/types.hpp"

namespace rstmrf {

enum class ForwardKind { Identity, Blur, Mask };

/// Linear forward operator on a height x width image.
struct ForwardOperator {
  ForwardKind kind = ForwardKind::Identity;
  Index height = 0;
  Index width = 0;
  Vector kernel;                // Blur: symmetric 1-D taps, applied along both axes
  std::vector<Index> observed;  // Mask: observed pixels, increasing

  Index cols() const { return height * width; }
  Index rows() const { return kind == ForwardKind::Mask ? static_cast<Index>(observed.size()) : cols(); }
};

ForwardOperator make_identity_operator(Index height, Index width);

/// Gaussian blur with standard deviation `sd` pixels, truncated at `truncate`
/// standard deviations and renormalized; half-sample symmetric boundaries.
/// With that boundary and a symmetric kernel the operator is self-adjoint.
ForwardOperator make_blur_operator(Index height, Index width, double sd = 2.0,
                                   double truncate = 4.0);

/// Observes every pixel whose keep flag is set.
ForwardOperator make_mask_operator(Index height, Index width, const std::vector<bool>& keep);

/// Observes everything except a centered hole_height x hole_width block.
ForwardOperator make_center_hole_operator(Index height, Index width, Index hole_height,
                                          Index hole_width);

Vector apply_forward(const ForwardOperator& op, const Vector& image);
Vector apply_adjoint(const ForwardOperator& op, const Vector& residual);
LinearMap forward_map(const ForwardOperator& op);

/// y = A x + e, e ~ N(0, noise_sd^2 I).
struct LinearProblem {
  ForwardOperator op;
  Vector data;
  double noise_sd = 1.0;

  LinearProblem() = default;
  LinearProblem(ForwardOperator op_, Vector data_, double noise_sd_);
};

struct Phantom {
  Image image;
  std::string name;
};

/// Built-ins: "disk", "rects", "step", "shapes". Values lie in [0, 1].
Phantom make_phantom(const std::string& name, Index height = 128, Index width = 128);

LinearProblem make_data(const Phantom& phantom, const ForwardOperator& op, double noise_sd,
                        RngStream& rng);

inline constexpr double kDenoisingNoiseSd = 0.2;
inline constexpr double kDeblurringNoiseSd = 1e-2;
inline constexpr double kInpaintingNoiseSd = 1e-2;

// Image I/O. PGM values map [lo, hi] linearly to [0, maxval] with clamping;
// 16-bit samples are big-endian. CSV is a `height,width` header then one row
// of comma-separated values per image row.
void write_pgm(std::ostream& out, const Image& img, double lo, double hi, int bits = 16);
void write_pgm(const std::string& path, const Image& img, double lo, double hi, int bits = 16);
/// Reads P5 (8 or 16 bit) and returns values scaled to [0, 1].
Image read_pgm(std::istream& in);
Image read_pgm(const std::string& path);
void write_image_csv(std::ostream& out, const Image& img);
Image read_image_csv(std::istream& in);

}  // namespace rstmrf
