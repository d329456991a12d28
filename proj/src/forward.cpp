#include "rstmrf/forward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace rstmrf {

ForwardOperator make_identity_operator(Index height, Index width) {
  if (height < 1 || width < 1) throw std::invalid_argument("forward operator: zero dimension");
  ForwardOperator op;
  op.height = height;
  op.width = width;
  return op;
}

ForwardOperator make_blur_operator(Index height, Index width, double sd, double truncate) {
  ForwardOperator op = make_identity_operator(height, width);
  if (!(sd > 0.0) || !(truncate > 0.0)) throw std::invalid_argument("blur: sd and truncation must be positive");
  op.kind = ForwardKind::Blur;
  const Index radius = static_cast<Index>(std::ceil(truncate * sd));
  op.kernel.resize(2 * radius + 1);
  for (Index k = -radius; k <= radius; ++k)
    op.kernel[k + radius] = std::exp(-0.5 * static_cast<double>(k * k) / (sd * sd));
  op.kernel /= op.kernel.sum();
  return op;
}

ForwardOperator make_mask_operator(Index height, Index width, const std::vector<bool>& keep) {
  ForwardOperator op = make_identity_operator(height, width);
  if (static_cast<Index>(keep.size()) != height * width) throw std::invalid_argument("mask: size mismatch");
  op.kind = ForwardKind::Mask;
  for (Index i = 0; i < height * width; ++i)
    if (keep[i]) op.observed.push_back(i);
  return op;
}

ForwardOperator make_center_hole_operator(Index height, Index width, Index hole_height,
                                          Index hole_width) {
  if (hole_height > height || hole_width > width || hole_height < 0 || hole_width < 0)
    throw std::invalid_argument("center hole larger than image");
  std::vector<bool> keep(static_cast<std::size_t>(height * width), true);
  const Index r0 = (height - hole_height) / 2, c0 = (width - hole_width) / 2;
  for (Index r = r0; r < r0 + hole_height; ++r)
    for (Index c = c0; c < c0 + hole_width; ++c) keep[r * width + c] = false;
  return make_mask_operator(height, width, keep);
}

namespace {

Index reflect(Index i, Index n) {
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Separable convolution, rows then columns.
Vector blur(const ForwardOperator& op, const Vector& x) {
  const Index h = op.height, w = op.width;
  const Index radius = (op.kernel.size() - 1) / 2;
  Vector tmp = Vector::Zero(x.size()), out = Vector::Zero(x.size());
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      double s = 0.0;
      for (Index k = -radius; k <= radius; ++k) s += op.kernel[k + radius] * x[r * w + reflect(c + k, w)];
      tmp[r * w + c] = s;
    }
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      double s = 0.0;
      for (Index k = -radius; k <= radius; ++k) s += op.kernel[k + radius] * tmp[reflect(r + k, h) * w + c];
      out[r * w + c] = s;
    }
  return out;
}

}  // namespace

Vector apply_forward(const ForwardOperator& op, const Vector& image) {
  if (image.size() != op.cols()) throw std::invalid_argument("apply_forward: image size mismatch");
  switch (op.kind) {
    case ForwardKind::Identity:
      return image;
    case ForwardKind::Blur:
      return blur(op, image);
    case ForwardKind::Mask: {
      Vector y(op.rows());
      for (Index i = 0; i < op.rows(); ++i) y[i] = image[op.observed[i]];
      return y;
    }
  }
  return image;
}

Vector apply_adjoint(const ForwardOperator& op, const Vector& residual) {
  if (residual.size() != op.rows()) throw std::invalid_argument("apply_adjoint: size mismatch");
  switch (op.kind) {
    case ForwardKind::Identity:
      return residual;
    case ForwardKind::Blur:
      return blur(op, residual);
    case ForwardKind::Mask: {
      Vector x = Vector::Zero(op.cols());
      for (Index i = 0; i < op.rows(); ++i) x[op.observed[i]] = residual[i];
      return x;
    }
  }
  return residual;
}

LinearMap forward_map(const ForwardOperator& op) {
  auto shared = std::make_shared<const ForwardOperator>(op);
  LinearMap map;
  map.rows = op.rows();
  map.cols = op.cols();
  map.apply = [shared](const Vector& x, Vector& y) { y = apply_forward(*shared, x); };
  map.apply_transpose = [shared](const Vector& x, Vector& y) { y = apply_adjoint(*shared, x); };
  return map;
}

LinearProblem::LinearProblem(ForwardOperator op_, Vector data_, double noise_sd_)
    : op(std::move(op_)), data(std::move(data_)), noise_sd(noise_sd_) {
  if (data.size() != op.rows()) throw std::invalid_argument("LinearProblem: data length mismatch");
  if (!(noise_sd > 0.0)) throw std::invalid_argument("LinearProblem: noise sd must be positive");
}

Phantom make_phantom(const std::string& name, Index height, Index width) {
  if (height < 1 || width < 1) throw std::invalid_argument("make_phantom: zero dimension");
  Image img = Image::Zero(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  auto in_disk = [](double r, double c, double cr, double cc, double rad) {
    return (r - cr) * (r - cr) + (c - cc) * (c - cc) <= rad * rad;
  };
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c) {
      const double y = r + 0.5, x = c + 0.5;
      double v = 0.0;
      if (name == "disk") {
        v = in_disk(y, x, h / 2, w / 2, 0.3 * std::min(h, w)) ? 1.0 : 0.0;
      } else if (name == "rects") {
        if (y > 0.15 * h && y < 0.55 * h && x > 0.15 * w && x < 0.5 * w) v = 1.0;
        if (y > 0.45 * h && y < 0.85 * h && x > 0.6 * w && x < 0.85 * w) v = 0.5;
      } else if (name == "step") {
        v = c >= width / 2 ? 1.0 : 0.0;
      } else if (name == "shapes") {
        if (in_disk(y, x, 0.35 * h, 0.35 * w, 0.2 * std::min(h, w))) v = 1.0;
        if (y > 0.55 * h && y < 0.85 * h && x > 0.5 * w && x < 0.85 * w) v = 0.6;
        if (y > 0.65 * h && y < 0.8 * h && x > 0.12 * w && x < 0.35 * w) v = 0.3;
      } else {
        throw std::invalid_argument("make_phantom: unknown phantom '" + name + "'");
      }
      img(r, c) = v;
    }
  return {std::move(img), name};
}

LinearProblem make_data(const Phantom& phantom, const ForwardOperator& op, double noise_sd,
                        RngStream& rng) {
  if (!(noise_sd > 0.0)) throw std::invalid_argument("make_data: noise sd must be positive");
  if (phantom.image.rows() != op.height || phantom.image.cols() != op.width)
    throw std::invalid_argument("make_data: phantom does not match operator grid");
  Vector y = apply_forward(op, Vector(flatten(phantom.image)));
  for (Index i = 0; i < y.size(); ++i) y[i] += noise_sd * rng.normal();
  return LinearProblem(op, std::move(y), noise_sd);
}

void write_pgm(std::ostream& out, const Image& img, double lo, double hi, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("write_pgm: bits must be 8 or 16");
  const int maxval = bits == 8 ? 255 : 65535;
  out << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
  const double span = hi > lo ? hi - lo : 1.0;
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) {
      double t = (img(r, c) - lo) / span;
      t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
      const auto q = static_cast<unsigned>(std::lround(t * maxval));
      if (bits == 16) out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xFF));
    }
}

void write_pgm(const std::string& path, const Image& img, double lo, double hi, int bits) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_pgm(f, img, lo, hi, bits);
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Image read_pgm(std::istream& in) {
  if (pgm_token(in) != "P5") throw std::invalid_argument("read_pgm: not a binary PGM");
  const Index w = std::stoll(pgm_token(in));
  const Index h = std::stoll(pgm_token(in));
  const int maxval = std::stoi(pgm_token(in));
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw std::invalid_argument("read_pgm: bad header");
  Image img(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      unsigned v = static_cast<unsigned char>(in.get());
      if (maxval > 255) v = (v << 8) | static_cast<unsigned char>(in.get());
      if (!in) throw std::invalid_argument("read_pgm: truncated data");
      img(r, c) = static_cast<double>(v) / maxval;
    }
  return img;
}

Image read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_pgm(f);
}

void write_image_csv(std::ostream& out, const Image& img) {
  out << img.rows() << ',' << img.cols() << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      if (c) out << ',';
      cell.str("");
      cell << img(r, c);
      out << cell.str();
    }
    out << '\n';
  }
}

Image read_image_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("read_image_csv: empty input");
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("read_image_csv: bad header");
  const Index h = std::stoll(line.substr(0, comma)), w = std::stoll(line.substr(comma + 1));
  Image img(h, w);
  for (Index r = 0; r < h; ++r) {
    if (!std::getline(in, line)) throw std::invalid_argument("read_image_csv: missing rows");
    std::istringstream row(line);
    std::string cell;
    for (Index c = 0; c < w; ++c) {
      if (!std::getline(row, cell, ',')) throw std::invalid_argument("read_image_csv: short row");
      img(r, c) = std::stod(cell);
    }
  }
  return img;
}

}  // namespace rstmrf
