#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gme/image.hpp"

namespace gme {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// 2x3 affine map  [x y]^T = A [x' y' 1]^T  with
///   A = | a_xx a_xy a_x |
///       | a_yx a_yy a_y |
/// The parameter-vector order (a_xx, a_xy, a_x, a_yx, a_yy, a_y) is used
/// everywhere a transform is flattened: JSON, solver updates, Jacobians.
struct AffineTransform {
  double a_xx = 1.0;
  double a_xy = 0.0;
  double a_x = 0.0;
  double a_yx = 0.0;
  double a_yy = 1.0;
  double a_y = 0.0;

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double tx, double ty) { return {1, 0, tx, 0, 1, ty}; }
  static AffineTransform from_params(const std::array<double, 6>& p) {
    return {p[0], p[1], p[2], p[3], p[4], p[5]};
  }

  std::array<double, 6> params() const { return {a_xx, a_xy, a_x, a_yx, a_yy, a_y}; }
  double determinant() const { return a_xx * a_yy - a_xy * a_yx; }
  bool is_finite() const;

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

inline constexpr double kSingularDeterminant = 1e-12;

Point2 apply(const AffineTransform& a, Point2 p);

/// apply(compose(a, b), p) == apply(a, apply(b, p)).
AffineTransform compose(const AffineTransform& a, const AffineTransform& b);

/// Throws SingularTransformError when |det| < 1e-12.
AffineTransform invert(const AffineTransform& a);

/// Largest displacement between the two maps over the four corners of a
/// width x height pixel grid, in pixels.
double max_corner_distance(const AffineTransform& a, const AffineTransform& b, int width,
                           int height);

/// {"a": [a_xx, a_xy, a_x, a_yx, a_yy, a_y]}
std::string to_json(const AffineTransform& a);
AffineTransform affine_from_json(const std::string& text);

/// Destination-driven warp result. `valid` is 1 where the source sample
/// landed inside the source rectangle; `pixels` is 0 elsewhere.
struct WarpedImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
  std::vector<std::uint8_t> valid;

  double at(int x, int y) const noexcept {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool is_valid(int x, int y) const noexcept {
    return valid[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t valid_count() const;
};

/// For each destination pixel (x', y') samples `source` at apply(a, (x', y'))
/// with bilinear interpolation.
WarpedImage warp_image(const Image& source, const AffineTransform& a);

/// Warps into a grid of a different size than the source.
WarpedImage warp_image(const Image& source, const AffineTransform& a, int out_width,
                       int out_height);

}  // namespace gme
