#include "gme/affine.hpp"

#include <algorithm>
#include <cmath>

#include "gme/error.hpp"
#include "json.hpp"

namespace gme {

bool AffineTransform::is_finite() const {
  const auto p = params();
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

Point2 apply(const AffineTransform& a, Point2 p) {
  return {a.a_xx * p.x + a.a_xy * p.y + a.a_x, a.a_yx * p.x + a.a_yy * p.y + a.a_y};
}

AffineTransform compose(const AffineTransform& a, const AffineTransform& b) {
  return {
      a.a_xx * b.a_xx + a.a_xy * b.a_yx,
      a.a_xx * b.a_xy + a.a_xy * b.a_yy,
      a.a_xx * b.a_x + a.a_xy * b.a_y + a.a_x,
      a.a_yx * b.a_xx + a.a_yy * b.a_yx,
      a.a_yx * b.a_xy + a.a_yy * b.a_yy,
      a.a_yx * b.a_x + a.a_yy * b.a_y + a.a_y,
  };
}

AffineTransform invert(const AffineTransform& a) {
  const double det = a.determinant();
  if (!(std::abs(det) >= kSingularDeterminant)) {
    throw SingularTransformError("affine transform is singular (det = " + std::to_string(det) +
                                 ")");
  }
  const double ixx = a.a_yy / det;
  const double ixy = -a.a_xy / det;
  const double iyx = -a.a_yx / det;
  const double iyy = a.a_xx / det;
  return {ixx, ixy, -(ixx * a.a_x + ixy * a.a_y), iyx, iyy, -(iyx * a.a_x + iyy * a.a_y)};
}

double max_corner_distance(const AffineTransform& a, const AffineTransform& b, int width,
                           int height) {
  const double xs[2] = {0.0, static_cast<double>(width - 1)};
  const double ys[2] = {0.0, static_cast<double>(height - 1)};
  double worst = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      const Point2 pa = apply(a, {x, y});
      const Point2 pb = apply(b, {x, y});
      worst = std::max(worst, std::hypot(pa.x - pb.x, pa.y - pb.y));
    }
  }
  return worst;
}

std::string to_json(const AffineTransform& a) {
  nlohmann::json j;
  j["a"] = a.params();
  return j.dump();
}

AffineTransform affine_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("affine JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("a") || !j["a"].is_array() || j["a"].size() != 6) {
    throw ParseError("affine JSON: expected {\"a\": [6 numbers]}");
  }
  std::array<double, 6> p{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!j["a"][i].is_number()) throw ParseError("affine JSON: coefficient is not a number");
    p[i] = j["a"][i].get<double>();
  }
  return AffineTransform::from_params(p);
}

std::size_t WarpedImage::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

WarpedImage warp_image(const Image& source, const AffineTransform& a) {
  return warp_image(source, a, source.width(), source.height());
}

WarpedImage warp_image(const Image& source, const AffineTransform& a, int out_width,
                       int out_height) {
  WarpedImage out{out_width, out_height,
                  std::vector<double>(static_cast<std::size_t>(out_width) * out_height, 0.0),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(out_width) * out_height, 0)};
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2 p = apply(a, {static_cast<double>(x), static_cast<double>(y)});
      if (const auto v = bilinear_sample(source, p.x, p.y)) {
        const std::size_t i = static_cast<std::size_t>(y) * out_width + x;
        out.pixels[i] = *v;
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

}  // namespace gme
