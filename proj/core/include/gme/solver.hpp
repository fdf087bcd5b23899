#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gme/affine.hpp"
#include "gme/image.hpp"
#include "gme/robust_cost.hpp"

namespace gme {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

enum class HessianMode {
  /// Sum of psi'(e) * theta theta^T, with escalating diagonal damping when
  /// the matrix is not positive definite. estimate_motion substitutes the
  /// IRLS matrix for an iteration when this one is indefinite, and redoes a
  /// Newton step with IRLS curvature if it raised the mean per-pixel cost.
  NewtonDamped,
  /// Sum of weight(e) * theta theta^T (iteratively reweighted least squares).
  IRLS,
};

struct SolverConfig {
  CostFunction cost = StudentT{20.0, 20.0};
  int levels = 3;
  int max_iters_per_level = 50;
  double learning_rate = 1.0;
  /// A level stops once the update moves every image corner by less than this (px).
  double corner_tol = 0.01;
  /// Border excluded from all error sums at full resolution (px).
  int mask_margin = 15;
  HessianMode hessian_mode = HessianMode::NewtonDamped;
  double damping_floor = 1e-6;
  /// Use the reference image gradient, computed once per pyramid level, in the
  /// steepest-descent images instead of re-deriving it from the warped input.
  bool reuse_reference_gradient = true;
};

/// Throws ArgumentError if the config is invalid for a width x height input.
void validate(const SolverConfig& config, int width, int height);

/// Interior rectangle of pixels that participate in error sums.
class ContributionMask {
 public:
  ContributionMask(int width, int height, int margin);

  bool operator()(int x, int y) const noexcept {
    return x >= margin_ && x < width_ - margin_ && y >= margin_ && y < height_ - margin_;
  }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int margin() const noexcept { return margin_; }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(width_ - 2 * margin_) *
           static_cast<std::size_t>(height_ - 2 * margin_);
  }

 private:
  int width_;
  int height_;
  int margin_;
};

/// Mask that is true for margin <= x < width-margin and margin <= y < height-margin.
/// Throws ArgumentError unless 0 <= 2*margin < min(width, height).
ContributionMask contribution_mask(int width, int height, int margin);

/// Margin to use at pyramid level k: ceil(margin / 2^k).
int margin_at_level(int margin, int level);

/// Per-pixel image derivatives from which the steepest-descent images
///   theta(x, y) = [x*gx, y*gx, gx, x*gy, y*gy, gy]
/// are formed, (x, y) being destination-grid coordinates.
struct SteepestDescentField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;

  Vector6 at(int x, int y) const {
    const std::size_t i = static_cast<std::size_t>(y) * width + x;
    Vector6 v;
    v << x * gx[i], y * gx[i], gx[i], x * gy[i], y * gy[i], gy[i];
    return v;
  }
};

/// Steepest-descent field from a precomputed gradient (typically of the reference).
SteepestDescentField steepest_descent(const GradientField& gradient);

/// Exact derivative of the bilinear interpolant of `source` at apply(a, (x', y')),
/// i.e. the Jacobian of warp_image(source, a) with respect to the six
/// parameters. Zero where the sample falls outside the source.
SteepestDescentField steepest_descent_warped(const Image& source, const AffineTransform& a);

/// Sum of rho(I_ref - warped) over pixels inside the mask whose warp sample
/// is valid. Throws DegenerateOverlapError if no pixel contributes.
double robust_error(const Image& reference, const WarpedImage& warped,
                    const ContributionMask& mask, const CostFunction& f);

struct GradientHessian {
  Vector6 g = Vector6::Zero();
  Matrix6 H = Matrix6::Zero();
  double robust_error = 0.0;
  /// Sum of absolute residuals over the contributing pixels.
  double sad = 0.0;
  std::size_t contributing = 0;
};

/// With e = I_ref - warped over contributing pixels:
///   g = sum(-psi(e) * theta)
///   H = sum(psi'(e) * theta theta^T)   (NewtonDamped)
///     = sum(weight(e) * theta theta^T) (IRLS)
/// L1 has no usable curvature and always takes the IRLS weights, with |e|
/// floored at 0.25 gray levels.
/// Throws DegenerateOverlapError if no pixel contributes.
GradientHessian gradient_and_hessian(const Image& reference, const WarpedImage& warped,
                                     const SteepestDescentField& sd,
                                     const ContributionMask& mask, const CostFunction& f,
                                     HessianMode mode = HessianMode::NewtonDamped);

/// Solves (H + d I) s = g for the smallest d in {0, mu, 10 mu, ..., 1e12 mu}
/// for which H + d I is positive definite and returns -lambda * s. Throws
/// IllConditionedError past the last damping value. When `damping_used` is
/// non-null it receives d.
Vector6 newton_step(const Vector6& g, const Matrix6& H, double lambda, double mu,
                    double* damping_used = nullptr);

AffineTransform add_update(const AffineTransform& a, const Vector6& delta);

/// Largest corner displacement (px) produced by a parameter update on a
/// width x height grid.
double corner_displacement(const Vector6& delta, int width, int height);

struct IterateRecord {
  int level = 0;
  /// Transform before the update, in the coordinates of `level`.
  AffineTransform transform;
  double robust_error = 0.0;
  double damping = 0.0;
  /// The update used IRLS curvature in place of the exact Newton Hessian.
  bool irls_fallback = false;
};

struct MotionEstimate {
  /// Maps full-resolution pixels of the reference grid into the input image.
  AffineTransform transform;
  /// Index k holds the Newton iterations spent at pyramid level k (0 = full resolution).
  std::vector<int> iterations_per_level;
  double final_robust_error = 0.0;
  double final_sad = 0.0;
  /// Whether the full-resolution level met the corner tolerance.
  bool converged = false;
  /// Every iterate, coarsest level first.
  std::vector<IterateRecord> trace;

  int total_iterations() const;
};

/// Estimates A such that warp_image(input, A) matches `reference`,
/// coarse-to-fine. Starts from `initial` (identity when absent), whose
/// translation is scaled down to the coarsest level.
MotionEstimate estimate_motion(const Image& reference, const Image& input,
                               const SolverConfig& config,
                               const std::optional<AffineTransform>& initial = std::nullopt);

/// {"a":[...], "iters":[...], "error":..., "sad":..., "converged":...}
std::string to_json(const MotionEstimate& estimate);

}  // namespace gme
