#include "gme/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>

#include "gme/error.hpp"
#include "json.hpp"

namespace gme {

void validate(const SolverConfig& config, int width, int height) {
  validate(config.cost);
  if (config.levels < 1) throw ArgumentError("solver: levels must be >= 1");
  if (config.max_iters_per_level < 1) throw ArgumentError("solver: max_iters_per_level must be >= 1");
  if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0)) {
    throw ArgumentError("solver: learning rate must lie in (0, 1]");
  }
  if (!(config.corner_tol > 0.0)) throw ArgumentError("solver: corner_tol must be > 0");
  if (!(config.damping_floor > 0.0) || !std::isfinite(config.damping_floor)) {
    throw ArgumentError("solver: damping_floor must be > 0");
  }
  if (config.mask_margin < 0 || 2 * config.mask_margin >= std::min(width, height)) {
    throw ArgumentError("solver: mask_margin must be >= 0 and below half the image size");
  }
}

ContributionMask::ContributionMask(int width, int height, int margin)
    : width_(width), height_(height), margin_(margin) {
  if (margin < 0 || 2 * margin >= std::min(width, height)) {
    throw ArgumentError("contribution mask: margin " + std::to_string(margin) +
                        " leaves no interior in " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
}

ContributionMask contribution_mask(int width, int height, int margin) {
  return ContributionMask(width, height, margin);
}

int margin_at_level(int margin, int level) {
  const int scale = 1 << level;
  return (margin + scale - 1) / scale;
}

SteepestDescentField steepest_descent(const GradientField& gradient) {
  return {gradient.width, gradient.height, gradient.gx, gradient.gy};
}

SteepestDescentField steepest_descent_warped(const Image& source, const AffineTransform& a) {
  const int w = source.width();
  const int h = source.height();
  SteepestDescentField sd{w, h, std::vector<double>(source.size(), 0.0),
                          std::vector<double>(source.size(), 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p = apply(a, {static_cast<double>(x), static_cast<double>(y)});
      if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1 && p.y <= h - 1)) continue;
      const int x0 = std::min(static_cast<int>(p.x), w - 2);
      const int y0 = std::min(static_cast<int>(p.y), h - 2);
      const double fx = p.x - x0;
      const double fy = p.y - y0;
      const double i00 = source.at(x0, y0);
      const double i10 = source.at(x0 + 1, y0);
      const double i01 = source.at(x0, y0 + 1);
      const double i11 = source.at(x0 + 1, y0 + 1);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      sd.gx[i] = (1.0 - fy) * (i10 - i00) + fy * (i11 - i01);
      sd.gy[i] = (1.0 - fx) * (i01 - i00) + fx * (i11 - i10);
    }
  }
  return sd;
}

namespace {

constexpr double kL1ResidualFloor = 0.25;

void check_shapes(const Image& reference, const WarpedImage& warped,
                  const ContributionMask& mask) {
  if (warped.width != reference.width() || warped.height != reference.height() ||
      mask.width() != reference.width() || mask.height() != reference.height()) {
    throw ArgumentError("reference, warped image and mask dimensions differ");
  }
}

[[noreturn]] void throw_degenerate(const Image& reference) {
  throw DegenerateOverlapError("no pixel lies in both the contribution mask and the warp overlap (" +
                               std::to_string(reference.width()) + "x" +
                               std::to_string(reference.height()) + ")");
}

}  // namespace

double robust_error(const Image& reference, const WarpedImage& warped,
                    const ContributionMask& mask, const CostFunction& f) {
  check_shapes(reference, warped, mask);
  const double offset = rho_offset(f);
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < reference.height(); ++y) {
    for (int x = 0; x < reference.width(); ++x) {
      if (!mask(x, y) || !warped.is_valid(x, y)) continue;
      sum += rho_shape(f, reference.at(x, y) - warped.at(x, y));
      ++n;
    }
  }
  if (n == 0) throw_degenerate(reference);
  return sum + static_cast<double>(n) * offset;
}

GradientHessian gradient_and_hessian(const Image& reference, const WarpedImage& warped,
                                     const SteepestDescentField& sd,
                                     const ContributionMask& mask, const CostFunction& f,
                                     HessianMode mode) {
  check_shapes(reference, warped, mask);
  if (sd.width != reference.width() || sd.height != reference.height()) {
    throw ArgumentError("steepest-descent field dimensions differ from the reference");
  }
  const double offset = rho_offset(f);
  const bool is_l1 = std::holds_alternative<L1>(f);
  const bool use_weights = mode == HessianMode::IRLS || is_l1;

  GradientHessian out;
  for (int y = 0; y < reference.height(); ++y) {
    for (int x = 0; x < reference.width(); ++x) {
      if (!mask(x, y) || !warped.is_valid(x, y)) continue;
      const double e = reference.at(x, y) - warped.at(x, y);
      const Vector6 theta = sd.at(x, y);
      out.g.noalias() -= psi(f, e) * theta;
      double c = use_weights ? weight(f, e) : psi_prime(f, e);
      // 1/|e| explodes on the near-zero residuals of quantized frames and
      // stalls the iteration; floor |e| at a fraction of a gray level.
      if (is_l1) c = std::min(c, 1.0 / kL1ResidualFloor);
      out.H.selfadjointView<Eigen::Upper>().rankUpdate(theta, c);
      out.robust_error += rho_shape(f, e);
      out.sad += std::abs(e);
      ++out.contributing;
    }
  }
  if (out.contributing == 0) throw_degenerate(reference);
  out.H.triangularView<Eigen::StrictlyLower>() = out.H.transpose();
  out.robust_error += static_cast<double>(out.contributing) * offset;
  return out;
}

Vector6 newton_step(const Vector6& g, const Matrix6& H, double lambda, double mu,
                    double* damping_used) {
  if (!g.allFinite() || !H.allFinite()) {
    throw IllConditionedError("newton step: non-finite gradient or Hessian");
  }
  if (g.isZero(0.0)) {
    if (damping_used) *damping_used = 0.0;
    return Vector6::Zero();
  }
  const double ceiling = 1e12 * mu;
  double d = 0.0;
  while (true) {
    Eigen::LLT<Matrix6> llt(H + d * Matrix6::Identity());
    if (llt.info() == Eigen::Success) {
      const Vector6 s = llt.solve(g);
      if (s.allFinite()) {
        if (damping_used) *damping_used = d;
        return -lambda * s;
      }
    }
    d = d == 0.0 ? mu : d * 10.0;
    // Relative slack keeps the 1e12*mu rung itself reachable despite round-off.
    if (d > ceiling * (1.0 + 1e-9)) {
      throw IllConditionedError("newton step: damping exceeded 1e12 * mu without a positive "
                                "definite system");
    }
  }
}

AffineTransform add_update(const AffineTransform& a, const Vector6& delta) {
  return {a.a_xx + delta[0], a.a_xy + delta[1], a.a_x + delta[2],
          a.a_yx + delta[3], a.a_yy + delta[4], a.a_y + delta[5]};
}

double corner_displacement(const Vector6& delta, int width, int height) {
  const double xs[2] = {0.0, static_cast<double>(width - 1)};
  const double ys[2] = {0.0, static_cast<double>(height - 1)};
  double worst = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      const double dx = delta[0] * x + delta[1] * y + delta[2];
      const double dy = delta[3] * x + delta[4] * y + delta[5];
      worst = std::max(worst, std::hypot(dx, dy));
    }
  }
  return worst;
}

int MotionEstimate::total_iterations() const {
  return std::accumulate(iterations_per_level.begin(), iterations_per_level.end(), 0);
}

MotionEstimate estimate_motion(const Image& reference, const Image& input,
                               const SolverConfig& config,
                               const std::optional<AffineTransform>& initial) {
  if (reference.width() != input.width() || reference.height() != input.height()) {
    throw ArgumentError("reference and input images differ in size");
  }
  validate(config, reference.width(), reference.height());

  const auto ref_pyramid = build_pyramid(reference, config.levels);
  const auto in_pyramid = build_pyramid(input, config.levels);
  const int levels = static_cast<int>(ref_pyramid.size());

  MotionEstimate result;
  result.iterations_per_level.assign(static_cast<std::size_t>(levels), 0);

  AffineTransform a = initial.value_or(AffineTransform::identity());
  if (!a.is_finite()) throw ArgumentError("initial transform has non-finite coefficients");
  const double offset = rho_offset(config.cost);
  const double coarse_scale = static_cast<double>(1 << (levels - 1));
  a.a_x /= coarse_scale;
  a.a_y /= coarse_scale;

  for (int level = levels - 1; level >= 0; --level) {
    const Image& ref = ref_pyramid[static_cast<std::size_t>(level)];
    const Image& in = in_pyramid[static_cast<std::size_t>(level)];
    const ContributionMask mask(ref.width(), ref.height(),
                                margin_at_level(config.mask_margin, level));
    SteepestDescentField sd;
    if (config.reuse_reference_gradient) sd = steepest_descent(gradient(ref));

    bool level_converged = false;
    int& iters = result.iterations_per_level[static_cast<std::size_t>(level)];
    // Last accepted Newton step's starting point and its mean per-pixel cost.
    std::optional<std::pair<AffineTransform, double>> newton_origin;
    while (iters < config.max_iters_per_level) {
      const auto evaluate = [&](const AffineTransform& at, HessianMode mode) {
        const WarpedImage warped = warp_image(in, at);
        if (!config.reuse_reference_gradient) sd = steepest_descent_warped(in, at);
        return gradient_and_hessian(ref, warped, sd, mask, config.cost, mode);
      };
      GradientHessian gh = evaluate(a, config.hessian_mode);
      const double mean_cost =
          (gh.robust_error - static_cast<double>(gh.contributing) * offset) /
          static_cast<double>(gh.contributing);

      bool fallback = false;
      if (config.hessian_mode == HessianMode::NewtonDamped) {
        if (newton_origin && mean_cost > newton_origin->second) {
          // The previous Newton step went uphill: redo it from where it started.
          a = newton_origin->first;
          gh = evaluate(a, HessianMode::IRLS);
          fallback = true;
        } else if (Eigen::LLT<Matrix6>(gh.H).info() != Eigen::Success) {
          gh.H = evaluate(a, HessianMode::IRLS).H;
          fallback = true;
        }
      }
      newton_origin.reset();
      if (config.hessian_mode == HessianMode::NewtonDamped && !fallback) {
        newton_origin.emplace(a, mean_cost);
      }

      double damping = 0.0;
      const Vector6 delta =
          newton_step(gh.g, gh.H, config.learning_rate, config.damping_floor, &damping);
      result.trace.push_back({level, a, gh.robust_error, damping, fallback});
      a = add_update(a, delta);
      ++iters;
      if (!a.is_finite()) throw IllConditionedError("solver diverged to a non-finite transform");
      if (corner_displacement(delta, ref.width(), ref.height()) < config.corner_tol) {
        level_converged = true;
        break;
      }
    }
    if (level == 0) result.converged = level_converged;
    if (level > 0) {
      a.a_x *= 2.0;
      a.a_y *= 2.0;
    }
  }

  result.transform = a;
  const WarpedImage warped = warp_image(input, a);
  const ContributionMask mask(reference.width(), reference.height(), config.mask_margin);
  result.final_robust_error = robust_error(reference, warped, mask, config.cost);
  double sad = 0.0;
  for (int y = 0; y < reference.height(); ++y) {
    for (int x = 0; x < reference.width(); ++x) {
      if (mask(x, y) && warped.is_valid(x, y)) sad += std::abs(reference.at(x, y) - warped.at(x, y));
    }
  }
  result.final_sad = sad;
  return result;
}

std::string to_json(const MotionEstimate& estimate) {
  nlohmann::json j;
  j["a"] = estimate.transform.params();
  j["iters"] = estimate.iterations_per_level;
  j["error"] = estimate.final_robust_error;
  j["sad"] = estimate.final_sad;
  j["converged"] = estimate.converged;
  return j.dump();
}

}  // namespace gme
