#include "gme/adapt.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "gme/error.hpp"
#include "gme/evalbench.hpp"

namespace gme {

void validate(const AdaptConfig& config) {
  if (!(config.nu_min > 0.0 && config.nu_min < config.nu_max) || !std::isfinite(config.nu_max)) {
    throw ArgumentError("adapt: need 0 < nu_min < nu_max");
  }
  if (config.t_cnt < 1) throw ArgumentError("adapt: t_cnt must be >= 1");
  if (!(config.t_err > 0.0)) throw ArgumentError("adapt: t_err must be > 0");
  if (!(config.retrigger_ratio > 0.0)) throw ArgumentError("adapt: retrigger_ratio must be > 0");
}

NuSearchResult search_nu(const std::function<double(double)>& score, const AdaptConfig& config) {
  validate(config);
  double lo = config.nu_min;
  double hi = config.nu_max;
  double score_lo = score(lo);
  double score_hi = score(hi);
  if (std::isinf(score_lo) && std::isinf(score_hi)) {
    throw AdaptationError("adapt: estimation failed at both nu_min and nu_max");
  }

  NuSearchResult result;
  result.initial_score_min = score_lo;
  result.initial_score_max = score_hi;
  int cnt = 0;
  // Stops on convergence OR budget exhaustion. |inf - x| is inf, so a failed
  // endpoint is always replaced while budget remains.
  while (std::abs(score_hi - score_lo) > config.t_err * std::min(score_lo, score_hi) &&
         cnt < config.t_cnt) {
    const double mid = 0.5 * (lo + hi);
    if (score_hi < score_lo) {
      lo = mid;
      score_lo = score(lo);
    } else {
      hi = mid;
      score_hi = score(hi);
    }
    ++cnt;
  }

  result.evaluations = 2 + cnt;
  if (score_hi < score_lo) {
    result.nu = hi;
    result.score = score_hi;
  } else {
    result.nu = lo;
    result.score = score_lo;
  }
  return result;
}

AdaptResult adapt_nu(const Image& reference, const Image& input,
                     const SolverConfig& solver_config, const AdaptConfig& config) {
  validate(config);
  std::map<double, MotionEstimate> estimates;
  const ContributionMask mask(reference.width(), reference.height(), solver_config.mask_margin);

  const auto score = [&](double nu) {
    SolverConfig cfg = solver_config;
    cfg.cost = StudentT{nu, nu};
    try {
      MotionEstimate est = estimate_motion(reference, input, cfg);
      const WarpedImage warped = warp_image(input, est.transform);
      const ExtendedL0 l0 = extended_l0(reference, warped, kExtendedL0Threshold, mask);
      estimates.insert_or_assign(nu, std::move(est));
      return static_cast<double>(l0.count);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  AdaptResult result;
  result.search = search_nu(score, config);
  result.estimate = estimates.at(result.search.nu);
  return result;
}

bool should_retrigger(const AdaptState& state, double current_sad, const AdaptConfig& config) {
  if (state.last_sad == 0.0) return current_sad > 0.0;
  return std::abs(current_sad - state.last_sad) / std::max(state.last_sad, 1.0) >
         config.retrigger_ratio;
}

}  // namespace gme
