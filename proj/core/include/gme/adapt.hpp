#pragma once

#include <functional>
#include <optional>

#include "gme/image.hpp"
#include "gme/solver.hpp"

namespace gme {

struct AdaptConfig {
  double nu_min = 10.0;
  double nu_max = 40.0;
  /// Search stops once the endpoint scores differ by at most
  /// t_err * min(score_min, score_max).
  double t_err = 0.01;
  /// Maximum number of midpoint replacements.
  int t_cnt = 5;
  /// Relative change in SAD between consecutive pairs that re-runs the search.
  double retrigger_ratio = 0.25;
};

void validate(const AdaptConfig& config);

struct AdaptState {
  double current_nu = 20.0;
  double last_sad = 0.0;
  int frames_since_adapt = 0;
};

struct NuSearchResult {
  double nu = 0.0;
  double score = 0.0;
  /// Number of score evaluations: 2 + midpoint replacements.
  int evaluations = 0;
  double initial_score_min = 0.0;  ///< score at nu_min
  double initial_score_max = 0.0;  ///< score at nu_max
};

/// Binary-search-like bracket shrink over nu in [nu_min, nu_max]. Scores the
/// two endpoints, then while they differ by more than the tolerance and the
/// budget allows, replaces the worse endpoint by the midpoint and scores it.
/// Returns the endpoint with the lower score; ties go to the smaller nu.
/// `score` may return +inf to mark a failed candidate. Throws AdaptationError
/// if both initial endpoints score +inf.
NuSearchResult search_nu(const std::function<double(double)>& score, const AdaptConfig& config);

struct AdaptResult {
  NuSearchResult search;
  /// Registration obtained with the returned nu.
  MotionEstimate estimate;
};

/// Runs search_nu where each candidate nu is scored by the extended L0 count
/// (c = 2, contribution mask) of the registration estimate_motion produces
/// with StudentT(tau = nu, nu). Solver failures score +inf.
AdaptResult adapt_nu(const Image& reference, const Image& input,
                     const SolverConfig& solver_config, const AdaptConfig& config);

/// True when the SAD moved by more than retrigger_ratio relative to the
/// previous pair (or rose from exactly zero).
bool should_retrigger(const AdaptState& state, double current_sad, const AdaptConfig& config);

}  // namespace gme
