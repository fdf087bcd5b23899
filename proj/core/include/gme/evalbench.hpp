#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "gme/adapt.hpp"
#include "gme/affine.hpp"
#include "gme/image.hpp"
#include "gme/robust_cost.hpp"
#include "gme/solver.hpp"

namespace gme {

/// Threshold used by the benchmark when counting mismatched pixels.
inline constexpr double kExtendedL0Threshold = 2.0;

struct ExtendedL0 {
  /// Pixels inside mask and overlap whose absolute difference exceeds c.
  std::size_t count = 0;
  /// Pixels inside mask and overlap.
  std::size_t contributing = 0;
};

/// Counts pixels where the mask holds, J is valid and |I - J| > c.
ExtendedL0 extended_l0(const Image& image, const WarpedImage& warped, double c,
                       const ContributionMask& mask);

/// Marker for the adaptive Student-t variant ("stu-adaptive").
struct AdaptiveStudentT {};

using BenchCost = std::variant<CostFunction, AdaptiveStudentT>;

/// Accepts "stu-adaptive" plus everything parse_cost accepts.
BenchCost parse_bench_cost(std::string_view text);
std::string label(const BenchCost& cost);

struct LabeledSequence {
  std::string label;
  std::vector<Image> frames;
};

struct ReportKey {
  std::string sequence;
  int divisor = 1;
  std::string cost;

  friend auto operator<=>(const ReportKey&, const ReportKey&) = default;
};

struct ReportRow {
  double mean_extended_l0 = 0.0;
  /// Newton iterations per pair, summed over pyramid levels.
  double mean_iterations = 0.0;
  /// Frame pairs attempted.
  int frames = 0;
  int failures = 0;
};

struct EvalReport {
  std::map<ReportKey, ReportRow> rows;
};

struct PairOutcome {
  bool ok = false;
  double extended_l0 = 0.0;
  int iterations = 0;
  double nu = 0.0;       ///< nu used (adaptive runs only)
  bool adapted = false;  ///< adaptive runs: the search ran on this pair
  AffineTransform transform;
  std::string error;
};

/// Registers the pairs (t, t + divisor) for t = 0, divisor, 2*divisor, ...
/// and returns one outcome per pair. The later frame is warped toward the
/// earlier one.
std::vector<PairOutcome> run_sequence(const std::vector<Image>& frames, int divisor,
                                      const BenchCost& cost, const SolverConfig& solver_config,
                                      const AdaptConfig& adapt_config);

/// Summarises pair outcomes into a report row (means over successful pairs).
ReportRow summarise(const std::vector<PairOutcome>& outcomes);

struct BenchOptions {
  /// Worker threads used across (sequence, divisor, cost) cells; 1 = serial.
  int threads = 1;
};

/// Runs every (sequence, divisor, cost) cell. Deterministic for fixed inputs
/// regardless of thread count.
EvalReport run_benchmark(const std::vector<LabeledSequence>& sequences,
                         const std::vector<int>& divisors, const std::vector<BenchCost>& costs,
                         const SolverConfig& solver_config, const AdaptConfig& adapt_config,
                         const BenchOptions& options = {});

/// Renders a value with 4 significant digits: fixed notation for decimal
/// exponents in [-4, 3], otherwise "d.ddde<exp>" (e.g. 5.625e4, 1.000e-5).
std::string format_sig4(double value);

/// Header "sequence,divisor,cost,frames,failures,mean_extended_l0,mean_iterations"
/// then one LF-terminated row per key in key order. Fields containing a
/// comma or quote are quoted per RFC 4180.
std::string emit_csv(const EvalReport& report);

std::string to_json(const EvalReport& report);

/// Two text tables, mean extended L0 (x10^4) and mean iterations, with one
/// row per "sequence(/divisor)" and one column per cost function.
std::string format_tables(const EvalReport& report);

}  // namespace gme
