#include "gme/evalbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "gme/error.hpp"
#include "json.hpp"

namespace gme {

ExtendedL0 extended_l0(const Image& image, const WarpedImage& warped, double c,
                       const ContributionMask& mask) {
  if (warped.width != image.width() || warped.height != image.height() ||
      mask.width() != image.width() || mask.height() != image.height()) {
    throw ArgumentError("extended_l0: image, warped image and mask dimensions differ");
  }
  if (!(c >= 0.0)) throw ArgumentError("extended_l0: threshold must be >= 0");
  ExtendedL0 out;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!mask(x, y) || !warped.is_valid(x, y)) continue;
      ++out.contributing;
      if (std::abs(image.at(x, y) - warped.at(x, y)) > c) ++out.count;
    }
  }
  return out;
}

BenchCost parse_bench_cost(std::string_view text) {
  if (text == "stu-adaptive") return AdaptiveStudentT{};
  return parse_cost(text);
}

std::string label(const BenchCost& cost) {
  if (std::holds_alternative<AdaptiveStudentT>(cost)) return "stu-adaptive";
  return to_string(std::get<CostFunction>(cost));
}

namespace {

PairOutcome score_pair(const Image& reference, const Image& input, const MotionEstimate& est,
                       const ContributionMask& mask) {
  PairOutcome out;
  const WarpedImage warped = warp_image(input, est.transform);
  out.ok = true;
  out.extended_l0 =
      static_cast<double>(extended_l0(reference, warped, kExtendedL0Threshold, mask).count);
  out.iterations = est.total_iterations();
  out.transform = est.transform;
  return out;
}

}  // namespace

std::vector<PairOutcome> run_sequence(const std::vector<Image>& frames, int divisor,
                                      const BenchCost& cost, const SolverConfig& solver_config,
                                      const AdaptConfig& adapt_config) {
  if (divisor < 1) throw ArgumentError("divisor must be >= 1");
  if (frames.size() < static_cast<std::size_t>(divisor) + 1) {
    throw ArgumentError("sequence has " + std::to_string(frames.size()) +
                        " frames, need at least divisor + 1 = " + std::to_string(divisor + 1));
  }
  const bool adaptive = std::holds_alternative<AdaptiveStudentT>(cost);
  if (adaptive) validate(adapt_config);

  std::vector<PairOutcome> outcomes;
  AdaptState state;
  bool have_state = false;
  const auto step = static_cast<std::size_t>(divisor);

  for (std::size_t t = 0; t + step < frames.size(); t += step) {
    const Image& reference = frames[t];
    const Image& input = frames[t + step];
    const ContributionMask mask(reference.width(), reference.height(), solver_config.mask_margin);
    try {
      if (!adaptive) {
        SolverConfig cfg = solver_config;
        cfg.cost = std::get<CostFunction>(cost);
        outcomes.push_back(score_pair(reference, input, estimate_motion(reference, input, cfg), mask));
        continue;
      }

      std::optional<MotionEstimate> used;
      bool adapted = false;
      if (have_state) {
        SolverConfig cfg = solver_config;
        cfg.cost = StudentT{state.current_nu, state.current_nu};
        try {
          used = estimate_motion(reference, input, cfg);
        } catch (const Error&) {
          // A failed fixed-nu run falls through to a fresh search.
        }
        if (used && !should_retrigger(state, used->final_sad, adapt_config)) {
          ++state.frames_since_adapt;
        } else {
          used.reset();
        }
      }
      if (!used) {
        AdaptResult ar = adapt_nu(reference, input, solver_config, adapt_config);
        state.current_nu = ar.search.nu;
        state.frames_since_adapt = 0;
        have_state = true;
        adapted = true;
        used = std::move(ar.estimate);
      }
      state.last_sad = used->final_sad;
      PairOutcome out = score_pair(reference, input, *used, mask);
      out.nu = state.current_nu;
      out.adapted = adapted;
      outcomes.push_back(std::move(out));
    } catch (const Error& e) {
      PairOutcome failed;
      failed.error = e.what();
      outcomes.push_back(std::move(failed));
    }
  }
  return outcomes;
}

ReportRow summarise(const std::vector<PairOutcome>& outcomes) {
  ReportRow row;
  row.frames = static_cast<int>(outcomes.size());
  double l0 = 0.0;
  double iters = 0.0;
  int ok = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++row.failures;
      continue;
    }
    l0 += o.extended_l0;
    iters += o.iterations;
    ++ok;
  }
  if (ok == 0) {
    row.mean_extended_l0 = std::numeric_limits<double>::quiet_NaN();
    row.mean_iterations = std::numeric_limits<double>::quiet_NaN();
  } else {
    row.mean_extended_l0 = l0 / ok;
    row.mean_iterations = iters / ok;
  }
  return row;
}

EvalReport run_benchmark(const std::vector<LabeledSequence>& sequences,
                         const std::vector<int>& divisors, const std::vector<BenchCost>& costs,
                         const SolverConfig& solver_config, const AdaptConfig& adapt_config,
                         const BenchOptions& options) {
  struct Cell {
    const LabeledSequence* sequence;
    int divisor;
    const BenchCost* cost;
  };
  std::vector<Cell> cells;
  for (const auto& seq : sequences) {
    for (const int d : divisors) {
      if (d < 1 || seq.frames.size() < static_cast<std::size_t>(d) + 1) {
        throw ArgumentError("sequence '" + seq.label + "' is too short for divisor " +
                            std::to_string(d));
      }
      for (const auto& c : costs) cells.push_back({&seq, d, &c});
    }
  }

  std::vector<ReportRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      rows[i] = summarise(
          run_sequence(cell.sequence->frames, cell.divisor, *cell.cost, solver_config, adapt_config));
    }
  };
  const int threads = std::clamp(options.threads, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  EvalReport report;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    report.rows[{cells[i].sequence->label, cells[i].divisor, label(*cells[i].cost)}] = rows[i];
  }
  return report;
}

std::string format_sig4(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0.000";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", value);
  const std::string sci(buf);
  const auto epos = sci.find('e');
  const int exponent = std::atoi(sci.c_str() + epos + 1);
  if (exponent < -4 || exponent >= 4) return sci.substr(0, epos) + "e" + std::to_string(exponent);
  std::snprintf(buf, sizeof buf, "%.*f", 3 - exponent, value);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_csv(const EvalReport& report) {
  std::string out = "sequence,divisor,cost,frames,failures,mean_extended_l0,mean_iterations\n";
  for (const auto& [key, row] : report.rows) {
    out += csv_field(key.sequence) + "," + std::to_string(key.divisor) + "," +
           csv_field(key.cost) + "," + std::to_string(row.frames) + "," +
           std::to_string(row.failures) + "," + format_sig4(row.mean_extended_l0) + "," +
           format_sig4(row.mean_iterations) + "\n";
  }
  return out;
}

std::string to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, row] : report.rows) {
    nlohmann::json r;
    r["sequence"] = key.sequence;
    r["divisor"] = key.divisor;
    r["cost"] = key.cost;
    r["frames"] = row.frames;
    r["failures"] = row.failures;
    // NaN has no JSON spelling; an all-failed row reports null means.
    r["mean_extended_l0"] = std::isfinite(row.mean_extended_l0) ? nlohmann::json(row.mean_extended_l0)
                                                                 : nlohmann::json(nullptr);
    r["mean_iterations"] = std::isfinite(row.mean_iterations) ? nlohmann::json(row.mean_iterations)
                                                               : nlohmann::json(nullptr);
    rows.push_back(std::move(r));
  }
  nlohmann::json j;
  j["rows"] = std::move(rows);
  return j.dump(2);
}

std::string format_tables(const EvalReport& report) {
  std::vector<std::string> costs;
  std::vector<std::pair<std::string, int>> datasets;
  for (const auto& [key, row] : report.rows) {
    if (std::find(costs.begin(), costs.end(), key.cost) == costs.end()) costs.push_back(key.cost);
    const std::pair<std::string, int> ds{key.sequence, key.divisor};
    if (std::find(datasets.begin(), datasets.end(), ds) == datasets.end()) datasets.push_back(ds);
  }

  const auto table = [&](const std::string& title, auto value_of, int precision) {
    std::size_t name_width = 7;
    std::vector<std::string> names;
    for (const auto& [seq, d] : datasets) {
      names.push_back(seq + "(/" + std::to_string(d) + ")");
      name_width = std::max(name_width, names.back().size());
    }
    std::ostringstream os;
    os << title << "\n" << std::left << std::setw(static_cast<int>(name_width)) << "Dataset";
    for (const auto& c : costs) os << " | " << c;
    os << "\n";
    for (std::size_t r = 0; r < datasets.size(); ++r) {
      os << std::left << std::setw(static_cast<int>(name_width)) << names[r];
      for (const auto& c : costs) {
        const auto it = report.rows.find({datasets[r].first, datasets[r].second, c});
        os << " | " << std::right << std::setw(static_cast<int>(c.size()));
        if (it == report.rows.end() || !std::isfinite(value_of(it->second))) {
          os << "-";
        } else {
          std::ostringstream v;
          v << std::fixed << std::setprecision(precision) << value_of(it->second);
          os << v.str();
        }
        os << std::left;
      }
      os << "\n";
    }
    return os.str();
  };

  return table("Mean extended L0 errors [x10^4]",
               [](const ReportRow& r) { return r.mean_extended_l0 / 1e4; }, 2) +
         "\n" +
         table("Mean iterations (summed over pyramid levels)",
               [](const ReportRow& r) { return r.mean_iterations; }, 1);
}

}  // namespace gme
