#include "gme/cli.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "gme/adapt.hpp"
#include "gme/error.hpp"
#include "gme/evalbench.hpp"
#include "gme/solver.hpp"
#include "gme/synthgen.hpp"
#include "json.hpp"

namespace gme::cli {
namespace {

namespace fs = std::filesystem;

// Flags are gathered as plain values and only turned into module configs
// after parsing, so range errors report as usage errors.
struct SolverFlags {
  int levels = 3;
  int max_iters = 50;
  double lambda = 1.0;
  double corner_tol = 0.01;
  int mask_margin = 15;
  std::string hessian = "newton";
  bool no_gradient_reuse = false;

  void attach(CLI::App* app) {
    app->add_option("--levels", levels, "Pyramid levels")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Newton iterations per level")->capture_default_str();
    app->add_option("--lambda", lambda, "Learning rate in (0, 1]")->capture_default_str();
    app->add_option("--corner-tol", corner_tol, "Corner displacement stop (px)")->capture_default_str();
    app->add_option("--mask-margin", mask_margin, "Border excluded from error sums (px)")
        ->capture_default_str();
    app->add_option("--hessian", hessian, "newton | irls")
        ->check(CLI::IsMember({"newton", "irls"}))
        ->capture_default_str();
    app->add_flag("--no-gradient-reuse", no_gradient_reuse,
                  "Recompute the image gradient from the warped input each iteration");
  }

  SolverConfig config() const {
    SolverConfig c;
    c.levels = levels;
    c.max_iters_per_level = max_iters;
    c.learning_rate = lambda;
    c.corner_tol = corner_tol;
    c.mask_margin = mask_margin;
    c.hessian_mode = hessian == "irls" ? HessianMode::IRLS : HessianMode::NewtonDamped;
    c.reuse_reference_gradient = !no_gradient_reuse;
    return c;
  }
};

struct AdaptFlags {
  AdaptConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--nu-min", cfg.nu_min, "Lower nu bound")->capture_default_str();
    app->add_option("--nu-max", cfg.nu_max, "Upper nu bound")->capture_default_str();
    app->add_option("--t-err", cfg.t_err, "Relative score tolerance")->capture_default_str();
    app->add_option("--t-cnt", cfg.t_cnt, "Midpoint budget")->capture_default_str();
    app->add_option("--retrigger", cfg.retrigger_ratio, "Relative SAD change that re-adapts")
        ->capture_default_str();
  }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Expands a pattern whose last path component may contain shell wildcards.
std::vector<std::string> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  const std::string name = p.filename().string();
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error("cannot read directory " + dir.string());
  std::vector<std::string> matches;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    if (fnmatch(name.c_str(), entry.path().filename().c_str(), 0) == 0) {
      matches.push_back(entry.path().string());
    }
  }
  if (ec) throw Error("cannot read directory " + dir.string() + ": " + ec.message());
  std::sort(matches.begin(), matches.end());
  return matches;
}

SolverConfig checked(const SolverFlags& flags, const std::string& cost) {
  SolverConfig c = flags.config();
  try {
    c.cost = parse_cost(cost);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (c.levels < 1 || c.max_iters_per_level < 1 || !(c.learning_rate > 0 && c.learning_rate <= 1) ||
      !(c.corner_tol > 0) || c.mask_margin < 0) {
    throw UsageError("solver flags out of range");
  }
  return c;
}

void checked(const AdaptConfig& cfg) {
  try {
    validate(cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_register(const std::string& ref_path, const std::string& in_path, const std::string& cost,
                 const SolverFlags& flags, const std::string& out_path) {
  const SolverConfig cfg = checked(flags, cost);
  const Image ref = read_pgm_file(ref_path);
  const Image in = read_pgm_file(in_path);
  write_text(out_path, to_json(estimate_motion(ref, in, cfg)) + "\n");
  return kExitOk;
}

int cmd_adapt(const std::string& ref_path, const std::string& in_path, const SolverFlags& flags,
              const AdaptConfig& adapt, const std::string& out_path) {
  const SolverConfig cfg = checked(flags, "stu");
  checked(adapt);
  const Image ref = read_pgm_file(ref_path);
  const Image in = read_pgm_file(in_path);
  const AdaptResult r = adapt_nu(ref, in, cfg, adapt);
  nlohmann::json j;
  j["nu"] = r.search.nu;
  j["evaluations"] = r.search.evaluations;
  j["score"] = r.search.score;
  j["estimate"] = nlohmann::json::parse(to_json(r.estimate));
  write_text(out_path, j.dump() + "\n");
  return kExitOk;
}

BenchCost checked_bench_cost(const std::string& text) {
  try {
    return parse_bench_cost(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_sequence(const std::string& pattern, int divisor, const std::string& cost,
                 const std::string& label, const SolverFlags& flags, const AdaptConfig& adapt,
                 const std::string& out_path) {
  const BenchCost bench_cost = checked_bench_cost(cost);
  const SolverConfig cfg = checked(flags, "l2");
  checked(adapt);
  if (divisor < 1) throw UsageError("--divisor must be >= 1");

  const auto paths = expand_glob(pattern);
  if (paths.size() < static_cast<std::size_t>(divisor) + 1) {
    throw Error("pattern '" + pattern + "' matched " + std::to_string(paths.size()) +
                " files, need at least " + std::to_string(divisor + 1));
  }
  LabeledSequence seq;
  seq.label = label.empty() ? fs::path(pattern).parent_path().filename().string() : label;
  if (seq.label.empty()) seq.label = "sequence";
  for (const auto& p : paths) seq.frames.push_back(read_pgm_file(p));

  const EvalReport report = run_benchmark({seq}, {divisor}, {bench_cost}, cfg, adapt);
  write_text(out_path, emit_csv(report));
  return kExitOk;
}

int env_threads() {
  const char* v = std::getenv("GME_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

int cmd_bench(const std::vector<std::string>& scenes, const std::vector<int>& divisors,
              const std::vector<std::string>& costs, const SolverFlags& flags,
              const AdaptConfig& adapt, const std::string& out_path, const std::string& tables_path,
              const std::string& json_path, std::ostream& out) {
  std::vector<BenchCost> bench_costs;
  for (const auto& c : costs) bench_costs.push_back(checked_bench_cost(c));
  const SolverConfig cfg = checked(flags, "l2");
  checked(adapt);
  for (const int d : divisors) {
    if (d < 1) throw UsageError("--divisor must be >= 1");
  }

  std::vector<LabeledSequence> sequences;
  for (const auto& path : scenes) {
    const SceneSpec spec = scene_from_json(read_text(path));
    sequences.push_back({fs::path(path).stem().string(), generate(spec).frames});
  }
  BenchOptions options;
  options.threads = env_threads();
  const EvalReport report = run_benchmark(sequences, divisors, bench_costs, cfg, adapt, options);
  write_text(out_path, emit_csv(report));
  const std::string tables = format_tables(report);
  if (!tables_path.empty()) {
    write_text(tables_path, tables);
  } else {
    out << tables;
  }
  if (!json_path.empty()) write_text(json_path, to_json(report) + "\n");
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  const SceneSpec spec = scene_from_json(read_text(spec_path));
  export_scene(generate(spec), out_dir);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust affine global motion estimation toolkit", "gme"};
  app.require_subcommand(1);

  SolverFlags solver;
  AdaptFlags adapt;
  std::string ref_path, in_path, cost, out_path, pattern, label, spec_path, tables_path, json_path;
  int divisor = 1;
  std::vector<std::string> scenes, costs;
  std::vector<int> divisors;

  auto* reg = app.add_subcommand("register", "Estimate the affine motion between two PGM frames");
  reg->add_option("ref", ref_path, "Reference PGM")->required();
  reg->add_option("input", in_path, "Input PGM (warped onto the reference)")->required();
  reg->add_option("--cost", cost, "Cost function, e.g. l2 or stu:tau=20,nu=20")->required();
  reg->add_option("--out", out_path, "Output JSON")->required();
  solver.attach(reg);

  auto* seq = app.add_subcommand("sequence", "Register frame pairs of a PGM sequence");
  seq->add_option("pattern", pattern, "Frame glob, e.g. \"frames/*.pgm\"")->required();
  seq->add_option("--divisor", divisor, "Frame step between registered pairs")->capture_default_str();
  seq->add_option("--cost", cost, "Cost function or stu-adaptive")->required();
  seq->add_option("--label", label, "Sequence label (default: directory name)");
  seq->add_option("--out", out_path, "Output CSV")->required();
  solver.attach(seq);
  adapt.attach(seq);

  auto* bench = app.add_subcommand("bench", "Run the cost-function matrix over synthetic scenes");
  bench->add_option("scenes", scenes, "Scene JSON files")->required();
  bench->add_option("--divisor", divisors, "Frame step (repeatable)")->required();
  bench->add_option("--cost", costs, "Cost function or stu-adaptive (repeatable)")->required();
  bench->add_option("--out", out_path, "Output CSV")->required();
  bench->add_option("--tables", tables_path, "Write the text tables here instead of stdout");
  bench->add_option("--json", json_path, "Also write the report as JSON");
  solver.attach(bench);
  adapt.attach(bench);

  auto* synth = app.add_subcommand("synth", "Render a synthetic scene to numbered PGMs");
  synth->add_option("spec", spec_path, "Scene JSON")->required();
  synth->add_option("--out", out_path, "Output directory")->required();

  auto* adp = app.add_subcommand("adapt", "Search the Student-t nu for one frame pair");
  adp->add_option("ref", ref_path, "Reference PGM")->required();
  adp->add_option("input", in_path, "Input PGM")->required();
  adp->add_option("--out", out_path, "Output JSON")->required();
  solver.attach(adp);
  adapt.attach(adp);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (reg->parsed()) return cmd_register(ref_path, in_path, cost, solver, out_path);
    if (seq->parsed()) {
      return cmd_sequence(pattern, divisor, cost, label, solver, adapt.cfg, out_path);
    }
    if (bench->parsed()) {
      return cmd_bench(scenes, divisors, costs, solver, adapt.cfg, out_path, tables_path, json_path,
                       out);
    }
    if (synth->parsed()) return cmd_synth(spec_path, out_path);
    if (adp->parsed()) return cmd_adapt(ref_path, in_path, solver, adapt.cfg, out_path);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace gme::cli
