// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "test_support.hpp"
#include "gme/adapt.hpp"
#include "gme/evalbench.hpp"
#include "gme/synthgen.hpp"

using namespace gme;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<CostFunction> every_variant() {
  return {L1{}, L2{}, Huber{20}, Tukey{20}, Cauchy{20}, StudentTClassic{10, 1}, StudentT{20, 20}};
}

std::vector<Image> sequence_with(SceneSpec spec, int frames, const AffineTransform& step) {
  spec.frames = frames;
  spec.camera_path = path_from_relative(std::vector<AffineTransform>(static_cast<std::size_t>(frames - 1), step));
  return generate(spec).frames;
}

// 1 -------------------------------------------------------------------------
Verdict tables_shape() {
  const SceneSpec base = outlier_pair_scene(100);
  const AffineTransform step = compose(invert(base.camera_path[1]), base.camera_path[0]);
  const std::vector<LabeledSequence> seqs = {{"synA", sequence_with(base, 5, step)},
                                             {"synB", sequence_with(clean_pair_scene(101), 5, step)}};
  const std::vector<BenchCost> costs = {parse_bench_cost("l2"), parse_bench_cost("huber:k=20"),
                                        parse_bench_cost("stu:tau=20,nu=20"), parse_bench_cost("stu-adaptive")};
  const EvalReport report = run_benchmark(seqs, {1, 2}, costs, SolverConfig{}, AdaptConfig{});
  const std::string t = format_tables(report);

  std::vector<std::string> lines;
  std::istringstream is(t);
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  // Two blocks of: title, header, 4 dataset rows; separated by one blank line.
  bool ok = lines.size() == 13 && lines[0].find("[x10^4]") != std::string::npos &&
            lines[7].find("iterations") != std::string::npos && lines[6].empty();
  for (const int block : {1, 8}) {
    if (!ok) break;
    for (const auto& c : costs) ok = ok && lines[static_cast<std::size_t>(block)].find(label(c)) != std::string::npos;
    for (int r = 1; r <= 4; ++r) {
      const std::string& row = lines[static_cast<std::size_t>(block + r)];
      ok = ok && static_cast<std::size_t>(std::count(row.begin(), row.end(), '|')) == costs.size();
    }
  }
  ok = ok && report.rows.size() == 16;
  // Cross-check one cell: the table shows mean_extended_l0 / 1e4 at 2 decimals.
  const ReportRow& cell = report.rows.at({"synA", 1, "l2"});
  ok = ok && t.find(fmt("%.2f", cell.mean_extended_l0 / 1e4)) != std::string::npos;
  return {ok, fmt("2 tables x 4 rows x %zu cost columns", costs.size())};
}

// 2 -------------------------------------------------------------------------
Verdict peak_law() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> tau_d(0.05, 60.0), nu_d(0.5, 120.0);
  double worst_x = 0.0, worst_v = 0.0;
  int n = 0;
  while (n < 100) {
    const StudentT s{tau_d(rng), nu_d(rng)};
    if (s.tau * s.nu <= 0.5) continue;
    ++n;
    // Bisection on the sign of the slope of psi over (0, 10 nu].
    double lo = 1e-9 * s.nu, hi = 10.0 * s.nu;
    for (int i = 0; i < 300 && hi - lo > 0.0; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (psi_prime(s, mid) > 0.0 ? lo : hi) = mid;
    }
    const double arg = 0.5 * (lo + hi);
    worst_x = std::max(worst_x, std::abs(arg - s.nu));
    worst_v = std::max(worst_v, std::abs(psi(s, s.nu) - s.tau));
  }
  return {worst_x <= 1e-9 && worst_v <= 1e-9,
          fmt("max |argmax - nu| = %.2e, max |psi(nu) - tau| = %.2e", worst_x, worst_v)};
}

// 3 -------------------------------------------------------------------------
Verdict limits() {
  const StudentT big{1e4, 1e4};
  double worst_l2 = 0.0;
  for (int i = -1000; i <= 1000; ++i) {
    const double x = i / 100.0;
    worst_l2 = std::max(worst_l2, std::abs(rho(big, x) - rho(big, 0.0) - x * x));
  }
  double worst_shape = 0.0;
  for (const double nu : {0.7, 5.0, 20.0, 63.0}) {
    const StudentT s{3.0, nu};
    const double ref = psi(s, 1.0) * (nu * nu + 1.0) / (2.0 * s.tau * nu);
    for (int x = 1; x <= 200; ++x)
      worst_shape = std::max(worst_shape, std::abs(psi(s, x) * (nu * nu + x * x) / (2.0 * s.tau * nu * x) - ref));
  }
  return {worst_l2 <= 1e-3 && worst_shape <= 1e-12,
          fmt("L2 limit gap %.2e, Cauchy-shape spread %.2e", worst_l2, worst_shape)};
}

// 4 -------------------------------------------------------------------------
bool near_kink(const CostFunction& f, double x) {
  if (std::holds_alternative<L1>(f)) return std::abs(x) <= 1e-3;
  if (const auto* h = std::get_if<Huber>(&f)) return std::abs(std::abs(x) - h->k) <= 1e-3;
  if (const auto* t = std::get_if<Tukey>(&f)) return std::abs(std::abs(x) - t->k) <= 1e-3;
  return false;
}

Verdict derivatives() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> res(-120.0, 120.0);
  double worst_scalar = 0.0;
  for (const auto& f : every_variant()) {
    for (int n = 0; n < 1000;) {
      const double x = res(rng);
      if (near_kink(f, x)) continue;
      ++n;
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); };
      worst_scalar = std::max(worst_scalar, rel((rho(f, x + h) - rho(f, x - h)) / (2 * h), psi(f, x)));
      worst_scalar = std::max(worst_scalar, rel((psi(f, x + h) - psi(f, x - h)) / (2 * h), psi_prime(f, x)));
    }
  }
  double worst_image = 0.0;
  int checked = 0;
  for (const auto& f : every_variant()) {
    for (int done = 0, tries = 0; done < 10 && tries < 1000; ++tries) {
      const Image a = testing::random_image(16, 16, rng);
      const Image b = testing::random_image(16, 16, rng);
      const auto c = testing::check_gradient(a, b, testing::random_small_transform(rng), ContributionMask(16, 16, 3), f);
      if (!c) continue;
      worst_image = std::max(worst_image, c->rel_error);
      ++done;
      ++checked;
    }
  }
  return {worst_scalar <= 1e-6 && worst_image <= 1e-4 && checked == 70,
          fmt("scalar worst %.2e over 7x1000, image-gradient worst %.2e over %d pairs", worst_scalar,
              worst_image, checked)};
}

// 5 -------------------------------------------------------------------------
Verdict tau_invariance() {
  const Scene scene = generate(clean_pair_scene(55));
  double worst = 0.0;
  bool damping_free = true, same_length = true;
  for (const auto mode : {HessianMode::NewtonDamped, HessianMode::IRLS}) {
    for (const double nu : {10.0, 20.0}) {
      SolverConfig c;
      c.hessian_mode = mode;
      c.cost = StudentT{0.5, nu};
      const MotionEstimate a = estimate_motion(scene.frames[0], scene.frames[1], c);
      c.cost = StudentT{37.0, nu};
      const MotionEstimate b = estimate_motion(scene.frames[0], scene.frames[1], c);
      same_length = same_length && a.trace.size() == b.trace.size();
      for (std::size_t i = 0; i < std::min(a.trace.size(), b.trace.size()); ++i) {
        damping_free = damping_free && a.trace[i].damping == 0.0 && b.trace[i].damping == 0.0;
        for (std::size_t k = 0; k < 6; ++k)
          worst = std::max(worst, std::abs(a.trace[i].transform.params()[k] - b.trace[i].transform.params()[k]));
      }
      for (std::size_t k = 0; k < 6; ++k)
        worst = std::max(worst, std::abs(a.transform.params()[k] - b.transform.params()[k]));
    }
  }
  return {worst <= 1e-9 && damping_free && same_length,
          fmt("max coefficient gap %.2e (tau 0.5 vs 37, both Hessian modes)", worst)};
}

// 6 + 10 --------------------------------------------------------------------
struct CleanStats {
  std::string label;
  int ok = 0;
  double mean_iters = 0.0;
};

std::vector<CleanStats> clean_recovery() {
  std::vector<CleanStats> out;
  std::vector<Scene> scenes;
  for (std::uint64_t seed = 0; seed < 50; ++seed) scenes.push_back(generate(clean_pair_scene(1000 + seed)));
  for (const auto& f : every_variant()) {
    CleanStats st{to_string(f)};
    SolverConfig cfg;
    cfg.cost = f;
    for (const auto& s : scenes) {
      const RecoveryRecord r = measure_recovery(s.frames, s.truth, cfg)[0];
      if (r.ok && r.corner_error < 0.1) ++st.ok;
      st.mean_iters += r.iterations / 50.0;
    }
    out.push_back(st);
  }
  return out;
}

// 7 -------------------------------------------------------------------------
Verdict outlier_ordering() {
  int wins = 0;
  double l0_stu = 0.0, l0_l2 = 0.0;
  SolverConfig stu_cfg, l2_cfg;
  l2_cfg.cost = L2{};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate(outlier_pair_scene(2000 + seed));
    const RecoveryRecord a = measure_recovery(s.frames, s.truth, stu_cfg)[0];
    const RecoveryRecord b = measure_recovery(s.frames, s.truth, l2_cfg)[0];
    if (a.ok && (!b.ok || a.corner_error < b.corner_error)) ++wins;
    const auto mask = contribution_mask(320, 240, stu_cfg.mask_margin);
    const auto l0 = [&](const RecoveryRecord& r) {
      return static_cast<double>(extended_l0(s.frames[0], warp_image(s.frames[1], r.estimate), kExtendedL0Threshold, mask).count);
    };
    l0_stu += l0(a) / 50.0;
    l0_l2 += l0(b) / 50.0;
  }
  return {wins >= 45 && l0_stu < l0_l2,
          fmt("Student-t better on %d/50 pairs; mean extended L0 %.0f vs L2 %.0f", wins, l0_stu, l0_l2)};
}

// 8 -------------------------------------------------------------------------
SceneSpec mixed_sequence_spec() {
  SceneSpec spec;
  spec.seed = 808;
  spec.frames = 40;
  std::vector<AffineTransform> rel;
  for (int t = 0; t < 39; ++t) {
    const double phase = 0.3 * t;
    const double s = 1.0 + 0.002 * std::sin(phase);
    rel.push_back({s, 0.001 * std::cos(phase), 1.5 + std::sin(phase), -0.001 * std::cos(phase), s,
                   -0.8 + 0.7 * std::cos(0.7 * phase)});
  }
  spec.camera_path = path_from_relative(rel);
  // One small blob throughout; three large ones join at frame 20.
  spec.blobs.push_back({40, 35.0, {12.0, 3.0}, {30.0, 30.0}, 0, -1});
  spec.blobs.push_back({80, 30.0, {20.0, 0.0}, {40.0, 130.0}, 20, -1});
  spec.blobs.push_back({72, -35.0, {-16.0, 4.0}, {200.0, 20.0}, 20, -1});
  spec.blobs.push_back({64, 40.0, {0.0, -18.0}, {180.0, 150.0}, 20, -1});
  spec.salt_pepper_fraction = 0.01;
  return spec;
}

Verdict adaptive_competitive() {
  const std::vector<LabeledSequence> seqs = {{"mixed", generate(mixed_sequence_spec()).frames}};
  const std::vector<BenchCost> costs = {parse_bench_cost("stu:tau=10,nu=10"), parse_bench_cost("stu:tau=20,nu=20"),
                                        parse_bench_cost("stu:tau=40,nu=40"), parse_bench_cost("stu-adaptive")};
  const EvalReport rep = run_benchmark(seqs, {1}, costs, SolverConfig{}, AdaptConfig{});
  double best = INFINITY;
  std::string detail;
  for (std::size_t i = 0; i < 3; ++i) {
    const ReportRow& r = rep.rows.at({"mixed", 1, label(costs[i])});
    best = std::min(best, r.mean_extended_l0);
    detail += fmt("%s %.0f, ", label(costs[i]).c_str(), r.mean_extended_l0);
  }
  const ReportRow& ad = rep.rows.at({"mixed", 1, "stu-adaptive"});
  detail += fmt("adaptive %.0f (ratio %.4f, failures %d)", ad.mean_extended_l0, ad.mean_extended_l0 / best,
                ad.failures);
  return {ad.failures == 0 && ad.mean_extended_l0 <= 1.05 * best, detail};
}

// 9 -------------------------------------------------------------------------
Verdict algorithm_contracts() {
  AdaptConfig cfg;
  cfg.t_err = 1e-9;
  int calls = 0;
  const auto closed = search_nu(
      [&](double nu) {
        ++calls;
        return (nu - 18.0) * (nu - 18.0) + 5.0;
      },
      cfg);
  bool ok = std::abs(closed.nu - 18.0) <= 0.9375 && calls <= 2 + cfg.t_cnt && calls == closed.evaluations;

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500 && ok; ++i) {
    AdaptConfig c;
    c.nu_min = 1.0 + 20.0 * u(rng);
    c.nu_max = c.nu_min + 1.0 + 60.0 * u(rng);
    c.t_cnt = 1 + static_cast<int>(8 * u(rng));
    c.t_err = 1e-4 + 0.05 * u(rng);
    const double a = u(rng), b = u(rng), p = 80.0 * u(rng);
    int n = 0;
    const auto r = search_nu(
        [&](double nu) {
          ++n;
          return a * std::abs(std::sin(nu / (5.0 + 10.0 * b))) * 100.0 + std::abs(nu - p);
        },
        c);
    ok = ok && r.nu >= c.nu_min && r.nu <= c.nu_max && n <= 2 + c.t_cnt &&
         r.score <= std::min(r.initial_score_min, r.initial_score_max);
  }
  return {ok, fmt("closed form nu = %.4f with %d evaluations; 500 random scores within contracts", closed.nu, calls)};
}

// 11 ------------------------------------------------------------------------
Verdict bit_exactness() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(2, 64), px(0, 255);
  bool pgm = true;
  for (int i = 0; i < 100; ++i) {
    const int w = dim(rng), h = dim(rng);
    std::vector<double> d(static_cast<std::size_t>(w) * h);
    for (auto& v : d) v = px(rng);
    const Image img(w, h, d);
    const auto bytes = save_pgm(img);
    pgm = pgm && load_pgm(bytes) == img && save_pgm(load_pgm(bytes)) == bytes;
  }
  EvalReport rep;
  rep.rows[{"b", 1, "l2"}] = {1.0, 2.0, 3, 0};
  rep.rows[{"a", 2, "l2"}] = {56250.0, 10.7, 10, 0};
  const bool csv = emit_csv(rep) ==
                   "sequence,divisor,cost,frames,failures,mean_extended_l0,mean_iterations\n"
                   "a,2,l2,10,0,5.625e4,10.70\n"
                   "b,1,l2,3,0,1.000,2.000\n";
  bool synth = true;
  for (const auto& spec : {outlier_pair_scene(77), mixed_sequence_spec()}) {
    const Scene a = generate(spec), b = generate(spec);
    for (std::size_t i = 0; i < a.frames.size(); ++i) synth = synth && save_pgm(a.frames[i]) == save_pgm(b.frames[i]);
    synth = synth && truth_to_json(a.truth) == truth_to_json(b.truth);
  }
  return {pgm && csv && synth, fmt("pgm round trip %s, csv %s, synthgen %s", pgm ? "ok" : "BAD",
                                   csv ? "ok" : "BAD", synth ? "ok" : "BAD")};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* title, const std::function<Verdict()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("CRITERION %d %s: %s (%s) [%.1f s]\n", id, title, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "table shape", tables_shape);
  report(2, "psi peak law", peak_law);
  report(3, "interpolation limits", limits);
  report(4, "derivative consistency", derivatives);
  report(5, "tau invariance", tau_invariance);

  std::vector<CleanStats> clean;
  report(6, "ground-truth recovery", [&] {
    clean = clean_recovery();
    Verdict v{true, ""};
    for (const auto& s : clean) {
      v.pass = v.pass && s.ok >= 48;
      v.detail += fmt("%s %d/50; ", s.label.c_str(), s.ok);
    }
    v.detail.resize(v.detail.size() - 2);
    return v;
  });
  report(7, "outlier ordering", outlier_ordering);
  report(8, "adaptive competitiveness", adaptive_competitive);
  report(9, "nu search contracts", algorithm_contracts);
  report(10, "iteration budget", [&] {
    Verdict v{!clean.empty(), ""};
    for (const auto& s : clean) {
      v.pass = v.pass && s.mean_iters <= 50.0;
      v.detail += fmt("%s %.1f; ", s.label.c_str(), s.mean_iters);
    }
    if (!v.detail.empty()) v.detail.resize(v.detail.size() - 2);
    return v;
  });
  report(11, "bit exactness", bit_exactness);

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
