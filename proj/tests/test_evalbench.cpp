#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gme/error.hpp"
#include "gme/evalbench.hpp"
#include "gme/synthgen.hpp"

using namespace gme;

namespace {

WarpedImage as_warped(const Image& img) { return warp_image(img, AffineTransform::identity()); }

Image with_pixel(const Image& img, int x, int y, double v) {
  std::vector<double> d(img.data().begin(), img.data().end());
  d[static_cast<std::size_t>(y * img.width() + x)] = v;
  return Image(img.width(), img.height(), std::move(d));
}

// Outlier scene stretched to `frames` frames with the same relative motion between each pair.
std::vector<Image> outlier_sequence(std::uint64_t seed, int frames) {
  SceneSpec spec = outlier_pair_scene(seed);
  const AffineTransform step = compose(invert(spec.camera_path[1]), spec.camera_path[0]);
  spec.frames = frames;
  spec.camera_path = path_from_relative(std::vector<AffineTransform>(static_cast<std::size_t>(frames - 1), step));
  return generate(spec).frames;
}

}  // namespace

TEST_CASE("extended_l0 examples") {
  const Image a = Image::filled(6, 5, 100.0);
  const ContributionMask full(6, 5, 0);
  CHECK(extended_l0(a, as_warped(a), 2.0, full).count == 0);
  CHECK(extended_l0(a, as_warped(a), 2.0, full).contributing == 30);
  CHECK(extended_l0(a, as_warped(with_pixel(a, 2, 2, 103.0)), 2.0, full).count == 1);
  CHECK(extended_l0(a, as_warped(with_pixel(a, 2, 2, 102.0)), 2.0, full).count == 0);
  CHECK(extended_l0(a, as_warped(with_pixel(a, 2, 2, 98.0)), 2.0, full).count == 0);
  // Pixels outside the mask or the overlap never count.
  CHECK(extended_l0(a, as_warped(with_pixel(a, 0, 0, 0.0)), 2.0, ContributionMask(6, 5, 1)).count == 0);
  const WarpedImage away = warp_image(a, AffineTransform::translation(50.0, 0.0));
  const ExtendedL0 none = extended_l0(a, away, 2.0, full);
  CHECK(none.count == 0);
  CHECK(none.contributing == 0);
}

TEST_CASE("extended_l0 is symmetric and monotone in c") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> px(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> da(24 * 18), db(24 * 18);
    for (auto& v : da) v = px(rng);
    for (auto& v : db) v = px(rng);
    const Image a(24, 18, da), b(24, 18, db);
    const ContributionMask m(24, 18, 2);
    const auto ab = [&](double c) { return extended_l0(a, as_warped(b), c, m).count; };
    CHECK(ab(2.0) == extended_l0(b, as_warped(a), 2.0, m).count);
    std::size_t prev = ab(0.0);
    for (double c = 0.5; c <= 255.0; c += 0.5) {
      CHECK(ab(c) <= prev);
      prev = ab(c);
    }
    CHECK(ab(0.0) >= ab(2.0));
    CHECK(ab(255.0) == 0);
  }
}

TEST_CASE("format_sig4") {
  CHECK(format_sig4(56250.0) == "5.625e4");
  CHECK(format_sig4(10.7) == "10.70");
  CHECK(format_sig4(0.0) == "0.000");
  CHECK(format_sig4(1234.0) == "1234");
  CHECK(format_sig4(9999.6) == "1.000e4");
  CHECK(format_sig4(0.0001234) == "0.0001234");
  CHECK(format_sig4(0.00001) == "1.000e-5");
  CHECK(format_sig4(-3.14159) == "-3.142");
  CHECK(format_sig4(1.0) == "1.000");
}

TEST_CASE("emit_csv") {
  const std::string header = "sequence,divisor,cost,frames,failures,mean_extended_l0,mean_iterations\n";
  EvalReport report;
  CHECK(emit_csv(report) == header);

  report.rows[{"b", 1, "l2"}] = {1.0, 2.0, 3, 0};
  report.rows[{"a", 2, "l2"}] = {56250.0, 10.7, 10, 0};
  CHECK(emit_csv(report) == header + "a,2,l2,10,0,5.625e4,10.70\n" + "b,1,l2,3,0,1.000,2.000\n");

  EvalReport quoted;
  quoted.rows[{"s", 1, "stu:tau=20,nu=20"}] = {5.0, 6.0, 2, 1};
  CHECK(emit_csv(quoted) == header + "s,1,\"stu:tau=20,nu=20\",2,1,5.000,6.000\n");

  EvalReport failed;
  failed.rows[{"s", 1, "l2"}] = {NAN, NAN, 2, 2};
  CHECK(emit_csv(failed) == header + "s,1,l2,2,2,nan,nan\n");
}

TEST_CASE("bench cost labels") {
  CHECK(std::holds_alternative<AdaptiveStudentT>(parse_bench_cost("stu-adaptive")));
  CHECK(label(parse_bench_cost("stu-adaptive")) == "stu-adaptive");
  CHECK(label(parse_bench_cost("huber:k=20")) == "huber:k=20");
  CHECK_THROWS_AS(parse_bench_cost("stu-adaptiv"), ParseError);
}

TEST_CASE("identical frames give zero error") {
  const Scene scene = generate(clean_pair_scene(2));
  const std::vector<Image> frames(4, scene.frames[0]);
  for (const char* cost : {"l2", "stu:tau=20,nu=20", "stu-adaptive"}) {
    const auto outcomes = run_sequence(frames, 1, parse_bench_cost(cost), SolverConfig{}, AdaptConfig{});
    REQUIRE(outcomes.size() == 3);
    const ReportRow row = summarise(outcomes);
    CHECK(row.mean_extended_l0 == 0.0);
    CHECK(row.frames == 3);
    CHECK(row.failures == 0);
  }
}

TEST_CASE("frame-step pairing") {
  const Scene scene = generate(clean_pair_scene(2));
  const std::vector<Image> frames(7, scene.frames[0]);
  CHECK(run_sequence(frames, 1, parse_bench_cost("l2"), SolverConfig{}, AdaptConfig{}).size() == 6);
  CHECK(run_sequence(frames, 2, parse_bench_cost("l2"), SolverConfig{}, AdaptConfig{}).size() == 3);
  CHECK(run_sequence(frames, 3, parse_bench_cost("l2"), SolverConfig{}, AdaptConfig{}).size() == 2);
  CHECK_THROWS_AS(run_sequence(frames, 7, parse_bench_cost("l2"), SolverConfig{}, AdaptConfig{}),
                  ArgumentError);
}

TEST_CASE("summarise") {
  std::vector<PairOutcome> o(3);
  o[0] = {true, 10.0, 4};
  o[1] = {false, 0.0, 0};
  o[2] = {true, 20.0, 8};
  const ReportRow r = summarise(o);
  CHECK(r.frames == 3);
  CHECK(r.failures == 1);
  CHECK(r.mean_extended_l0 == 15.0);
  CHECK(r.mean_iterations == 6.0);
  const ReportRow all_failed = summarise({PairOutcome{}, PairOutcome{}});
  CHECK(std::isnan(all_failed.mean_extended_l0));
}

TEST_CASE("Student-t beats L2 on an outlier sequence, deterministically") {
  const std::vector<LabeledSequence> seqs = {{"out", outlier_sequence(11, 4)}};
  const std::vector<BenchCost> costs = {parse_bench_cost("l2"), parse_bench_cost("stu:tau=20,nu=20")};
  const EvalReport serial = run_benchmark(seqs, {1}, costs, SolverConfig{}, AdaptConfig{});
  const EvalReport threaded = run_benchmark(seqs, {1}, costs, SolverConfig{}, AdaptConfig{}, {2});
  const ReportRow& l2 = serial.rows.at({"out", 1, "l2"});
  const ReportRow& stu = serial.rows.at({"out", 1, "stu:tau=20,nu=20"});
  CHECK(l2.frames == 3);
  CHECK(stu.mean_extended_l0 < l2.mean_extended_l0);
  CHECK(emit_csv(serial) == emit_csv(threaded));
  CHECK(to_json(serial) == to_json(threaded));

  const std::string tables = format_tables(serial);
  CHECK(tables.find("Mean extended L0 errors [x10^4]") != std::string::npos);
  CHECK(tables.find("Mean iterations") != std::string::npos);
  CHECK(tables.find("out(/1)") != std::string::npos);
  CHECK(tables.find("stu:tau=20,nu=20") != std::string::npos);
}

TEST_CASE("report JSON") {
  EvalReport report;
  report.rows[{"a", 2, "l2"}] = {56250.0, 10.5, 10, 0};
  report.rows[{"b", 1, "l1"}] = {NAN, NAN, 1, 1};
  CHECK(to_json(report) == R"({
  "rows": [
    {
      "cost": "l2",
      "divisor": 2,
      "failures": 0,
      "frames": 10,
      "mean_extended_l0": 56250.0,
      "mean_iterations": 10.5,
      "sequence": "a"
    },
    {
      "cost": "l1",
      "divisor": 1,
      "failures": 1,
      "frames": 1,
      "mean_extended_l0": null,
      "mean_iterations": null,
      "sequence": "b"
    }
  ]
})");
}

TEST_CASE("tables shape") {
  EvalReport report;
  for (const char* seq : {"v1", "v2"})
    for (const int d : {1, 2})
      for (const char* c : {"l2", "stu-adaptive"}) report.rows[{seq, d, c}] = {52700.0, 12.0, 5, 0};
  const std::string t = format_tables(report);
  CHECK(t.find("v1(/1)") != std::string::npos);
  CHECK(t.find("v2(/2)") != std::string::npos);
  CHECK(t.find("5.27") != std::string::npos);
  CHECK(t.find("12.0") != std::string::npos);
  // Title + header + 4 rows, blank line, title + header + 4 rows.
  CHECK(std::count(t.begin(), t.end(), '\n') == 13);
}
