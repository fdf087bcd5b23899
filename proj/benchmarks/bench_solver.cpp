#include <benchmark/benchmark.h>

#include "gme/solver.hpp"
#include "gme/synthgen.hpp"

namespace {

const gme::Scene& scene() {
  static const gme::Scene s = gme::generate(gme::clean_pair_scene(1));
  return s;
}

void BM_Warp(benchmark::State& state) {
  const auto& img = scene().frames[1];
  const gme::AffineTransform a{1.003, 0.002, 1.7, -0.001, 0.998, -2.2};
  for (auto _ : state) benchmark::DoNotOptimize(gme::warp_image(img, a));
}
BENCHMARK(BM_Warp);

void BM_GradientHessian(benchmark::State& state) {
  const auto& ref = scene().frames[0];
  const auto warped = gme::warp_image(scene().frames[1], gme::AffineTransform::translation(1.0, 0.5));
  const auto sd = gme::steepest_descent(gme::gradient(ref));
  const auto mask = gme::contribution_mask(ref.width(), ref.height(), 15);
  const gme::CostFunction f = gme::StudentT{20, 20};
  for (auto _ : state) benchmark::DoNotOptimize(gme::gradient_and_hessian(ref, warped, sd, mask, f));
}
BENCHMARK(BM_GradientHessian);

void BM_EstimateMotion(benchmark::State& state) {
  gme::SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gme::estimate_motion(scene().frames[0], scene().frames[1], cfg));
}
BENCHMARK(BM_EstimateMotion)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
