// Serial reference vs OpenMP kernel timings. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "support.hpp"

using namespace robosynth;
using namespace robosynth::testing;

namespace {

ExecPolicy policy_of(const benchmark::State& st) {
  return st.range(0) == 0 ? ExecPolicy::serial : ExecPolicy::parallel;
}

const WorldState& scene() {
  static const WorldState w = generate_scene(3, family_config("multi_stage")).state;
  return w;
}

void BM_Render(benchmark::State& st) {
  for (auto _ : st) {
    auto r = render_views(scene(), scene().cameras, {}, policy_of(st));
    benchmark::DoNotOptimize(r);
  }
}

void BM_Tsdf(benchmark::State& st) {
  const RenderResult rr = render_views(scene(), scene().cameras);
  GridSpec gs;
  gs.origin = scene().workspace.min;
  gs.dims = {70, 100, 80};
  for (auto _ : st) {
    TsdfVolume v(gs);
    for (const auto& img : rr.images) tsdf_integrate(v, img, policy_of(st));
    benchmark::DoNotOptimize(v.sdf_data().data());
  }
}

void BM_Dbscan(benchmark::State& st) {
  Rng rng(12);
  std::vector<Vec3> pts;
  for (int c = 0; c < 8; ++c) {
    const Vec3 center = random_point(rng, -1, 1);
    for (int i = 0; i < 500; ++i) pts.push_back(center + 0.08 * random_point(rng, -1, 1));
  }
  for (auto _ : st) {
    auto l = dbscan(pts, 0.03, 8, policy_of(st));
    benchmark::DoNotOptimize(l);
  }
}

void BM_Sampler(benchmark::State& st) {
  static const PerceivedObject po = perceive(reference_block_scene(20.0), "cube");
  for (auto _ : st) {
    auto c = sample_adaptive_grasps(po.percept.cloud, po.grid, {}, policy_of(st));
    benchmark::DoNotOptimize(c);
  }
}

void BM_Planner(benchmark::State& st) {
  const ObstructedScene sc = obstructed_scene(7001);
  PlannerOptions po;
  po.samples = 1024;
  for (auto _ : st) {
    auto t = plan_free_path(sc.start, sc.goal, sc.constraints, po, policy_of(st));
    benchmark::DoNotOptimize(t);
  }
}

}  // namespace

BENCHMARK(BM_Render)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tsdf)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dbscan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sampler)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Planner)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
