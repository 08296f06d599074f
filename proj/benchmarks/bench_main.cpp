#include "demoaug/annotation.hpp"
#include "demoaug/bandit.hpp"
#include "demoaug/scripted_policies.hpp"
#include "demoaug/warping.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>

using namespace demoaug;

namespace {

void BM_ComputeWarp(benchmark::State& state) {
  const Pose a{Vec3(0.1, 0.2, 0.3), Rotation::about_z(0.4)};
  const Pose b{Vec3(-0.2, 0.1, 0.05), Rotation::about_x(0.3)};
  const Pose c{Vec3(0.15, 0.25, 0.2), Rotation{}};
  const Pose d{Vec3(-0.1, 0.05, 0.1), Rotation::about_y(0.2)};
  for (auto _ : state) benchmark::DoNotOptimize(compute_warp(a, b, c, d));
}
BENCHMARK(BM_ComputeWarp);

void BM_WarpTrajectory(benchmark::State& state) {
  const TaskSpec spec = TaskSpec::for_kind(TaskKind::stack);
  const Demonstration demo = record_scripted_demo(spec, 1, "bench");
  const Annotation ann = scripted_annotate(demo, spec.kind);
  std::vector<TimedPose> moved = timed_poses(ann.keyposes);
  for (auto& k : moved) k.pose.position += Vec3(0.02, -0.01, 0.0);
  const std::vector<TimedPose> old = timed_poses(ann.keyposes);
  for (auto _ : state) benchmark::DoNotOptimize(warp_trajectory_by_keyposes(demo, old, moved));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(demo.size()));
}
BENCHMARK(BM_WarpTrajectory);

void BM_FitBetaMle(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> xs;
  for (int i = 0; i < state.range(0); ++i) xs.push_back(std::clamp(sample_beta(rng, 3.0, 7.0), 1e-6, 1 - 1e-6));
  for (auto _ : state) benchmark::DoNotOptimize(fit_beta_mle(xs));
}
BENCHMARK(BM_FitBetaMle)->Arg(1000)->Arg(10000);

void BM_DecideNewArm(benchmark::State& state) {
  BanditState s;
  s.arms = {{"a", 12, 4}, {"b", 3, 5}, {"c", 1, 0}};
  s.goal_successes = 100;
  s.current_successes = 16;
  s.new_arm_attempts = 4;
  s.new_arm_successes = 3;
  Rng rng(2);
  const PriorFit prior = fit_arm_prior(s.arms, 1000, rng);
  const int horizon = estimate_horizon(s);
  for (auto _ : state) benchmark::DoNotOptimize(decide_new_arm(s, horizon, prior, static_cast<int>(state.range(0)), rng));
}
BENCHMARK(BM_DecideNewArm)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& state) {
  const TaskSpec spec = TaskSpec::for_kind(TaskKind::pick_place);
  const Demonstration demo = record_scripted_demo(spec, 1, "bench");
  const TrajectorySegment traj = demo_trajectory(demo);
  const auto [world, obs] = reset(spec, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(world, traj).success);
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
