#include "demoaug/evaluation.hpp"

#include "demoaug/retargeting.hpp"
#include "demoaug/scripted_policies.hpp"
#include "demoaug/warping.hpp"

#include <cmath>
#include <stdexcept>

namespace demoaug {

SuccessEstimate wilson_interval(int successes, int trials, double z) {
  if (trials < 1 || successes < 0 || successes > trials) throw std::invalid_argument("wilson_interval: bad counts");
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {trials, successes, p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

int first_grasp_step(const TrajectorySegment& traj) {
  for (std::size_t i = 0; i < traj.gripper.size(); ++i) {
    if (traj.gripper[i] == Gripper::closed) return static_cast<int>(i);
  }
  return static_cast<int>(traj.gripper.size());
}

Disturbance draw_disturbance(const DisturbanceSpec& spec, int grasp_step, Rng& rng) {
  std::uniform_real_distribution<double> heading(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> dist(spec.min_distance, spec.max_distance);
  const double a = heading(rng);
  const double d = dist(rng);
  return {std::max(0, grasp_step - spec.lead_steps), spec.object_id, Vec3(d * std::cos(a), d * std::sin(a), 0.0)};
}

EvalTrial run_scripted_trial(const WorldState& start, const std::optional<DisturbanceSpec>& dspec, Rng& drng) {
  std::optional<Disturbance> dist;
  if (dspec) {
    const RolloutOutcome clean = run_scripted(start);
    int grasp = clean.steps;
    for (int i = 0; i < clean.steps; ++i) {
      if (clean.actions[static_cast<std::size_t>(i)].gripper == Gripper::closed) {
        grasp = i;
        break;
      }
    }
    dist = draw_disturbance(*dspec, grasp, drng);
  }
  WorldState s = start;
  int steps = 0;
  while (!scripted_done(s) && steps < 3000) {
    if (dist && steps == dist->at_step && s.attached_object != dist->object_id) {
      inject_disturbance(s, dist->object_id, dist->delta);
    }
    step(s, scripted_action(s));
    ++steps;
  }
  return {start.reset_seed, task_success(s), steps};
}

}  // namespace

EvalResult evaluate_policy(const PolicySpec& policy, const TaskSpec& task, int n_trials, std::uint64_t seed,
                           const std::optional<DisturbanceSpec>& disturbance) {
  if (n_trials < 1) throw std::invalid_argument("evaluate_policy needs n_trials >= 1");
  EvalResult result;
  int successes = 0;
  for (int i = 0; i < n_trials; ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    const std::uint64_t scene_seed = derive_seed(seed, {ui, 0});
    Rng drng = derive_rng(seed, {ui, 1});
    Rng noise = derive_rng(seed, {ui, 2});
    const auto [world, obs] = reset(task, scene_seed);

    EvalTrial trial;
    if (policy.kind == PolicyKind::scripted) {
      trial = run_scripted_trial(world, disturbance, drng);
    } else {
      const auto kps = scripted_retarget(policy.annotation, obs, initial_observation(policy.source),
                                         policy.retarget_noise, noise);
      const TrajectorySegment traj =
          warp_trajectory_by_keyposes(policy.source, timed_poses(policy.annotation.keyposes), timed_poses(kps));
      std::optional<Disturbance> dist;
      if (disturbance) dist = draw_disturbance(*disturbance, first_grasp_step(traj), drng);
      if (policy.kind == PolicyKind::feedforward) {
        const RolloutOutcome r = rollout(world, traj, dist);
        trial = {scene_seed, r.success, r.steps};
      } else {
        const EnsembleOutcome r = run_ensemble(world, traj, scripted_action, policy.stats, policy.params, dist);
        trial = {scene_seed, r.success, r.steps};
      }
    }
    trial.scene_seed = scene_seed;
    successes += trial.success ? 1 : 0;
    result.trials.push_back(trial);
  }
  result.estimate = wilson_interval(successes, n_trials);
  return result;
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::scripted:
      return "scripted";
    case PolicyKind::feedforward:
      return "feedforward";
    case PolicyKind::ensemble:
      return "ensemble";
  }
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "scripted") return PolicyKind::scripted;
  if (name == "feedforward") return PolicyKind::feedforward;
  if (name == "ensemble") return PolicyKind::ensemble;
  throw std::invalid_argument("unknown policy kind: " + std::string(name));
}

}  // namespace demoaug
