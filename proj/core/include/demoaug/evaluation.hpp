#pragma once

#include "demoaug/annotation.hpp"
#include "demoaug/demonstration.hpp"
#include "demoaug/ensemble.hpp"
#include "demoaug/simworld.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace demoaug {

struct SuccessEstimate {
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Wilson score interval; z = 1.96 gives the 95% interval.
SuccessEstimate wilson_interval(int successes, int trials, double z = 1.959963984540054);

enum class PolicyKind { scripted, feedforward, ensemble };

struct PolicySpec {
  PolicyKind kind = PolicyKind::feedforward;
  /// Feedforward and ensemble: the annotation to retarget and its source demo.
  Annotation annotation;
  Demonstration source;
  double retarget_noise = 0.0;
  /// Ensemble only.
  ActionStats stats;
  EnsembleParams params;
};

/// Teleports an object in a random planar direction by a distance drawn from
/// [min_distance, max_distance], `lead_steps` env steps before the first
/// feedforward grasp command.
struct DisturbanceSpec {
  std::string object_id = "cube";
  double min_distance = 0.05;
  double max_distance = 0.08;
  int lead_steps = 8;
};

struct EvalTrial {
  std::uint64_t scene_seed = 0;
  bool success = false;
  int steps = 0;
};

struct EvalResult {
  SuccessEstimate estimate;
  std::vector<EvalTrial> trials;
};

/// n_trials seeded resets and rollouts. Trial i uses scene and disturbance
/// seeds derived from (seed, i) only, so different policies evaluated with
/// the same seed see the same scenes and disturbances.
EvalResult evaluate_policy(const PolicySpec& policy, const TaskSpec& task, int n_trials, std::uint64_t seed,
                           const std::optional<DisturbanceSpec>& disturbance = std::nullopt);

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

}  // namespace demoaug
