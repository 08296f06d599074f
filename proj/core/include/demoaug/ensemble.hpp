#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/simworld.hpp"
#include "demoaug/warping.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace demoaug {

/// Action as a delta from the current state: translation (3), rotation
/// vector of goal * current^-1 (3), gripper command minus current gripper (1).
using ActionVector = Eigen::Matrix<double, 7, 1>;

struct NormalizedAction {
  ActionVector v = ActionVector::Zero();
};

/// Per-dimension scale (dataset standard deviation, floored at 1e-6).
struct ActionStats {
  ActionVector scale = ActionVector::Ones();

  static ActionStats from_demos(const std::vector<Demonstration>& demos);
};

constexpr double kScaleFloor = 1e-6;

ActionVector action_delta(const Pose& from, Gripper from_gripper, const Pose& to, Gripper to_gripper);
NormalizedAction normalize(const ActionVector& raw, const ActionStats& stats);
NormalizedAction normalized_delta(const Pose& from, Gripper from_gripper, const Action& to, const ActionStats& stats);

/// Magnitude-aware cosine similarity:
/// 2 min(|a|_1, |b|_1) / (|a|_1 + |b|_1) * a.b / (|a|_2 |b|_2).
/// Both zero gives 1, exactly one zero gives 0.
double similarity(const NormalizedAction& a, const NormalizedAction& b);

struct ReattachCandidate {
  int t = 0;
  double attach_similarity = 0.0;
  double recorded_similarity = 0.0;
};

/// Best future trajectory index to rejoin. For t > t_now the attach action is
/// the delta from the current state to traj[t] and the recorded action the
/// delta traj[t] -> traj[t+1] (zero at the last point). Both must exceed tau;
/// among those, the highest attach similarity wins, earliest on ties.
/// `window` < 0 scans to the end of the trajectory.
std::optional<ReattachCandidate> select_reattach(const TrajectorySegment& traj, const Pose& current,
                                                 Gripper current_gripper, int t_now,
                                                 const NormalizedAction& a_il, double tau,
                                                 const ActionStats& stats, int window = -1);

enum class EnsembleMode { feedforward, feedback };

struct EnsembleParams {
  double tau_switch = 0.5;
  int streak_window = 3;
  int cooldown = 5;
  double tau_reattach = 0.5;
  int convergence_cap = 50;
  int reattach_window = -1;
};

struct EnsembleState {
  EnsembleMode mode = EnsembleMode::feedforward;
  int cooldown_remaining = 0;
  TrajectorySegment ff_trajectory;
  int ff_cursor = 0;
  int disagreement_streak = 0;
  /// Env steps already spent on ff_cursor.
  int steps_on_point = 0;
};

EnsembleState make_ensemble_state(TrajectorySegment traj);

struct EnsembleStepInfo {
  EnsembleMode mode = EnsembleMode::feedforward;  // mode of the executed action
  /// Feedforward vs feedback similarity; only meaningful in feedforward mode.
  std::optional<double> similarity;
  bool switched = false;
  std::optional<ReattachCandidate> reattach;
  /// A reattach was possible but the cooldown blocked it.
  bool reattach_blocked = false;
  bool trajectory_complete = false;
  int cursor = 0;
  int cooldown_remaining = 0;
};

struct EnsembleStepResult {
  Action action;
  EnsembleStepInfo info;
};

/// One control step. In feedforward mode the trajectory point at the cursor
/// is executed (advancing once the robot reached the previous point or spent
/// the convergence cap on it) and compared with the feedback action; W
/// consecutive similarities below tau_switch switch to feedback. In feedback
/// mode the feedback action is executed and a reattach is attempted. A mode
/// change needs an expired cooldown and restarts it. When the trajectory is
/// complete the controller falls back to feedback (holding the last point
/// while a cooldown runs).
EnsembleStepResult ensemble_step(EnsembleState& state, const Action& feedback_action, const Pose& current,
                                 Gripper current_gripper, const ActionStats& stats, const EnsembleParams& params);

using FeedbackPolicy = std::function<Action(const WorldState&)>;

struct EnsembleOutcome {
  bool success = false;
  int steps = 0;
  int switches = 0;
  WorldState final_state;
  std::vector<Action> actions;
  std::vector<EnsembleStepInfo> trace;
};

/// Runs the ensemble until the feedforward trajectory completes with the task
/// solved, the feedback policy reports `done`, or `max_steps` elapse.
EnsembleOutcome run_ensemble(const WorldState& start, const TrajectorySegment& traj, const FeedbackPolicy& feedback,
                             const ActionStats& stats, const EnsembleParams& params,
                             const std::optional<Disturbance>& disturbance = std::nullopt,
                             const std::function<bool(const WorldState&)>& done = {}, int max_steps = -1);

/// One JSON object per step: t, mode, similarity, switched, reattach, cursor, cooldown.
void write_ensemble_trace_jsonl(std::ostream& out, const std::vector<EnsembleStepInfo>& trace);

}  // namespace demoaug
