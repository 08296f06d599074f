#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/random.hpp"
#include "demoaug/warping.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace demoaug {

/// Tabletop task parameters. The table surface is z = 0; blocks are 4 cm
/// cubes, so a block resting on the table has its center at z = 0.02.
struct TaskSpec {
  TaskKind kind = TaskKind::pick_place;
  /// Objects and goals are sampled uniformly in this xy rectangle.
  Vec3 region_center{0.05, 0.0, 0.0};
  double region_x = 0.20;
  double region_y = 0.30;
  double yaw_range_deg = 45.0;
  /// Minimum xy distance between sampled objects / goals.
  double min_separation = 0.08;
  /// Placed object center to goal center, xy.
  double place_tolerance = 0.02;
  /// Upper block center to lower block center, xy.
  double stack_tolerance = 0.005;
  double walk_step = 4e-4;
  double max_step = 0.02;
  double max_angle_step = 0.1;
  double grasp_tolerance = 0.01;
  /// Env steps spent on one trajectory point before moving on.
  int convergence_cap = 50;
  double flip_probability = 0.5;

  static TaskSpec for_kind(TaskKind kind) {
    TaskSpec s;
    s.kind = kind;
    return s;
  }
};

constexpr double kBlockSize = 0.04;
constexpr double kBlockRestZ = 0.02;
constexpr double kMugRestZ = 0.04;
constexpr double kApproachZ = 0.12;

struct GoalRegion {
  Vec3 center = Vec3::Zero();
  Vec3 extents = Vec3::Zero();
  std::string color;
};

/// 1-DOF drawer of the drawer_mug task. The handle slides along +x.
struct Drawer {
  double closed_x = 0.22;
  double opening = 0.0;
  /// Mug resting inside (moves with the drawer).
  bool mug_inside = false;
  static constexpr double kMaxOpening = 0.14;
  static constexpr double kOpenThreshold = 0.10;
  static constexpr double kClosedThreshold = 0.01;
  static constexpr double kFullOpen = 0.12;
  /// Interior center sits this far behind the handle.
  static constexpr double kInteriorBehind = 0.10;
};

struct DrawerProgress {
  bool drawer_opened = false;
  bool mug_grasped = false;
  bool mug_in_drawer = false;
  bool drawer_closed = false;
};

struct WorldState {
  TaskSpec spec;
  Pose robot_pose;
  Gripper gripper = Gripper::open;
  std::optional<std::string> attached_object;
  /// Object pose in the end-effector frame, fixed at grasp time.
  Pose attach_offset;
  ObjectPoses objects;
  std::map<std::string, GoalRegion> goal_regions;
  std::set<std::string> ever_picked;
  Drawer drawer;
  DrawerProgress progress;
  int t = 0;
  std::uint64_t reset_seed = 0;
  Rng rng;
};

/// Home pose: above the table, gripper pointing down.
Pose home_pose();

/// Gripper-down orientation with the given heading.
Rotation top_down(double yaw_rad);

std::pair<WorldState, SceneObservation> reset(const TaskSpec& spec, std::uint64_t seed);

Observation observe(const WorldState& state);
SceneObservation scene_observation(const WorldState& state);

/// Moves toward the goal (capped per step), then applies the gripper command,
/// then lets walking objects drift. Closing within grasp tolerance of a
/// graspable object attaches the nearest one; opening releases it onto
/// whatever supports it.
void step(WorldState& state, const Action& action);

bool task_success(const WorldState& state);

/// Translates a free object. Throws ObjectAttached for the held object and
/// UnknownObject for missing ids.
void inject_disturbance(WorldState& state, const std::string& object_id, const Vec3& delta);

/// Position of a graspable object's grasp point, throws UnknownObject.
Vec3 grasp_point(const WorldState& state, const std::string& object_id);

/// Object id expected at the lower / upper goal of a stacking task.
std::string lower_block(const WorldState& state);
std::string upper_block(const WorldState& state);

struct Disturbance {
  int at_step = 0;
  std::string object_id;
  Vec3 delta = Vec3::Zero();
};

struct RolloutOutcome {
  bool success = false;
  int steps = 0;
  WorldState final_state;
  std::vector<Observation> observations;  // state before each step
  std::vector<Action> actions;            // action of each step
};

/// Executes every trajectory point as a goal action, repeating it until the
/// robot reaches it or the convergence cap is hit. A disturbance, when given,
/// is applied right before the env step with index `at_step`.
RolloutOutcome rollout(const WorldState& start, const TrajectorySegment& traj,
                       const std::optional<Disturbance>& disturbance = std::nullopt);

/// Re-executes recorded actions one env step each.
RolloutOutcome replay_actions(const WorldState& start, const std::vector<Action>& actions);

/// Packs a rollout trace into a demonstration.
Demonstration to_demonstration(const RolloutOutcome& outcome, std::string id, TaskKind kind,
                               Provenance provenance);

/// One JSON object per step: t, observation, action.
void write_trace_jsonl(std::ostream& out, const RolloutOutcome& outcome);

}  // namespace demoaug
