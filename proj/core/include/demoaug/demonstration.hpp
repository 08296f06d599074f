#pragma once

#include "demoaug/geometry.hpp"
#include "demoaug/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace demoaug {

enum class Gripper { open, closed };

inline double gripper_value(Gripper g) { return g == Gripper::closed ? 1.0 : 0.0; }

enum class TaskKind { pick_place, stack, stack_flipped, stack_walking, drawer_mug };

std::string_view to_string(TaskKind kind);
/// Throws std::invalid_argument on an unknown name.
TaskKind task_kind_from_string(std::string_view name);

using ObjectPoses = std::map<std::string, Pose>;

/// State seen at one timestep: robot pose, gripper state, object poses
/// (including visible goal markers).
struct Observation {
  Pose robot;
  Gripper gripper = Gripper::open;
  /// Id of the object currently held by the gripper, empty when none.
  std::string held_object;
  ObjectPoses objects;
};

/// Initial observation of a scene as handed to retargeting: robot pose,
/// object poses, optional images, and free-form task metadata (for example
/// goal-marker colors).
struct SceneObservation {
  Pose robot_pose;
  ObjectPoses objects;
  std::vector<Attachment> images;
  std::map<std::string, std::string> task_metadata;
};

/// Goal-pose action with a gripper command.
struct Action {
  Pose goal;
  Gripper gripper = Gripper::open;
};

struct Provenance {
  enum class Kind { human_scripted, generated };
  Kind kind = Kind::human_scripted;
  std::string annotation_id;  // empty for source demos
  std::uint64_t reset_seed = 0;
};

/// A recorded episode. observations[t] is the state before actions[t].
struct Demonstration {
  std::string id;
  TaskKind task = TaskKind::pick_place;
  std::vector<Observation> observations;
  std::vector<Action> actions;
  Provenance provenance;

  std::size_t size() const { return observations.size(); }
  /// Index of the final timestep, T.
  int last_timestep() const { return static_cast<int>(observations.size()) - 1; }
};

/// Throws demoaug::Error when observations/actions are inconsistent.
void validate(const Demonstration& demo);

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json observation_to_json(const Observation& o);
Observation observation_from_json(const nlohmann::json& j);
nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);
nlohmann::json demo_to_json(const Demonstration& demo);
Demonstration demo_from_json(const nlohmann::json& j);

}  // namespace demoaug
