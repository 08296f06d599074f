#include "demoaug/simworld.hpp"

#include "demoaug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace demoaug {

namespace {

const char* const kCube = "cube";
const char* const kHandle = "drawer_handle";
const char* const kMug = "mug";
const char* const kInterior = "drawer_interior";
constexpr double kHandleY = 0.0;
constexpr double kHandleZ = 0.06;
constexpr double kDropRadius = 0.03;

bool is_block(const std::string& id) { return id == kCube || id.rfind("block_", 0) == 0; }

bool is_stack(TaskKind k) {
  return k == TaskKind::stack || k == TaskKind::stack_flipped || k == TaskKind::stack_walking;
}

double xy_distance(const Vec3& a, const Vec3& b) { return (a - b).head<2>().norm(); }

Vec3 sample_xy(const TaskSpec& spec, Rng& rng, double z) {
  std::uniform_real_distribution<double> ux(-spec.region_x / 2.0, spec.region_x / 2.0);
  std::uniform_real_distribution<double> uy(-spec.region_y / 2.0, spec.region_y / 2.0);
  const double x = ux(rng);
  const double y = uy(rng);
  return {spec.region_center.x() + x, spec.region_center.y() + y, z};
}

double sample_yaw(const TaskSpec& spec, Rng& rng) {
  const double r = deg_to_rad(spec.yaw_range_deg);
  std::uniform_real_distribution<double> u(-r, r);
  return u(rng);
}

// n points in the region with pairwise xy separation, by rejection.
std::vector<Vec3> sample_separated(const TaskSpec& spec, Rng& rng, std::size_t n) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(sample_xy(spec, rng, 0.0));
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n && ok; ++j) ok = xy_distance(pts[i], pts[j]) >= spec.min_separation;
    }
    if (ok) return pts;
  }
  throw std::invalid_argument("randomization region too small for the requested separation");
}

Vec3 interior_center(const Drawer& d) {
  return {d.closed_x + d.opening - Drawer::kInteriorBehind, kHandleY, kMugRestZ};
}

void sync_drawer(WorldState& s) {
  s.objects[kHandle].position.x() = s.drawer.closed_x + s.drawer.opening;
  s.goal_regions[kInterior].center = interior_center(s.drawer);
  if (s.drawer.mug_inside) {
    const Vec3 c = interior_center(s.drawer);
    s.objects[kMug].position.x() = c.x();
  }
}

void move_robot(WorldState& s, const Pose& goal) {
  const Vec3 d = goal.position - s.robot_pose.position;
  const double dist = d.norm();
  if (dist <= s.spec.max_step) {
    s.robot_pose.position = goal.position;
  } else {
    s.robot_pose.position += d * (s.spec.max_step / dist);
  }
  const Rotation delta = goal.rotation * s.robot_pose.rotation.inverse();
  const double angle = delta.angle();
  if (angle <= s.spec.max_angle_step) {
    s.robot_pose.rotation = goal.rotation;
  } else {
    const Vec3 v = delta.rotation_vector() * (s.spec.max_angle_step / angle);
    s.robot_pose.rotation = Rotation::from_rotation_vector(v) * s.robot_pose.rotation;
  }
}

void carry_attached(WorldState& s) {
  if (!s.attached_object) return;
  const std::string& id = *s.attached_object;
  const Pose& ee = s.robot_pose;
  const Vec3 carried = ee.rotation * s.attach_offset.position + ee.position;
  if (id == kHandle) {
    s.drawer.opening = std::clamp(carried.x() - s.drawer.closed_x, 0.0, Drawer::kMaxOpening);
    sync_drawer(s);
    return;
  }
  Pose& obj = s.objects[id];
  obj.position = carried;
  obj.rotation = ee.rotation * s.attach_offset.rotation;
}

void try_attach(WorldState& s) {
  const std::string* best = nullptr;
  double best_d = s.spec.grasp_tolerance;
  for (const auto& [id, pose] : s.objects) {
    const double d = (pose.position - s.robot_pose.position).norm();
    if (d <= best_d) {
      best_d = d;
      best = &id;
    }
  }
  if (!best) return;
  const std::string id = *best;
  const Pose& obj = s.objects[id];
  const Rotation inv = s.robot_pose.rotation.inverse();
  s.attached_object = id;
  s.attach_offset = {inv * (obj.position - s.robot_pose.position), inv * obj.rotation};
  s.ever_picked.insert(id);
  if (id == kMug) {
    s.drawer.mug_inside = false;
    if (s.progress.drawer_opened) s.progress.mug_grasped = true;
  }
}

void release(WorldState& s) {
  if (!s.attached_object) return;
  const std::string id = *s.attached_object;
  s.attached_object.reset();
  if (id == kHandle) return;
  Pose& obj = s.objects[id];
  obj.rotation = Rotation::about_z(obj.rotation.yaw());
  if (id == kMug) {
    const Vec3 c = interior_center(s.drawer);
    if (s.drawer.opening >= Drawer::kOpenThreshold && xy_distance(obj.position, c) <= kDropRadius) {
      obj.position.z() = c.z();
      s.drawer.mug_inside = true;
      if (s.progress.mug_grasped) s.progress.mug_in_drawer = true;
    } else {
      obj.position.z() = kMugRestZ;
    }
    return;
  }
  double z = kBlockRestZ;
  if (is_block(id)) {
    for (const auto& [other, pose] : s.objects) {
      if (other == id || !is_block(other)) continue;
      const Vec3 d = obj.position - pose.position;
      if (std::abs(d.x()) < kBlockSize && std::abs(d.y()) < kBlockSize) z = std::max(z, pose.position.z() + kBlockSize);
    }
  }
  obj.position.z() = z;
}

void walk(WorldState& s) {
  std::uniform_real_distribution<double> heading(0.0, 2.0 * kPi);
  for (auto& [id, pose] : s.objects) {
    if (s.ever_picked.count(id)) continue;
    const double a = heading(s.rng);
    pose.position += s.spec.walk_step * Vec3(std::cos(a), std::sin(a), 0.0);
  }
}

void update_drawer_progress(WorldState& s) {
  if (s.drawer.opening >= Drawer::kOpenThreshold) s.progress.drawer_opened = true;
  const bool handle_free = s.attached_object != std::string(kHandle);
  if (s.progress.mug_in_drawer && s.drawer.opening <= Drawer::kClosedThreshold && handle_free) {
    s.progress.drawer_closed = true;
  }
}

}  // namespace

Pose home_pose() { return {Vec3(0.0, 0.0, 0.25), top_down(0.0)}; }

Rotation top_down(double yaw_rad) { return Rotation::about_z(yaw_rad) * Rotation::about_x(kPi); }

std::pair<WorldState, SceneObservation> reset(const TaskSpec& spec, std::uint64_t seed) {
  if (!(spec.grasp_tolerance > 0.0 && spec.place_tolerance > 0.0 && spec.stack_tolerance > 0.0)) {
    throw std::invalid_argument("task tolerances must be positive");
  }
  WorldState s;
  s.spec = spec;
  s.robot_pose = home_pose();
  s.reset_seed = seed;
  s.rng = derive_rng(seed, {1});
  Rng layout = derive_rng(seed, {0});

  switch (spec.kind) {
    case TaskKind::pick_place: {
      const auto pts = sample_separated(spec, layout, 2);
      const double yaw = sample_yaw(spec, layout);
      s.objects[kCube] = {{pts[0].x(), pts[0].y(), kBlockRestZ}, Rotation::about_z(yaw)};
      s.goal_regions["goal"] = {{pts[1].x(), pts[1].y(), kBlockRestZ}, Vec3::Constant(kBlockSize), "blue"};
      break;
    }
    case TaskKind::stack:
    case TaskKind::stack_flipped:
    case TaskKind::stack_walking: {
      const auto pts = sample_separated(spec, layout, 3);
      const double yaw_r = sample_yaw(spec, layout);
      const double yaw_g = sample_yaw(spec, layout);
      s.objects["block_red"] = {{pts[0].x(), pts[0].y(), kBlockRestZ}, Rotation::about_z(yaw_r)};
      s.objects["block_green"] = {{pts[1].x(), pts[1].y(), kBlockRestZ}, Rotation::about_z(yaw_g)};
      std::string lower = "red";
      std::string upper = "green";
      if (spec.kind == TaskKind::stack_flipped) {
        std::bernoulli_distribution flip(spec.flip_probability);
        if (flip(layout)) std::swap(lower, upper);
      }
      s.goal_regions["goal_lower"] = {{pts[2].x(), pts[2].y(), kBlockRestZ}, Vec3::Constant(kBlockSize), lower};
      s.goal_regions["goal_upper"] = {
          {pts[2].x(), pts[2].y(), kBlockRestZ + kBlockSize}, Vec3::Constant(kBlockSize), upper};
      break;
    }
    case TaskKind::drawer_mug: {
      const Vec3 p = sample_xy(spec, layout, kMugRestZ);
      const double yaw = sample_yaw(spec, layout);
      s.objects[kMug] = {p, Rotation::about_z(yaw)};
      s.objects[kHandle] = {{s.drawer.closed_x, kHandleY, kHandleZ}, Rotation{}};
      s.goal_regions[kInterior] = {interior_center(s.drawer), Vec3(0.08, 0.08, 0.06), "none"};
      break;
    }
  }
  return {s, scene_observation(s)};
}

Observation observe(const WorldState& state) {
  Observation o;
  o.robot = state.robot_pose;
  o.gripper = state.gripper;
  o.held_object = state.attached_object.value_or("");
  o.objects = state.objects;
  for (const auto& [id, region] : state.goal_regions) o.objects[id] = {region.center, Rotation{}};
  return o;
}

SceneObservation scene_observation(const WorldState& state) {
  SceneObservation so;
  so.robot_pose = state.robot_pose;
  so.objects = observe(state).objects;
  so.task_metadata["task"] = std::string(to_string(state.spec.kind));
  for (const auto& [id, region] : state.goal_regions) {
    if (region.color != "none") so.task_metadata[id + "_color"] = region.color;
  }
  return so;
}

void step(WorldState& state, const Action& action) {
  if (!action.goal.position.allFinite() || !action.goal.rotation.matrix().allFinite()) {
    throw std::invalid_argument("step: action must be finite");
  }
  move_robot(state, action.goal);
  carry_attached(state);
  if (action.gripper == Gripper::closed && state.gripper == Gripper::open) {
    state.gripper = Gripper::closed;
    try_attach(state);
  } else if (action.gripper == Gripper::open && state.gripper == Gripper::closed) {
    state.gripper = Gripper::open;
    release(state);
  }
  if (state.spec.kind == TaskKind::stack_walking) walk(state);
  if (state.spec.kind == TaskKind::drawer_mug) update_drawer_progress(state);
  ++state.t;
}

std::string lower_block(const WorldState& state) {
  return "block_" + state.goal_regions.at("goal_lower").color;
}

std::string upper_block(const WorldState& state) {
  return "block_" + state.goal_regions.at("goal_upper").color;
}

bool task_success(const WorldState& state) {
  if (state.gripper != Gripper::open || state.attached_object) return false;
  const auto resting = [](const Pose& p, double z) { return std::abs(p.position.z() - z) <= 1e-6; };
  switch (state.spec.kind) {
    case TaskKind::pick_place: {
      const Pose& cube = state.objects.at(kCube);
      const Vec3& goal = state.goal_regions.at("goal").center;
      return xy_distance(cube.position, goal) <= state.spec.place_tolerance && resting(cube, kBlockRestZ);
    }
    case TaskKind::stack:
    case TaskKind::stack_flipped:
    case TaskKind::stack_walking: {
      const Pose& lower = state.objects.at(lower_block(state));
      const Pose& upper = state.objects.at(upper_block(state));
      const Vec3& goal = state.goal_regions.at("goal_lower").center;
      return xy_distance(lower.position, goal) <= state.spec.place_tolerance && resting(lower, kBlockRestZ) &&
             xy_distance(upper.position, lower.position) <= state.spec.stack_tolerance &&
             resting(upper, kBlockRestZ + kBlockSize);
    }
    case TaskKind::drawer_mug: {
      const auto& p = state.progress;
      return p.drawer_opened && p.mug_grasped && p.mug_in_drawer && p.drawer_closed && state.drawer.mug_inside &&
             state.drawer.opening <= Drawer::kClosedThreshold;
    }
  }
  return false;
}

void inject_disturbance(WorldState& state, const std::string& object_id, const Vec3& delta) {
  auto it = state.objects.find(object_id);
  if (it == state.objects.end()) throw UnknownObject("no object " + object_id);
  if (state.attached_object == object_id) throw ObjectAttached(object_id + " is held by the gripper");
  it->second.position += delta;
}

Vec3 grasp_point(const WorldState& state, const std::string& object_id) {
  auto it = state.objects.find(object_id);
  if (it == state.objects.end()) throw UnknownObject("no object " + object_id);
  return it->second.position;
}

RolloutOutcome rollout(const WorldState& start, const TrajectorySegment& traj,
                       const std::optional<Disturbance>& disturbance) {
  if (traj.poses.empty()) throw std::invalid_argument("rollout needs a non-empty trajectory");
  if (traj.gripper.size() != traj.poses.size()) throw std::invalid_argument("trajectory gripper size mismatch");
  RolloutOutcome out;
  WorldState s = start;
  const int cap = std::max(1, s.spec.convergence_cap);
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    const Action action{traj.poses[i], traj.gripper[i]};
    int on_point = 0;
    do {
      if (disturbance && out.steps == disturbance->at_step && s.attached_object != disturbance->object_id) {
        inject_disturbance(s, disturbance->object_id, disturbance->delta);
      }
      out.observations.push_back(observe(s));
      step(s, action);
      out.actions.push_back(action);
      ++out.steps;
      ++on_point;
    } while (!(s.robot_pose == action.goal) && on_point < cap);
  }
  out.success = task_success(s);
  out.final_state = std::move(s);
  return out;
}

RolloutOutcome replay_actions(const WorldState& start, const std::vector<Action>& actions) {
  RolloutOutcome out;
  WorldState s = start;
  for (const auto& a : actions) {
    out.observations.push_back(observe(s));
    step(s, a);
    out.actions.push_back(a);
    ++out.steps;
  }
  out.success = task_success(s);
  out.final_state = std::move(s);
  return out;
}

Demonstration to_demonstration(const RolloutOutcome& outcome, std::string id, TaskKind kind,
                               Provenance provenance) {
  Demonstration d;
  d.id = std::move(id);
  d.task = kind;
  d.observations = outcome.observations;
  d.actions = outcome.actions;
  d.provenance = std::move(provenance);
  return d;
}

void write_trace_jsonl(std::ostream& out, const RolloutOutcome& outcome) {
  for (std::size_t i = 0; i < outcome.actions.size(); ++i) {
    const nlohmann::json line{{"t", i},
                              {"observation", observation_to_json(outcome.observations[i])},
                              {"action", action_to_json(outcome.actions[i])}};
    out << line.dump() << '\n';
  }
}

}  // namespace demoaug
