#include "demoaug/scripted_policies.hpp"

#include "demoaug/errors.hpp"

#include <cmath>

namespace demoaug {

namespace {

// Horizontal offset at which the gripper stops re-centering at approach
// height and starts descending while tracking the object.
constexpr double kTrackRadius = 0.005;
constexpr double kCloseRadius = 0.002;
constexpr double kExact = 1e-9;

double xy_distance(const Vec3& a, const Vec3& b) { return (a - b).head<2>().norm(); }

Action hold(const WorldState& s, Gripper g) { return {s.robot_pose, g}; }

Action move_toward(const WorldState& s, const Vec3& target, const Rotation& target_rot) {
  Pose goal = s.robot_pose;
  const Vec3 d = target - goal.position;
  const double dist = d.norm();
  goal.position = dist <= kScriptedStep ? target : Vec3(goal.position + d * (kScriptedStep / dist));
  const Rotation delta = target_rot * goal.rotation.inverse();
  const double angle = delta.angle();
  if (angle <= kScriptedAngleStep) {
    goal.rotation = target_rot;
  } else {
    goal.rotation = Rotation::from_rotation_vector(delta.rotation_vector() * (kScriptedAngleStep / angle)) *
                    goal.rotation;
  }
  return {goal, s.gripper};
}

// Grasp heading for a square object: its yaw folded into (-45, 45] deg.
double grasp_yaw(const Pose& object) {
  const double q = kPi / 2.0;
  double y = std::remainder(object.rotation.yaw(), q);
  if (y <= -q / 2.0) y += q;
  return y;
}

Action lift(const WorldState& s) {
  const Vec3& p = s.robot_pose.position;
  return move_toward(s, {p.x(), p.y(), kApproachZ}, s.robot_pose.rotation);
}

// Pick `obj` and put its center at `place`.
Action transport(const WorldState& s, const std::string& obj, const Vec3& place) {
  const Pose& ee = s.robot_pose;
  if (s.attached_object == obj) {
    const Vec3 target = ee.position + (place - s.objects.at(obj).position);
    if (xy_distance(ee.position, target) > kExact) {
      if (ee.position.z() < kApproachZ - kExact) return lift(s);
      return move_toward(s, {target.x(), target.y(), kApproachZ}, ee.rotation);
    }
    if ((ee.position - target).norm() > kExact) return move_toward(s, target, ee.rotation);
    return hold(s, Gripper::open);
  }
  if (s.attached_object || s.gripper == Gripper::closed) return hold(s, Gripper::open);
  const Pose& o = s.objects.at(obj);
  const Rotation want = top_down(grasp_yaw(o));
  if (xy_distance(ee.position, o.position) > kTrackRadius) {
    if (ee.position.z() < kApproachZ - kExact) return lift(s);
    return move_toward(s, {o.position.x(), o.position.y(), kApproachZ}, want);
  }
  if ((ee.position - o.position).norm() > kCloseRadius || angle_between(ee.rotation, want) > kExact) {
    return move_toward(s, o.position, want);
  }
  return hold(s, Gripper::closed);
}

// Slide the drawer handle to the given opening.
Action operate_handle(const WorldState& s, double opening) {
  const std::string handle = "drawer_handle";
  if (s.attached_object == handle) {
    const double dx = opening - s.drawer.opening;
    if (std::abs(dx) > kExact) {
      return move_toward(s, s.robot_pose.position + Vec3(dx, 0.0, 0.0), s.robot_pose.rotation);
    }
    return hold(s, Gripper::open);
  }
  return transport(s, handle, s.objects.at(handle).position);
}

Action retreat(const WorldState& s) {
  if (s.attached_object || s.gripper == Gripper::closed) return hold(s, Gripper::open);
  return lift(s);
}

bool resting_at(const WorldState& s, const std::string& id, const Vec3& where, double tol) {
  if (s.attached_object == id) return false;
  const Pose& p = s.objects.at(id);
  return xy_distance(p.position, where) <= tol && std::abs(p.position.z() - where.z()) <= 1e-6;
}

}  // namespace

Action scripted_action(const WorldState& s) {
  switch (s.spec.kind) {
    case TaskKind::pick_place: {
      const Vec3& goal = s.goal_regions.at("goal").center;
      if (!resting_at(s, "cube", goal, s.spec.place_tolerance / 2.0)) return transport(s, "cube", goal);
      return retreat(s);
    }
    case TaskKind::stack:
    case TaskKind::stack_flipped:
    case TaskKind::stack_walking: {
      const std::string lower = lower_block(s);
      const std::string upper = upper_block(s);
      const Vec3& goal = s.goal_regions.at("goal_lower").center;
      if (!resting_at(s, lower, goal, s.spec.place_tolerance / 2.0)) return transport(s, lower, goal);
      Vec3 top = s.objects.at(lower).position;
      top.z() += kBlockSize;
      if (!resting_at(s, upper, top, s.spec.stack_tolerance / 2.0)) return transport(s, upper, top);
      return retreat(s);
    }
    case TaskKind::drawer_mug: {
      const auto& p = s.progress;
      const bool holding_handle = s.attached_object == std::string("drawer_handle");
      if (!p.mug_in_drawer && (s.drawer.opening < Drawer::kFullOpen - kExact || holding_handle)) {
        return operate_handle(s, Drawer::kFullOpen);
      }
      if (!p.mug_in_drawer) return transport(s, "mug", s.goal_regions.at("drawer_interior").center);
      if (!p.drawer_closed) return operate_handle(s, 0.0);
      return retreat(s);
    }
  }
  throw std::logic_error("unhandled task kind");
}

bool scripted_done(const WorldState& s) {
  return task_success(s) && s.gripper == Gripper::open && s.robot_pose.position.z() >= kApproachZ - kExact;
}

RolloutOutcome run_scripted(const WorldState& start, int max_steps) {
  RolloutOutcome out;
  WorldState s = start;
  while (!scripted_done(s) && out.steps < max_steps) {
    const Action a = scripted_action(s);
    out.observations.push_back(observe(s));
    step(s, a);
    out.actions.push_back(a);
    ++out.steps;
  }
  out.success = task_success(s);
  out.final_state = std::move(s);
  return out;
}

Demonstration record_scripted_demo(const TaskSpec& spec, std::uint64_t seed, std::string id) {
  const auto [state, obs] = reset(spec, seed);
  const RolloutOutcome r = run_scripted(state);
  if (!r.success) throw Error("scripted solver failed on " + std::string(to_string(spec.kind)) + " seed " +
                              std::to_string(seed));
  return to_demonstration(r, std::move(id), spec.kind, {Provenance::Kind::human_scripted, "", seed});
}

std::vector<Demonstration> make_source_demos(const TaskSpec& spec, int count, std::uint64_t seed) {
  std::vector<Demonstration> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    out.push_back(record_scripted_demo(spec, s, std::string(to_string(spec.kind)) + "-source-" + std::to_string(i)));
  }
  return out;
}

}  // namespace demoaug
