#include "demoaug/demonstration.hpp"

#include "demoaug/errors.hpp"

#include <array>
#include <stdexcept>

namespace demoaug {

namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 5> kTaskNames{{
    {TaskKind::pick_place, "pick_place"},
    {TaskKind::stack, "stack"},
    {TaskKind::stack_flipped, "stack_flipped"},
    {TaskKind::stack_walking, "stack_walking"},
    {TaskKind::drawer_mug, "drawer_mug"},
}};

std::string_view gripper_name(Gripper g) { return g == Gripper::closed ? "closed" : "open"; }

Gripper gripper_from(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  if (s == "closed") return Gripper::closed;
  if (s == "open") return Gripper::open;
  throw std::invalid_argument("unknown gripper state: " + s);
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  for (const auto& [k, name] : kTaskNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

TaskKind task_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kTaskNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown task kind: " + std::string(name));
}

void validate(const Demonstration& demo) {
  if (demo.observations.size() < 2) throw Error("demonstration " + demo.id + " has fewer than 2 steps");
  if (demo.observations.size() != demo.actions.size()) {
    throw Error("demonstration " + demo.id + " has mismatched observation/action counts");
  }
}

// Rotations are stored as row-major matrices so that a write/read cycle is
// bit-exact.
nlohmann::json pose_to_json(const Pose& p) {
  const Mat3& m = p.rotation.matrix();
  return {{"p", {p.position.x(), p.position.y(), p.position.z()}},
          {"R", {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)}}};
}

Pose pose_from_json(const nlohmann::json& j) {
  const auto& p = j.at("p");
  const auto& r = j.at("R");
  if (p.size() != 3 || r.size() != 9) throw std::invalid_argument("pose arrays have wrong length");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = r.at(i).get<double>();
  return {Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()),
          Rotation::from_matrix(m)};
}

nlohmann::json observation_to_json(const Observation& o) {
  nlohmann::json objects = nlohmann::json::object();
  for (const auto& [id, pose] : o.objects) objects[id] = pose_to_json(pose);
  return {{"robot", pose_to_json(o.robot)},
          {"gripper", gripper_name(o.gripper)},
          {"held", o.held_object},
          {"objects", std::move(objects)}};
}

Observation observation_from_json(const nlohmann::json& j) {
  Observation ob;
  ob.robot = pose_from_json(j.at("robot"));
  ob.gripper = gripper_from(j.at("gripper"));
  ob.held_object = j.at("held").get<std::string>();
  for (const auto& [id, pose] : j.at("objects").items()) ob.objects[id] = pose_from_json(pose);
  return ob;
}

nlohmann::json action_to_json(const Action& a) {
  return {{"goal", pose_to_json(a.goal)}, {"gripper", gripper_name(a.gripper)}};
}

Action action_from_json(const nlohmann::json& j) {
  return {pose_from_json(j.at("goal")), gripper_from(j.at("gripper"))};
}

nlohmann::json demo_to_json(const Demonstration& demo) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : demo.observations) obs.push_back(observation_to_json(o));
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& a : demo.actions) acts.push_back(action_to_json(a));
  const bool generated = demo.provenance.kind == Provenance::Kind::generated;
  return {{"id", demo.id},
          {"task", to_string(demo.task)},
          {"provenance",
           {{"kind", generated ? "generated" : "human_scripted"},
            {"annotation_id", demo.provenance.annotation_id},
            {"reset_seed", demo.provenance.reset_seed}}},
          {"observations", std::move(obs)},
          {"actions", std::move(acts)}};
}

Demonstration demo_from_json(const nlohmann::json& j) {
  Demonstration d;
  d.id = j.at("id").get<std::string>();
  d.task = task_kind_from_string(j.at("task").get<std::string>());
  const auto& prov = j.at("provenance");
  const auto kind = prov.at("kind").get<std::string>();
  if (kind == "generated") {
    d.provenance.kind = Provenance::Kind::generated;
  } else if (kind == "human_scripted") {
    d.provenance.kind = Provenance::Kind::human_scripted;
  } else {
    throw std::invalid_argument("unknown provenance kind: " + kind);
  }
  d.provenance.annotation_id = prov.at("annotation_id").get<std::string>();
  d.provenance.reset_seed = prov.at("reset_seed").get<std::uint64_t>();
  for (const auto& o : j.at("observations")) d.observations.push_back(observation_from_json(o));
  for (const auto& a : j.at("actions")) d.actions.push_back(action_from_json(a));
  validate(d);
  return d;
}

}  // namespace demoaug
