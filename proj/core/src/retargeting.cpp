#include "demoaug/retargeting.hpp"

#include "demoaug/errors.hpp"
#include "demoaug/prompt_text.hpp"

#include <cmath>

namespace demoaug {

namespace {

Vec3 read_vec3(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw MalformedResponse(std::string(key) + " must be a 3-array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw MalformedResponse(std::string(key) + " must be numeric");
    v[i] = a[i].get<double>();
  }
  if (!v.allFinite()) throw MalformedResponse(std::string(key) + " must be finite");
  return v;
}

}  // namespace

RetargetRequest build_request(const Annotation& annotation, const TaskDescription& task,
                              const SceneObservation& observation, const Rotation& home) {
  return {annotation.description_text, task, observation, annotation.keyposes, home};
}

std::string render_request(const RetargetRequest& request) {
  std::string objects;
  for (const auto& [id, pose] : request.observation.objects) {
    objects += id + " " + format_pose(pose) + "\n";
  }
  if (objects.empty()) objects = "(no objects observed)\n";
  std::string metadata;
  for (const auto& [key, value] : request.observation.task_metadata) {
    metadata += key + ": " + value + "\n";
  }
  return prompts::render("retarget.v1",
                         {{"task", request.task.text},
                          {"description", request.description_text},
                          {"robot", format_pose(request.observation.robot_pose, request.home)},
                          {"objects", objects},
                          {"metadata", metadata}});
}

std::vector<Keypose> parse_retarget_response(const std::string& response, const RetargetRequest& request) {
  const std::string body = prompts::extract_json_object(response);
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (body.empty() || j.is_discarded() || !j.is_object()) {
    throw MalformedResponse("retarget response is not a JSON object");
  }
  try {
    const auto& list = j.at("keyposes");
    if (!list.is_array() || list.size() != request.keyposes.size()) {
      throw MalformedResponse("retarget response must list exactly " +
                              std::to_string(request.keyposes.size()) + " keyposes");
    }
    std::vector<Keypose> out = request.keyposes;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& item = list[i];
      if (item.contains("t")) {
        const auto& t = item.at("t");
        if (!t.is_number() || t.get<double>() != static_cast<double>(out[i].t)) {
          throw MalformedResponse("retarget keypose " + std::to_string(i) + " changed its timestep");
        }
      }
      out[i].pose = pose_from_mm_deg(read_vec3(item, "pos_mm"), read_vec3(item, "euler_deg"), request.home);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("retarget response has wrong shape: ") + e.what());
  }
}

RetargetResult retarget(Gateway& gateway, const RetargetRequest& request, const RetargetOptions& options) {
  const std::string prompt = render_request(request);
  const int attempts = std::max(1, options.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const Session session = gateway.fresh_session();
    const Completion c = gateway.complete(session, prompt, request.observation.images, options.params);
    try {
      return {parse_retarget_response(c.text, request), attempt};
    } catch (const MalformedResponse& e) {
      last_error = e.what();
    }
  }
  throw RetargetFailed("retargeting failed after " + std::to_string(attempts) + " attempts: " + last_error,
                       attempts);
}

SceneObservation initial_observation(const Demonstration& demo) {
  validate(demo);
  const Observation& o = demo.observations.front();
  SceneObservation s;
  s.robot_pose = o.robot;
  s.objects = o.objects;
  return s;
}

std::vector<Keypose> scripted_retarget(const Annotation& annotation, const SceneObservation& obs,
                                       const SceneObservation& old_obs, double noise_std, Rng& rng) {
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  std::vector<Keypose> out = annotation.keyposes;
  for (auto& k : out) {
    if (k.relevant_objects.empty()) continue;
    const std::string& id = k.relevant_objects.front();
    auto now = obs.objects.find(id);
    auto before = old_obs.objects.find(id);
    if (now == obs.objects.end() || before == old_obs.objects.end()) {
      throw UnknownObject("object " + id + " missing from an observation");
    }
    const double dyaw = (now->second.rotation * before->second.rotation.inverse()).yaw();
    k.pose.position += now->second.position - before->second.position;
    k.pose.rotation = Rotation::about_z(dyaw) * k.pose.rotation;
    if (noise_std > 0.0) {
      const double dx = noise(rng);
      const double dy = noise(rng);
      const double dz = noise(rng);
      k.pose.position += Vec3(dx, dy, dz);
    }
  }
  return out;
}

}  // namespace demoaug
