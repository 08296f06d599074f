#include "demoaug/campaign.hpp"

#include "demoaug/errors.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace demoaug {

namespace {

using json = nlohmann::json;

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key " + where + "." + key);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

ComponentMode mode_from(const std::string& s, const std::string& where) {
  if (s == "scripted") return ComponentMode::scripted;
  if (s == "llm") return ComponentMode::llm;
  throw ConfigError(where + ".mode must be \"scripted\" or \"llm\"");
}

const char* mode_name(ComponentMode m) { return m == ComponentMode::scripted ? "scripted" : "llm"; }

}  // namespace

CampaignConfig config_from_json(const json& j) {
  only_keys(j, "config",
            {"task", "goal_successes", "seed", "source_demos", "bandit", "annotation", "retargeting", "gateway",
             "output", "include_baseline", "max_rollouts"});
  CampaignConfig cfg;
  if (j.contains("task")) {
    const json& t = j.at("task");
    only_keys(t, "task",
              {"kind", "description", "place_tolerance", "stack_tolerance", "grasp_tolerance", "walk_step",
               "region_x", "region_y", "yaw_range_deg", "max_step", "max_angle_step", "convergence_cap"});
    std::string kind = std::string(to_string(cfg.task.kind));
    read(t, "kind", kind, "task");
    try {
      cfg.task.kind = task_kind_from_string(kind);
    } catch (const std::invalid_argument&) {
      throw ConfigError("unknown task kind " + kind);
    }
    read(t, "description", cfg.task_text, "task");
    read(t, "place_tolerance", cfg.task.place_tolerance, "task");
    read(t, "stack_tolerance", cfg.task.stack_tolerance, "task");
    read(t, "grasp_tolerance", cfg.task.grasp_tolerance, "task");
    read(t, "walk_step", cfg.task.walk_step, "task");
    read(t, "region_x", cfg.task.region_x, "task");
    read(t, "region_y", cfg.task.region_y, "task");
    read(t, "yaw_range_deg", cfg.task.yaw_range_deg, "task");
    read(t, "max_step", cfg.task.max_step, "task");
    read(t, "max_angle_step", cfg.task.max_angle_step, "task");
    read(t, "convergence_cap", cfg.task.convergence_cap, "task");
    if (cfg.task.place_tolerance <= 0 || cfg.task.stack_tolerance <= 0 || cfg.task.grasp_tolerance <= 0) {
      throw ConfigError("task tolerances must be positive");
    }
  }
  read(j, "goal_successes", cfg.goal_successes, "config");
  read(j, "seed", cfg.seed, "config");
  read(j, "include_baseline", cfg.include_baseline, "config");
  read(j, "max_rollouts", cfg.max_rollouts, "config");
  if (cfg.goal_successes < 1) throw ConfigError("goal_successes must be at least 1");

  if (j.contains("source_demos")) {
    const json& s = j.at("source_demos");
    only_keys(s, "source_demos", {"count", "seed"});
    read(s, "count", cfg.source_demo_count, "source_demos");
    read(s, "seed", cfg.source_seed, "source_demos");
  }
  if (j.contains("bandit")) {
    const json& b = j.at("bandit");
    only_keys(b, "bandit", {"k", "m", "mode"});
    read(b, "k", cfg.k, "bandit");
    read(b, "m", cfg.m, "bandit");
    std::string mode = "bandit";
    read(b, "mode", mode, "bandit");
    if (mode == "bandit") {
      cfg.mode = CampaignMode::bandit;
    } else if (mode == "no_rl") {
      cfg.mode = CampaignMode::no_rl;
    } else {
      throw ConfigError("bandit.mode must be \"bandit\" or \"no_rl\"");
    }
  }
  if (j.contains("annotation")) {
    const json& a = j.at("annotation");
    only_keys(a, "annotation", {"mode", "retries", "cadence", "jitter", "max_viewframes", "temperature", "max_tokens"});
    std::string mode = mode_name(cfg.annotator);
    read(a, "mode", mode, "annotation");
    cfg.annotator = mode_from(mode, "annotation");
    read(a, "retries", cfg.annotation_retries, "annotation");
    read(a, "cadence", cfg.cadence, "annotation");
    read(a, "jitter", cfg.jitter, "annotation");
    read(a, "max_viewframes", cfg.max_viewframes, "annotation");
    read(a, "temperature", cfg.annotation_params.temperature, "annotation");
    read(a, "max_tokens", cfg.annotation_params.max_tokens, "annotation");
    if (cfg.cadence < 1 || cfg.jitter < 0 || cfg.jitter >= cfg.cadence) {
      throw ConfigError("annotation cadence must be >= 1 with 0 <= jitter < cadence");
    }
  }
  if (j.contains("retargeting")) {
    const json& r = j.at("retargeting");
    only_keys(r, "retargeting", {"mode", "retries", "temperature", "max_tokens", "noise_mm"});
    std::string mode = mode_name(cfg.retargeter);
    read(r, "mode", mode, "retargeting");
    cfg.retargeter = mode_from(mode, "retargeting");
    read(r, "retries", cfg.retarget_retries, "retargeting");
    read(r, "temperature", cfg.retarget_params.temperature, "retargeting");
    read(r, "max_tokens", cfg.retarget_params.max_tokens, "retargeting");
    if (r.contains("noise_mm")) {
      const json& n = r.at("noise_mm");
      if (n.is_number_integer()) {
        cfg.noise_min_mm = cfg.noise_max_mm = n.get<int>();
      } else if (n.is_array() && n.size() == 2 && n[0].is_number_integer() && n[1].is_number_integer()) {
        cfg.noise_min_mm = n[0].get<int>();
        cfg.noise_max_mm = n[1].get<int>();
      } else {
        throw ConfigError("retargeting.noise_mm must be an integer or [min, max]");
      }
      if (cfg.noise_min_mm < 0 || cfg.noise_max_mm < cfg.noise_min_mm) throw ConfigError("bad noise_mm range");
    }
  }
  if (j.contains("gateway")) {
    const json& g = j.at("gateway");
    only_keys(g, "gateway", {"endpoint", "model", "credential_env", "timeout_ms", "connect_timeout_ms", "max_retries",
                             "base_delay_ms"});
    read(g, "endpoint", cfg.gateway.endpoint, "gateway");
    std::string model;
    read(g, "model", model, "gateway");
    cfg.annotation_params.model = model;
    cfg.retarget_params.model = model;
    read(g, "credential_env", cfg.gateway.credential_env, "gateway");
    int timeout_ms = static_cast<int>(cfg.annotation_params.timeout.count());
    read(g, "timeout_ms", timeout_ms, "gateway");
    cfg.annotation_params.timeout = cfg.retarget_params.timeout = std::chrono::milliseconds(timeout_ms);
    int connect_ms = static_cast<int>(cfg.gateway.connect_timeout.count());
    read(g, "connect_timeout_ms", connect_ms, "gateway");
    cfg.gateway.connect_timeout = std::chrono::milliseconds(connect_ms);
    read(g, "max_retries", cfg.gateway.retry.max_retries, "gateway");
    int delay_ms = static_cast<int>(cfg.gateway.retry.base_delay.count());
    read(g, "base_delay_ms", delay_ms, "gateway");
    cfg.gateway.retry.base_delay = std::chrono::milliseconds(delay_ms);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    only_keys(o, "output", {"dir"});
    std::string dir;
    read(o, "dir", dir, "output");
    cfg.output_dir = dir;
  }
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return config_from_json(j);
}

json config_to_json(const CampaignConfig& cfg) {
  return {{"task",
           {{"kind", to_string(cfg.task.kind)},
            {"description", cfg.task_text},
            {"place_tolerance", cfg.task.place_tolerance},
            {"stack_tolerance", cfg.task.stack_tolerance},
            {"grasp_tolerance", cfg.task.grasp_tolerance},
            {"walk_step", cfg.task.walk_step},
            {"region_x", cfg.task.region_x},
            {"region_y", cfg.task.region_y},
            {"yaw_range_deg", cfg.task.yaw_range_deg},
            {"max_step", cfg.task.max_step},
            {"max_angle_step", cfg.task.max_angle_step},
            {"convergence_cap", cfg.task.convergence_cap}}},
          {"goal_successes", cfg.goal_successes},
          {"seed", cfg.seed},
          {"source_demos", {{"count", cfg.source_demo_count}, {"seed", cfg.source_seed}}},
          {"bandit", {{"k", cfg.k}, {"m", cfg.m}, {"mode", cfg.mode == CampaignMode::bandit ? "bandit" : "no_rl"}}},
          {"annotation",
           {{"mode", mode_name(cfg.annotator)},
            {"retries", cfg.annotation_retries},
            {"cadence", cfg.cadence},
            {"jitter", cfg.jitter},
            {"max_viewframes", cfg.max_viewframes},
            {"temperature", cfg.annotation_params.temperature},
            {"max_tokens", cfg.annotation_params.max_tokens}}},
          {"retargeting",
           {{"mode", mode_name(cfg.retargeter)},
            {"retries", cfg.retarget_retries},
            {"temperature", cfg.retarget_params.temperature},
            {"max_tokens", cfg.retarget_params.max_tokens},
            {"noise_mm", {cfg.noise_min_mm, cfg.noise_max_mm}}}},
          {"gateway",
           {{"endpoint", cfg.gateway.endpoint},
            {"model", cfg.annotation_params.model},
            {"credential_env", cfg.gateway.credential_env},
            {"timeout_ms", cfg.annotation_params.timeout.count()},
            {"connect_timeout_ms", cfg.gateway.connect_timeout.count()},
            {"max_retries", cfg.gateway.retry.max_retries},
            {"base_delay_ms", cfg.gateway.retry.base_delay.count()}}},
          {"output", {{"dir", cfg.output_dir.string()}}},
          {"include_baseline", cfg.include_baseline},
          {"max_rollouts", cfg.max_rollouts}};
}

}  // namespace demoaug
