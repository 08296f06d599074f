#include "demoaug/campaign.hpp"

#include "demoaug/errors.hpp"
#include "demoaug/retargeting.hpp"
#include "demoaug/scripted_policies.hpp"
#include "demoaug/warping.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <sstream>

namespace demoaug {

namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointVersion = 1;

// Annotation JSON keeps poses in mm / degrees; the checkpoint also stores the
// raw matrices so a resumed campaign warps with bit-identical keyposes.
nlohmann::json annotation_to_exact_json(const Annotation& a) {
  nlohmann::json j = annotation_to_json(a);
  for (std::size_t i = 0; i < a.keyposes.size(); ++i) j["keyposes"][i]["pose"] = pose_to_json(a.keyposes[i].pose);
  return j;
}

Annotation annotation_from_exact_json(const nlohmann::json& j) {
  Annotation a = annotation_from_json(j);
  for (std::size_t i = 0; i < a.keyposes.size(); ++i) a.keyposes[i].pose = pose_from_json(j.at("keyposes")[i].at("pose"));
  return a;
}

bool same_observation(const Observation& a, const Observation& b) {
  return a.robot == b.robot && a.gripper == b.gripper && a.held_object == b.held_object && a.objects == b.objects;
}

}  // namespace

Campaign::Campaign(CampaignConfig cfg, Gateway* gateway) : cfg_(std::move(cfg)), gateway_(gateway) {
  if (cfg_.goal_successes < 1) throw ConfigError("goal_successes must be at least 1");
  if (cfg_.source_demo_count < 1) throw ConfigError("at least one source demonstration is required");
  if (cfg_.k < 1 || cfg_.m < 1) throw ConfigError("bandit k and m must be positive");
  if (cfg_.noise_min_mm < 0 || cfg_.noise_max_mm < cfg_.noise_min_mm) throw ConfigError("bad noise range");
  const bool needs_gateway = cfg_.annotator == ComponentMode::llm || cfg_.retargeter == ComponentMode::llm;
  if (needs_gateway && !gateway_) throw ConfigError("llm mode needs a gateway");

  sources_ = make_source_demos(cfg_.task, cfg_.source_demo_count, cfg_.source_seed);
  home_ = sources_.front().observations.front().robot.rotation;
  bandit_.goal_successes = cfg_.goal_successes;
  bandit_.seed = cfg_.seed;
  if (!cfg_.output_dir.empty()) {
    fs::create_directories(cfg_.output_dir);
    if (fs::exists(path("checkpoint.json"))) load_checkpoint();
  }
}

fs::path Campaign::path(const char* name) const { return cfg_.output_dir / name; }

CampaignReport Campaign::run(std::optional<int> stop_after) {
  const auto t0 = std::chrono::steady_clock::now();
  int done = 0;
  while (bandit_.current_successes < bandit_.goal_successes && rollouts_ < cfg_.max_rollouts &&
         (!stop_after || done < *stop_after)) {
    run_one();
    ++done;
  }
  elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg_.output_dir.empty()) save_checkpoint();
  CampaignReport rep = report();
  if (cfg_.include_baseline && cfg_.mode == CampaignMode::bandit &&
      bandit_.current_successes >= bandit_.goal_successes) {
    CampaignConfig base = cfg_;
    base.mode = CampaignMode::no_rl;
    base.output_dir.clear();
    base.include_baseline = false;
    rep.baseline_rate = Campaign(base, gateway_).run().success_rate();
  }
  return rep;
}

void Campaign::run_one() {
  const int r = rollouts_;
  const std::uint64_t rs = derive_seed(cfg_.seed, {static_cast<std::uint64_t>(r)});
  Rng decision = derive_rng(rs, {0});
  bool add = true;
  if (cfg_.mode == CampaignMode::bandit && !bandit_.arms.empty()) {
    const int horizon = estimate_horizon(bandit_);
    const PriorFit prior = fit_arm_prior(bandit_.arms, cfg_.m, decision);
    add = decide_new_arm(bandit_, horizon, prior, cfg_.k, decision);
  }
  const std::string demo_id = "gen-" + std::to_string(r);
  if (add) {
    ++bandit_.new_arm_attempts;
    std::optional<ArmInfo> arm;
    try {
      arm = create_arm(rs);
    } catch (const AnnotationFailed&) {
      ++annotation_failures_;
    }
    if (arm && execute(arm->annotation, arm->noise_mm, rs, demo_id)) {
      ++bandit_.new_arm_successes;
      bandit_.arms.push_back({arm->annotation.id, 1, 0});
      arms_.push_back(std::move(*arm));
    } else {
      ++discarded_;
    }
  } else {
    const std::size_t i = thompson_select(bandit_, decision);
    const bool success = execute(arms_[i].annotation, arms_[i].noise_mm, rs, demo_id);
    record_outcome(bandit_, i, success);
  }
  ++rollouts_;
  if (!cfg_.output_dir.empty()) save_checkpoint();
}

Campaign::ArmInfo Campaign::create_arm(std::uint64_t rollout_seed) {
  const int index = bandit_.new_arm_attempts - 1;
  Rng pick = derive_rng(rollout_seed, {2});
  std::uniform_int_distribution<std::size_t> which(0, sources_.size() - 1);
  const Demonstration& src = sources_[which(pick)];

  ArmInfo arm;
  if (cfg_.noise_max_mm > 0) {
    Rng nr = derive_rng(cfg_.seed, {0xA11, static_cast<std::uint64_t>(index)});
    std::uniform_int_distribution<int> noise(cfg_.noise_min_mm, cfg_.noise_max_mm);
    arm.noise_mm = noise(nr);
  }
  const std::string id = "ann-" + std::to_string(index);
  if (cfg_.annotator == ComponentMode::scripted) {
    arm.annotation = scripted_annotate(src, cfg_.task.kind);
    arm.annotation.id = id;
  } else {
    AnnotationOptions opts;
    opts.cadence = cfg_.cadence;
    opts.jitter = cfg_.jitter;
    opts.seed = derive_seed(rollout_seed, {3});
    opts.max_viewframes = cfg_.max_viewframes;
    opts.max_retries = cfg_.annotation_retries;
    opts.params = cfg_.annotation_params;
    opts.annotation_id = id;
    arm.annotation = create_annotation(*gateway_, src, {cfg_.task_text}, home_, opts).annotation;
  }
  return arm;
}

bool Campaign::execute(const Annotation& ann, double noise_mm, std::uint64_t rollout_seed, std::string demo_id) {
  const std::uint64_t scene_seed = derive_seed(rollout_seed, {1});
  auto [world, obs] = reset(cfg_.task, scene_seed);
  const Demonstration* src = nullptr;
  for (const auto& d : sources_) {
    if (d.id == ann.source_demo_id) src = &d;
  }
  if (!src) throw Error("annotation " + ann.id + " refers to unknown demo " + ann.source_demo_id);

  std::vector<Keypose> kps;
  try {
    if (cfg_.retargeter == ComponentMode::scripted) {
      Rng nr = derive_rng(rollout_seed, {4});
      kps = scripted_retarget(ann, obs, initial_observation(*src), noise_mm / 1000.0, nr);
    } else {
      RetargetOptions opts;
      opts.max_retries = cfg_.retarget_retries;
      opts.params = cfg_.retarget_params;
      kps = retarget(*gateway_, build_request(ann, {cfg_.task_text}, obs, home_), opts).keyposes;
    }
  } catch (const RetargetFailed&) {
    ++retarget_failures_;
    return false;
  } catch (const UnknownObject&) {
    ++retarget_failures_;
    return false;
  }

  TrajectorySegment traj;
  try {
    traj = warp_trajectory_by_keyposes(*src, timed_poses(ann.keyposes), timed_poses(kps));
  } catch (const DegenerateChord&) {
    return false;
  } catch (const KeyposeMismatch&) {
    return false;
  }
  const RolloutOutcome out = rollout(world, traj);
  if (!out.success) return false;
  Demonstration d =
      to_demonstration(out, std::move(demo_id), cfg_.task.kind, {Provenance::Kind::generated, ann.id, scene_seed});
  if (!cfg_.output_dir.empty()) append_dataset(path("dataset.jsonl"), d);
  dataset_.push_back(std::move(d));
  ++bandit_.current_successes;
  return true;
}

void Campaign::save_checkpoint() const {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : arms_) arms.push_back({{"annotation", annotation_to_exact_json(a.annotation)}, {"noise_mm", a.noise_mm}});
  const nlohmann::json j{{"version", kCheckpointVersion},
                         {"bandit", bandit_to_json(bandit_)},
                         {"rollouts", rollouts_},
                         {"discarded", discarded_},
                         {"annotation_failures", annotation_failures_},
                         {"retarget_failures", retarget_failures_},
                         {"elapsed_seconds", elapsed_},
                         {"arms", arms}};
  const fs::path tmp = path("checkpoint.json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump() << '\n';
  }
  fs::rename(tmp, path("checkpoint.json"));
}

void Campaign::load_checkpoint() {
  std::ifstream in(path("checkpoint.json"));
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("checkpoint is not valid JSON");
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    bandit_ = bandit_from_json(j.at("bandit"));
    if (bandit_.seed != cfg_.seed || bandit_.goal_successes != cfg_.goal_successes) {
      throw ConfigError("checkpoint belongs to a campaign with a different seed or goal");
    }
    rollouts_ = j.at("rollouts").get<int>();
    discarded_ = j.at("discarded").get<int>();
    annotation_failures_ = j.at("annotation_failures").get<int>();
    retarget_failures_ = j.at("retarget_failures").get<int>();
    elapsed_ = j.at("elapsed_seconds").get<double>();
    arms_.clear();
    for (const auto& a : j.at("arms")) {
      arms_.push_back({annotation_from_exact_json(a.at("annotation")), a.at("noise_mm").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint has wrong shape: ") + e.what());
  }
  if (arms_.size() != bandit_.arms.size()) throw ConfigError("checkpoint arm lists disagree");

  // The dataset may hold one line more than the checkpoint if the process
  // stopped between the append and the checkpoint write.
  const fs::path data = path("dataset.jsonl");
  dataset_ = fs::exists(data) ? read_dataset(data) : std::vector<Demonstration>{};
  const auto expected = static_cast<std::size_t>(bandit_.current_successes);
  if (dataset_.size() < expected) throw ConfigError("dataset is shorter than the checkpoint records");
  if (dataset_.size() > expected) {
    dataset_.resize(expected);
    write_dataset(data, dataset_);
  }
}

CampaignReport Campaign::report() const {
  CampaignReport r;
  r.mode = cfg_.mode == CampaignMode::bandit ? "bandit" : "no_rl";
  r.total_rollouts = rollouts_;
  r.successes = bandit_.current_successes;
  r.new_arm_attempts = bandit_.new_arm_attempts;
  r.new_arm_successes = bandit_.new_arm_successes;
  r.discarded_new_arm_failures = discarded_;
  r.annotation_failures = annotation_failures_;
  r.retarget_failures = retarget_failures_;
  double best_mean = -1.0;
  for (std::size_t i = 0; i < bandit_.arms.size(); ++i) {
    const Arm& a = bandit_.arms[i];
    r.arms.push_back({a.annotation_id, a.n_suc, a.n_fail, arms_[i].noise_mm});
    if (a.posterior_mean() > best_mean) {
      best_mean = a.posterior_mean();
      r.best_arm_rate = double(a.n_suc) / a.pulls();
    }
  }
  r.wall_seconds = elapsed_;
  return r;
}

CampaignReport run_campaign(const CampaignConfig& cfg, Gateway* gateway) { return Campaign(cfg, gateway).run(); }

nlohmann::json report_to_json(const CampaignReport& r) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : r.arms) {
    arms.push_back({{"annotation_id", a.annotation_id}, {"n_suc", a.n_suc}, {"n_fail", a.n_fail}, {"noise_mm", a.noise_mm}});
  }
  nlohmann::json j{{"mode", r.mode},
                   {"total_rollouts", r.total_rollouts},
                   {"successes", r.successes},
                   {"success_rate", r.success_rate()},
                   {"new_arm_attempts", r.new_arm_attempts},
                   {"new_arm_successes", r.new_arm_successes},
                   {"discarded_new_arm_failures", r.discarded_new_arm_failures},
                   {"annotation_failures", r.annotation_failures},
                   {"retarget_failures", r.retarget_failures},
                   {"arms", arms},
                   {"best_arm_rate", r.best_arm_rate},
                   {"wall_seconds", r.wall_seconds}};
  j["baseline_rate"] = r.baseline_rate ? nlohmann::json(*r.baseline_rate) : nlohmann::json(nullptr);
  return j;
}

CampaignReport report_from_json(const nlohmann::json& j) {
  CampaignReport r;
  r.mode = j.at("mode").get<std::string>();
  r.total_rollouts = j.at("total_rollouts").get<int>();
  r.successes = j.at("successes").get<int>();
  r.new_arm_attempts = j.at("new_arm_attempts").get<int>();
  r.new_arm_successes = j.at("new_arm_successes").get<int>();
  r.discarded_new_arm_failures = j.at("discarded_new_arm_failures").get<int>();
  r.annotation_failures = j.at("annotation_failures").get<int>();
  r.retarget_failures = j.at("retarget_failures").get<int>();
  for (const auto& a : j.at("arms")) {
    r.arms.push_back({a.at("annotation_id").get<std::string>(), a.at("n_suc").get<int>(), a.at("n_fail").get<int>(),
                      a.at("noise_mm").get<double>()});
  }
  r.best_arm_rate = j.at("best_arm_rate").get<double>();
  if (!j.at("baseline_rate").is_null()) r.baseline_rate = j.at("baseline_rate").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

std::string render_report(const CampaignReport& r) {
  std::string out;
  out += fmt::format("{:<28}{}\n", "mode", r.mode);
  out += fmt::format("{:<28}{}\n", "total rollouts", r.total_rollouts);
  out += fmt::format("{:<28}{}\n", "successes", r.successes);
  out += fmt::format("{:<28}{:.3f}\n", "total success rate", r.success_rate());
  out += fmt::format("{:<28}{:.3f}\n", "best annotation rate", r.best_arm_rate);
  if (r.baseline_rate) out += fmt::format("{:<28}{:.3f}\n", "no-RL baseline rate", *r.baseline_rate);
  out += fmt::format("{:<28}{} / {}\n", "new arms kept / tried", r.new_arm_successes, r.new_arm_attempts);
  out += fmt::format("{:<28}{}\n", "discarded new-arm failures", r.discarded_new_arm_failures);
  out += fmt::format("{:<28}{}\n", "annotation failures", r.annotation_failures);
  out += fmt::format("{:<28}{}\n", "retarget failures", r.retarget_failures);
  out += fmt::format("{:<28}{:.2f}\n", "wall time (s)", r.wall_seconds);
  if (!r.arms.empty()) {
    out += fmt::format("\n{:<16}{:>8}{:>8}{:>10}{:>10}\n", "annotation", "n_suc", "n_fail", "rate", "noise_mm");
    for (const auto& a : r.arms) {
      const int pulls = a.n_suc + a.n_fail;
      out += fmt::format("{:<16}{:>8}{:>8}{:>10.3f}{:>10.1f}\n", a.annotation_id, a.n_suc, a.n_fail,
                         pulls ? double(a.n_suc) / pulls : 0.0, a.noise_mm);
    }
  }
  return out;
}

void write_dataset(const fs::path& path, const std::vector<Demonstration>& demos) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& d : demos) out << demo_to_json(d).dump() << '\n';
}

void append_dataset(const fs::path& path, const Demonstration& demo) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << demo_to_json(demo).dump() << '\n';
}

std::vector<Demonstration> read_dataset(std::istream& in) {
  std::vector<Demonstration> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> blank;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      if (!blank) blank = lineno;
      continue;
    }
    if (blank) throw SchemaViolation("blank line inside dataset", *blank);
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaViolation("malformed JSON", lineno);
    try {
      out.push_back(demo_from_json(j));
    } catch (const std::exception& e) {
      throw SchemaViolation(e.what(), lineno);
    }
  }
  return out;
}

std::vector<Demonstration> read_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return read_dataset(in);
}

ReplayAudit replay_audit(const std::vector<Demonstration>& demos, const TaskSpec& spec) {
  ReplayAudit audit;
  for (const auto& d : demos) {
    ++audit.total;
    TaskSpec s = spec;
    s.kind = d.task;
    const auto [world, obs] = reset(s, d.provenance.reset_seed);
    const RolloutOutcome r = replay_actions(world, d.actions);
    bool same = r.observations.size() == d.observations.size();
    for (std::size_t t = 0; same && t < d.observations.size(); ++t) same = same_observation(r.observations[t], d.observations[t]);
    if (!same) ++audit.trace_mismatches;
    if (r.success) {
      ++audit.succeeded;
    } else {
      audit.failed_ids.push_back(d.id);
    }
  }
  return audit;
}

}  // namespace demoaug
