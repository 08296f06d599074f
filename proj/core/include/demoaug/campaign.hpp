#pragma once

#include "demoaug/annotation.hpp"
#include "demoaug/bandit.hpp"
#include "demoaug/demonstration.hpp"
#include "demoaug/llm_gateway.hpp"
#include "demoaug/simworld.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace demoaug {

enum class ComponentMode { scripted, llm };
enum class CampaignMode { bandit, no_rl };

struct CampaignConfig {
  TaskSpec task;
  std::string task_text = "Pick up the cube and place it on the goal marker.";
  int goal_successes = 20;
  std::uint64_t seed = 0;
  int source_demo_count = 3;
  std::uint64_t source_seed = 1;

  CampaignMode mode = CampaignMode::bandit;
  int k = 1000;
  int m = 1000;

  ComponentMode annotator = ComponentMode::scripted;
  int annotation_retries = 3;
  int cadence = 5;
  int jitter = 2;
  int max_viewframes = 8;
  CompletionParams annotation_params{"", 0.7, 2048, std::chrono::milliseconds(60000)};

  ComponentMode retargeter = ComponentMode::scripted;
  int retarget_retries = 3;
  CompletionParams retarget_params{"", 0.2, 2048, std::chrono::milliseconds(60000)};
  /// Scripted retargeting noise. Each new annotation draws an integer std in
  /// [noise_min_mm, noise_max_mm] mm; both 0 disables noise.
  int noise_min_mm = 0;
  int noise_max_mm = 0;

  HttpGatewayConfig gateway;

  /// Directory for dataset.jsonl, checkpoint.json and audit.jsonl. Empty keeps
  /// everything in memory.
  std::filesystem::path output_dir;
  /// Also run a fresh-annotation-every-rollout campaign for comparison.
  bool include_baseline = false;
  /// Hard stop on total rollouts.
  int max_rollouts = 100000;
};

/// Throws ConfigError on missing or ill-typed keys; unknown keys are rejected.
CampaignConfig config_from_json(const nlohmann::json& j);
CampaignConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const CampaignConfig& cfg);

struct ArmReport {
  std::string annotation_id;
  int n_suc = 0;
  int n_fail = 0;
  double noise_mm = 0.0;
};

struct CampaignReport {
  std::string mode;
  int total_rollouts = 0;
  int successes = 0;
  int new_arm_attempts = 0;
  int new_arm_successes = 0;
  int discarded_new_arm_failures = 0;
  int annotation_failures = 0;
  int retarget_failures = 0;
  std::vector<ArmReport> arms;
  /// Empirical success rate of the arm with the highest posterior mean.
  double best_arm_rate = 0.0;
  std::optional<double> baseline_rate;
  double wall_seconds = 0.0;

  double success_rate() const { return total_rollouts ? double(successes) / total_rollouts : 0.0; }
};

nlohmann::json report_to_json(const CampaignReport& r);
CampaignReport report_from_json(const nlohmann::json& j);
/// Fixed-width table for terminals.
std::string render_report(const CampaignReport& r);

/// Data-generation loop. Each rollout draws all randomness from a seed
/// derived from (cfg.seed, rollout index), so a campaign resumed from its
/// checkpoint ends identically to an uninterrupted one.
class Campaign {
 public:
  /// `gateway` is required when either component runs in llm mode.
  Campaign(CampaignConfig cfg, Gateway* gateway = nullptr);

  /// Runs until the goal is met (or `stop_after` more rollouts, for tests).
  /// Resumes from output_dir/checkpoint.json when present. Gateway errors
  /// propagate after the last completed rollout has been checkpointed.
  CampaignReport run(std::optional<int> stop_after = std::nullopt);

  const BanditState& bandit() const { return bandit_; }
  const std::vector<Demonstration>& dataset() const { return dataset_; }
  const std::vector<Demonstration>& source_demos() const { return sources_; }
  CampaignReport report() const;

 private:
  struct ArmInfo {
    Annotation annotation;
    double noise_mm = 0.0;
  };

  void run_one();
  bool execute(const Annotation& ann, double noise_mm, std::uint64_t rollout_seed, std::string demo_id);
  ArmInfo create_arm(std::uint64_t rollout_seed);
  void load_checkpoint();
  void save_checkpoint() const;
  std::filesystem::path path(const char* name) const;

  CampaignConfig cfg_;
  Gateway* gateway_;
  std::vector<Demonstration> sources_;
  Rotation home_;
  BanditState bandit_;
  std::vector<ArmInfo> arms_;
  std::vector<Demonstration> dataset_;
  int rollouts_ = 0;
  int discarded_ = 0;
  int annotation_failures_ = 0;
  int retarget_failures_ = 0;
  double elapsed_ = 0.0;
};

CampaignReport run_campaign(const CampaignConfig& cfg, Gateway* gateway = nullptr);

// Dataset files: JSON lines, one demonstration per line.

void write_dataset(const std::filesystem::path& path, const std::vector<Demonstration>& demos);
void append_dataset(const std::filesystem::path& path, const Demonstration& demo);
/// Throws SchemaViolation carrying the 1-based line number of a bad line.
std::vector<Demonstration> read_dataset(const std::filesystem::path& path);
std::vector<Demonstration> read_dataset(std::istream& in);

struct ReplayAudit {
  int total = 0;
  int succeeded = 0;
  int trace_mismatches = 0;
  std::vector<std::string> failed_ids;

  bool ok() const { return succeeded == total && trace_mismatches == 0; }
};

/// Resets each demo's scene from its recorded seed, re-executes its actions,
/// and checks both task success and that the recorded observations recur.
ReplayAudit replay_audit(const std::vector<Demonstration>& demos, const TaskSpec& spec);

}  // namespace demoaug
