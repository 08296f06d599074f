// demoaug command-line tool: generate, evaluate, replay, report.

#include "demoaug/annotation.hpp"
#include "demoaug/campaign.hpp"
#include "demoaug/errors.hpp"
#include "demoaug/evaluation.hpp"
#include "demoaug/llm_gateway.hpp"
#include "demoaug/scripted_policies.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace demoaug;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGateway = 3;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return j;
}

int cmd_generate(const std::string& config_path, const std::string& output, int stop_after) {
  CampaignConfig cfg = load_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  std::unique_ptr<Gateway> gateway;
  if (cfg.annotator == ComponentMode::llm || cfg.retargeter == ComponentMode::llm) {
    auto log = cfg.output_dir.empty() ? std::make_shared<AuditLog>()
                                      : std::make_shared<AuditLog>((cfg.output_dir / "audit.jsonl").string());
    if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);
    gateway = std::make_unique<HttpGateway>(cfg.gateway, log);
  }
  Campaign campaign(cfg, gateway.get());
  const CampaignReport report = campaign.run(stop_after > 0 ? std::optional<int>(stop_after) : std::nullopt);
  if (!cfg.output_dir.empty()) {
    std::ofstream out(cfg.output_dir / "report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  std::cout << render_report(report);
  return kExitOk;
}

struct EvaluateArgs {
  std::string task = "pick_place";
  std::string policy = "feedforward";
  std::string annotation;
  int trials = 50;
  std::uint64_t seed = 0;
  std::uint64_t source_seed = 1;
  double noise_mm = 0.0;
  bool disturb = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  TaskSpec spec;
  try {
    spec = TaskSpec::for_kind(task_kind_from_string(a.task));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  PolicySpec policy;
  try {
    policy.kind = policy_kind_from_string(a.policy);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto sources = make_source_demos(spec, 1, a.source_seed);
  policy.source = sources.front();
  if (a.annotation.empty()) {
    policy.annotation = scripted_annotate(policy.source, spec.kind);
  } else {
    policy.annotation = annotation_from_json(read_json(a.annotation));
    if (policy.annotation.source_demo_id != policy.source.id) {
      throw ConfigError("annotation source " + policy.annotation.source_demo_id + " is not " + policy.source.id);
    }
  }
  policy.retarget_noise = a.noise_mm / 1000.0;
  policy.stats = ActionStats::from_demos(sources);
  std::optional<DisturbanceSpec> disturbance;
  if (a.disturb) {
    disturbance = DisturbanceSpec{};
    if (spec.kind != TaskKind::pick_place) disturbance->object_id = spec.kind == TaskKind::drawer_mug ? "mug" : "block_red";
  }
  const EvalResult r = evaluate_policy(policy, spec, a.trials, a.seed, disturbance);
  const auto& e = r.estimate;
  fmt::print("{} on {}{}: {}/{} = {:.3f}  95% CI [{:.3f}, {:.3f}]\n", a.policy, a.task, a.disturb ? " (disturbed)" : "",
             e.successes, e.trials, e.rate, e.ci_low, e.ci_high);
  return kExitOk;
}

int cmd_replay(const std::string& dataset, const std::string& config_path) {
  const TaskSpec spec = config_path.empty() ? TaskSpec{} : load_config(config_path).task;
  const auto demos = read_dataset(std::filesystem::path(dataset));
  const ReplayAudit audit = replay_audit(demos, spec);
  fmt::print("replayed {} demos: {} succeeded, {} trace mismatches\n", audit.total, audit.succeeded,
             audit.trace_mismatches);
  for (const auto& id : audit.failed_ids) fmt::print("  failed: {}\n", id);
  return audit.ok() ? kExitOk : kExitFailure;
}

int cmd_report(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p /= "report.json";
  std::cout << render_report(report_from_json(read_json(p.string())));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demonstration augmentation: annotate, retarget, warp, and roll out demonstrations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  int stop_after = 0;
  auto* gen = app.add_subcommand("generate", "Run a data-generation campaign (resumes from its checkpoint)");
  gen->add_option("-c,--config", config_path, "Campaign config (JSON)")->required();
  gen->add_option("-o,--output", output, "Output directory (overrides output.dir)");
  gen->add_option("--stop-after", stop_after, "Stop after this many rollouts");

  EvaluateArgs eval;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a policy over seeded scenes");
  ev->add_option("-t,--task", eval.task, "Task kind")->capture_default_str();
  ev->add_option("-p,--policy", eval.policy, "scripted | feedforward | ensemble")->capture_default_str();
  ev->add_option("-a,--annotation", eval.annotation, "Annotation JSON (default: scripted annotation)");
  ev->add_option("-n,--trials", eval.trials, "Number of trials")->capture_default_str();
  ev->add_option("-s,--seed", eval.seed, "Trial seed")->capture_default_str();
  ev->add_option("--source-seed", eval.source_seed, "Source demonstration seed")->capture_default_str();
  ev->add_option("--noise-mm", eval.noise_mm, "Retargeting noise std, mm")->capture_default_str();
  ev->add_flag("--disturb", eval.disturb, "Teleport the object shortly before the grasp");

  std::string dataset;
  std::string replay_config;
  auto* rep = app.add_subcommand("replay", "Replay every demo of a dataset from its recorded seed");
  rep->add_option("-d,--dataset", dataset, "Dataset (JSON lines)")->required();
  rep->add_option("-c,--config", replay_config, "Campaign config supplying task parameters");

  std::string report_path;
  auto* rpt = app.add_subcommand("report", "Render a campaign report as a table");
  rpt->add_option("path", report_path, "report.json or campaign output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(config_path, output, stop_after);
    if (*ev) return cmd_evaluate(eval);
    if (*rep) return cmd_replay(dataset, replay_config);
    if (*rpt) return cmd_report(report_path);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const GatewayError& e) {
    fmt::print(stderr, "gateway failure: {}\n", e.what());
    return kExitGateway;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
