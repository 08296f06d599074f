#include "demoaug/campaign.hpp"
#include "demoaug/errors.hpp"
#include "demoaug/evaluation.hpp"
#include "demoaug/scripted_policies.hpp"

#include "scripted_llm.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace demoaug;
using namespace demoaug::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("demoaug_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

CampaignConfig small_config(int goal, int noise_lo, int noise_hi, std::uint64_t seed = 3) {
  CampaignConfig cfg;
  cfg.goal_successes = goal;
  cfg.seed = seed;
  cfg.k = 100;
  cfg.m = 100;
  cfg.noise_min_mm = noise_lo;
  cfg.noise_max_mm = noise_hi;
  return cfg;
}

void check_conservation(const CampaignReport& r, std::size_t dataset_size) {
  int pulls = 0, suc = 0;
  for (const auto& a : r.arms) {
    pulls += a.n_suc + a.n_fail;
    suc += a.n_suc;
  }
  CHECK(r.total_rollouts == pulls + r.discarded_new_arm_failures);
  CHECK(r.successes == suc);
  CHECK(static_cast<std::size_t>(r.successes) == dataset_size);
  CHECK(r.new_arm_successes == static_cast<int>(r.arms.size()));
  CHECK(r.new_arm_attempts == r.new_arm_successes + r.discarded_new_arm_failures);
}

}  // namespace

TEST_SUITE("campaign") {
  TEST_CASE("config parsing") {
    const auto j = nlohmann::json::parse(R"({
      "task": {"kind": "stack", "description": "stack red on green"},
      "goal_successes": 7, "seed": 11,
      "bandit": {"k": 10, "m": 20, "mode": "no_rl"},
      "retargeting": {"noise_mm": [2, 9]},
      "annotation": {"mode": "llm", "cadence": 4, "jitter": 1},
      "gateway": {"endpoint": "https://example.invalid/v1/chat/completions", "model": "m1", "max_retries": 2}
    })");
    const CampaignConfig cfg = config_from_json(j);
    CHECK(cfg.task.kind == TaskKind::stack);
    CHECK(cfg.task_text == "stack red on green");
    CHECK(cfg.goal_successes == 7);
    CHECK(cfg.mode == CampaignMode::no_rl);
    CHECK(cfg.k == 10);
    CHECK(cfg.noise_min_mm == 2);
    CHECK(cfg.noise_max_mm == 9);
    CHECK(cfg.annotator == ComponentMode::llm);
    CHECK(cfg.retargeter == ComponentMode::scripted);
    CHECK(cfg.annotation_params.model == "m1");
    CHECK(cfg.gateway.retry.max_retries == 2);
    const CampaignConfig again = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(again) == config_to_json(cfg));

    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"gaol_successes": 3})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"bandit": {"kk": 3}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"task": {"kind": "juggle"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"goal_successes": "many"})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"retargeting": {"noise_mm": [5, 1]}})")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    CampaignConfig needs_gateway;
    needs_gateway.annotator = ComponentMode::llm;
    CHECK_THROWS_AS(Campaign{needs_gateway}, ConfigError);
  }

  TEST_CASE("noise-free campaign succeeds on every rollout") {
    Campaign c(small_config(20, 0, 0));
    const CampaignReport r = c.run();
    CHECK(r.successes == 20);
    CHECK(r.total_rollouts == 20);
    CHECK(r.discarded_new_arm_failures == 0);
    REQUIRE_FALSE(r.arms.empty());
    for (const auto& a : r.arms) CHECK(a.n_fail == 0);
    // Every arm is a perfect copy, but with a Beta(2, 1) posterior on a lone
    // arm the expected-value rule still prefers trying another one.
    CHECK(r.new_arm_attempts == static_cast<int>(r.arms.size()));
    check_conservation(r, c.dataset().size());
    CHECK(replay_audit(c.dataset(), small_config(1, 0, 0).task).ok());
  }

  TEST_CASE("noisy campaigns conserve rollouts") {
    for (auto mode : {CampaignMode::bandit, CampaignMode::no_rl}) {
      CampaignConfig cfg = small_config(15, 1, 20, 5);
      cfg.mode = mode;
      Campaign c(cfg);
      const CampaignReport r = c.run();
      CHECK(r.successes == 15);
      check_conservation(r, c.dataset().size());
      if (mode == CampaignMode::no_rl) CHECK(r.new_arm_attempts == r.total_rollouts);
      for (const auto& d : c.dataset()) CHECK(d.provenance.kind == Provenance::Kind::generated);
    }
  }

  TEST_CASE("resumed campaign matches an uninterrupted one") {
    const fs::path a = scratch("resume_a"), b = scratch("resume_b");
    CampaignConfig cfg = small_config(12, 1, 20, 9);
    cfg.output_dir = a;
    const CampaignReport whole = Campaign(cfg).run();

    cfg.output_dir = b;
    Campaign(cfg).run(5);
    Campaign(cfg).run(4);
    Campaign second(cfg);
    const CampaignReport resumed = second.run();

    CHECK(report_to_json(resumed)["arms"] == report_to_json(whole)["arms"]);
    CHECK(resumed.total_rollouts == whole.total_rollouts);
    CHECK(resumed.successes == whole.successes);
    std::ifstream fa(a / "dataset.jsonl"), fb(b / "dataset.jsonl");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(second.dataset().size() == 12);

    CampaignConfig other = cfg;
    other.seed = 10;
    CHECK_THROWS_AS(Campaign{other}, ConfigError);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("dataset files") {
    Rng rng(8);
    std::vector<Demonstration> demos;
    for (int i = 0; i < 100; ++i) demos.push_back(random_demo(rng, 5 + i % 17, "demo-" + std::to_string(i)));
    const fs::path dir = scratch("dataset");
    fs::create_directories(dir);
    write_dataset(dir / "d.jsonl", demos);
    const auto back = read_dataset(dir / "d.jsonl");
    REQUIRE(back.size() == demos.size());
    for (std::size_t i = 0; i < demos.size(); ++i) CHECK(same_demo(back[i], demos[i]));

    std::ifstream in(dir / "d.jsonl");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::ostringstream cut;
    for (int i = 0; i < 41; ++i) cut << lines[static_cast<std::size_t>(i)] << '\n';
    cut << lines[41].substr(0, lines[41].size() / 2) << '\n';
    std::istringstream truncated(cut.str());
    try {
      read_dataset(truncated);
      FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
      CHECK(e.line() == 42);
    }

    std::istringstream missing_field(lines[0] + "\n{\"id\": \"x\"}\n");
    try {
      read_dataset(missing_field);
      FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
      CHECK(e.line() == 2);
    }

    std::istringstream empty("");
    CHECK(read_dataset(empty).empty());
    fs::remove_all(dir);
  }

  TEST_CASE("replay audit catches tampering") {
    Campaign c(small_config(4, 0, 0, 21));
    c.run();
    std::vector<Demonstration> demos = c.dataset();
    CHECK(replay_audit(demos, {}).ok());
    demos[1].observations[3].robot.position.x() += 1e-9;
    demos[2].actions.resize(demos[2].actions.size() / 2);
    demos[2].observations.resize(demos[2].actions.size());
    const ReplayAudit audit = replay_audit(demos, {});
    CHECK_FALSE(audit.ok());
    CHECK(audit.trace_mismatches == 1);
    CHECK(audit.failed_ids == std::vector<std::string>{demos[2].id});
  }

  TEST_CASE("llm-mode campaign through a mock gateway") {
    CampaignConfig cfg = small_config(6, 0, 0, 13);
    cfg.annotator = ComponentMode::llm;
    cfg.retargeter = ComponentMode::llm;
    cfg.annotation_params.model = cfg.retarget_params.model = "mock";
    const auto sources = make_source_demos(cfg.task, cfg.source_demo_count, cfg.source_seed);
    ScriptedLlm llm(sources, cfg.task.kind, sources.front().observations.front().robot.rotation);
    llm.corrupt_every(5);
    MockGateway gateway;
    gateway.respond_with(llm.responder());
    Campaign c(cfg, &gateway);
    const CampaignReport r = c.run();
    CHECK(r.successes == 6);
    check_conservation(r, c.dataset().size());
    CHECK(llm.viewframe_calls() >= 1);
    CHECK(llm.annotation_calls() >= 1);
    CHECK(llm.retarget_calls() >= r.total_rollouts);
    const auto log = gateway.audit_log()->entries();
    CHECK(log.size() == gateway.calls());
    std::set<std::string> sessions;
    for (const auto& e : log) sessions.insert(e.session_id);
    CHECK(sessions.size() == log.size());
    CHECK(replay_audit(c.dataset(), cfg.task).ok());
  }

  TEST_CASE("evaluate_policy") {
    const TaskSpec spec = TaskSpec::for_kind(TaskKind::pick_place);
    PolicySpec scripted;
    scripted.kind = PolicyKind::scripted;
    CHECK(evaluate_policy(scripted, spec, 10, 1).estimate.rate == 1.0);

    PolicySpec ff;
    ff.source = make_source_demos(spec, 1, 1).front();
    ff.annotation = scripted_annotate(ff.source, spec.kind);
    const EvalResult a = evaluate_policy(ff, spec, 10, 2);
    const EvalResult b = evaluate_policy(ff, spec, 10, 2);
    CHECK(a.estimate.rate == 1.0);
    REQUIRE(a.trials.size() == 10);
    for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(a.trials[i].scene_seed == b.trials[i].scene_seed);

    // Wilson 95%: 8/10 -> [0.4902, 0.9433]; 0/10 -> [0, 0.2775]
    const SuccessEstimate w = wilson_interval(8, 10);
    CHECK(w.ci_low == doctest::Approx(0.4902).epsilon(1e-3));
    CHECK(w.ci_high == doctest::Approx(0.9433).epsilon(1e-3));
    const SuccessEstimate z = wilson_interval(0, 10);
    CHECK(z.ci_low <= 1e-12);
    CHECK(z.ci_high == doctest::Approx(0.2775).epsilon(1e-3));
    CHECK_THROWS_AS(wilson_interval(3, 2), std::invalid_argument);
  }
}
