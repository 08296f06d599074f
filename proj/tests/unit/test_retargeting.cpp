#include "demoaug/errors.hpp"
#include "demoaug/retargeting.hpp"
#include "demoaug/scripted_policies.hpp"

#include "scripted_llm.hpp"
#include "test_helpers.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace demoaug;
using namespace demoaug::testing;

namespace {

struct Fixture {
  TaskSpec spec = TaskSpec::for_kind(TaskKind::pick_place);
  Demonstration demo = record_scripted_demo(spec, 4, "pp-src");
  Annotation ann = scripted_annotate(demo, spec.kind);
  Rotation home = demo.observations[0].robot.rotation;
  SceneObservation old_obs = initial_observation(demo);

  std::size_t first_tied_to(const std::string& id) const {
    for (std::size_t i = 0; i < ann.keyposes.size(); ++i) {
      if (ann.keyposes[i].relevant_objects == std::vector<std::string>{id}) return i;
    }
    FAIL("no keypose tied to " << id);
    return 0;
  }
};

std::string echo_response(const std::vector<Keypose>& kps, const Rotation& home) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& k : kps) {
    const Vec3 mm = k.pose.position * 1000.0;
    const Vec3 e = relative_rotation_from_home(k.pose.rotation, home).euler_deg();
    list.push_back({{"t", k.t}, {"pos_mm", {mm.x(), mm.y(), mm.z()}}, {"euler_deg", {e.x(), e.y(), e.z()}}});
  }
  return nlohmann::json{{"keyposes", list}}.dump();
}

}  // namespace

TEST_SUITE("retargeting") {
  TEST_CASE("build_request") {
    Fixture f;
    const RetargetRequest r = build_request(f.ann, {"pick and place"}, f.old_obs, f.home);
    CHECK(r.keyposes.size() == f.ann.keyposes.size());
    CHECK(r.description_text == f.ann.description_text);
    const std::string text = render_request(r);
    CHECK(text.find("robot " + format_pose(f.old_obs.robot_pose, f.home)) != std::string::npos);
    CHECK(text.find("euler_deg=[0.00, 0.00, 0.00]") != std::string::npos);
    CHECK(text.find(f.ann.description_text) != std::string::npos);

    SceneObservation empty;
    empty.robot_pose = f.old_obs.robot_pose;
    const RetargetRequest e = build_request(f.ann, {"pick and place"}, empty, f.home);
    CHECK(render_request(e).find("(no objects observed)") != std::string::npos);
  }

  TEST_CASE("retarget through a mock gateway") {
    Fixture f;
    const RetargetRequest req = build_request(f.ann, {"pick and place"}, f.old_obs, f.home);
    MockGateway g;
    g.reply(echo_response(f.ann.keyposes, f.home));
    const RetargetResult r = retarget(g, req, {});
    REQUIRE(r.keyposes.size() == f.ann.keyposes.size());
    for (std::size_t i = 0; i < r.keyposes.size(); ++i) {
      CHECK(r.keyposes[i].t == f.ann.keyposes[i].t);
      CHECK((r.keyposes[i].pose.position - f.ann.keyposes[i].pose.position).norm() <= 1e-9);
      CHECK(angle_between(r.keyposes[i].pose.rotation, f.ann.keyposes[i].pose.rotation) <= 1e-9);
    }

    std::vector<Keypose> fewer(f.ann.keyposes.begin(), f.ann.keyposes.end() - 1);
    MockGateway wrong;
    wrong.reply(echo_response(fewer, f.home)).reply(echo_response(fewer, f.home)).reply(echo_response(fewer, f.home));
    try {
      retarget(wrong, req, {});
      FAIL("expected RetargetFailed");
    } catch (const RetargetFailed& e) {
      CHECK(e.attempts() == 3);
    }

    nlohmann::json bad = nlohmann::json::parse(echo_response(f.ann.keyposes, f.home));
    bad["keyposes"][0]["pos_mm"][1] = "left";
    MockGateway nonnumeric;
    nonnumeric.reply(bad.dump()).reply(bad.dump()).reply(echo_response(f.ann.keyposes, f.home));
    CHECK(retarget(nonnumeric, req, {}).retries == 2);

    nlohmann::json shifted = nlohmann::json::parse(echo_response(f.ann.keyposes, f.home));
    shifted["keyposes"][1]["t"] = shifted["keyposes"][1]["t"].get<int>() + 1;
    CHECK_THROWS_AS(parse_retarget_response(shifted.dump(), req), MalformedResponse);
  }

  TEST_CASE("scripted_retarget follows the related object") {
    Fixture f;
    Rng rng(1);
    const auto same = scripted_retarget(f.ann, f.old_obs, f.old_obs, 0.0, rng);
    for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i].pose == f.ann.keyposes[i].pose);

    SceneObservation moved = f.old_obs;
    moved.objects["cube"].position.x() += 0.10;
    const auto out = scripted_retarget(f.ann, moved, f.old_obs, 0.0, rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& k = f.ann.keyposes[i];
      const Vec3 expect = k.relevant_objects == std::vector<std::string>{"cube"}
                              ? k.pose.position + Vec3(0.10, 0, 0)
                              : k.pose.position;
      CHECK((out[i].pose.position - expect).norm() <= 1e-12);
      CHECK(out[i].t == k.t);
    }

    SceneObservation turned = f.old_obs;
    turned.objects["cube"].rotation = Rotation::about_z(0.3) * turned.objects["cube"].rotation;
    const std::size_t g = f.first_tied_to("cube");
    const auto rot = scripted_retarget(f.ann, turned, f.old_obs, 0.0, rng);
    CHECK(angle_between(rot[g].pose.rotation, Rotation::about_z(0.3) * f.ann.keyposes[g].pose.rotation) <= 1e-9);
    CHECK((rot[g].pose.position - f.ann.keyposes[g].pose.position).norm() <= 1e-12);

    SceneObservation missing = f.old_obs;
    missing.objects.erase("cube");
    CHECK_THROWS_AS(scripted_retarget(f.ann, missing, f.old_obs, 0.0, rng), UnknownObject);
  }

  TEST_CASE("scripted_retarget noise statistics") {
    Fixture f;
    Rng rng(2);
    const double sigma = 0.005;
    const std::size_t idx = f.first_tied_to("cube");
    Vec3 sum = Vec3::Zero();
    double sum_sq = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      const Vec3 e = scripted_retarget(f.ann, f.old_obs, f.old_obs, sigma, rng)[idx].pose.position -
                     f.ann.keyposes[idx].pose.position;
      sum += e;
      sum_sq += e.squaredNorm();
    }
    const Vec3 mean = sum / n;
    CHECK(mean.norm() < 0.0005);
    const double std_per_axis = std::sqrt(sum_sq / (3.0 * n));
    CHECK(std::abs(std_per_axis - sigma) <= 0.1 * sigma);
  }

  TEST_CASE("scripted model answers match the scripted retargeter") {
    Fixture f;
    auto [world, obs] = reset(f.spec, 77);
    const RetargetRequest req = build_request(f.ann, {"pick and place"}, obs, f.home);
    const ObjectPoses parsed = parse_scene_objects(render_request(req));
    CHECK(parsed.size() == obs.objects.size());
    ScriptedLlm llm({f.demo}, f.spec.kind, f.home);
    MockGateway g;
    g.respond_with(llm.responder());
    const RetargetResult r = retarget(g, req, {});
    Rng rng(0);
    const auto oracle = scripted_retarget(f.ann, obs, f.old_obs, 0.0, rng);
    REQUIRE(r.keyposes.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK((r.keyposes[i].pose.position - oracle[i].pose.position).norm() <= 1e-5);
    }
  }
}
