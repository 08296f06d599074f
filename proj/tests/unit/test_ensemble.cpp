#include "demoaug/ensemble.hpp"
#include "demoaug/scripted_policies.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

using namespace demoaug;

namespace {

NormalizedAction na(std::initializer_list<double> xs) {
  NormalizedAction a;
  int i = 0;
  for (double x : xs) a.v[i++] = x;
  return a;
}

// Straight line along +x at 1 cm spacing, gripper open.
TrajectorySegment line(int n) {
  TrajectorySegment t;
  for (int i = 0; i < n; ++i) {
    t.poses.push_back({Vec3(0.01 * i, 0, 0.1), Rotation{}});
    t.gripper.push_back(Gripper::open);
  }
  return t;
}

Action at(const Vec3& p) { return {{p, Rotation{}}, Gripper::open}; }

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("similarity examples") {
    CHECK(similarity(na({1, 2, 3}), na({1, 2, 3})) == doctest::Approx(1.0));
    CHECK(similarity(na({1, 0, 0}), na({2, 0, 0})) == doctest::Approx(2.0 / 3.0));
    CHECK(similarity(na({1, 0, 0}), na({-1, 0, 0})) == doctest::Approx(-1.0));
    CHECK(similarity(na({1, 0, 0}), na({0, 1, 0})) == doctest::Approx(0.0));
    CHECK(similarity(na({}), na({})) == 1.0);
    CHECK(similarity(na({}), na({0, 0, 1})) == 0.0);
    // |a|_1 = 2, |b|_1 = 1, cosine = 1/sqrt(2)
    CHECK(similarity(na({1, 1}), na({1, 0})) == doctest::Approx(2.0 / 3.0 / std::sqrt(2.0)));
  }

  TEST_CASE("similarity properties") {
    Rng rng(5);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 500; ++i) {
      NormalizedAction a, b;
      for (int k = 0; k < 7; ++k) {
        a.v[k] = g(rng);
        b.v[k] = g(rng);
      }
      const double s = similarity(a, b);
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
      CHECK(s == doctest::Approx(similarity(b, a)).epsilon(1e-12));
      NormalizedAction ca{a.v * 3.5}, cb{b.v * 3.5};
      CHECK(similarity(ca, cb) == doctest::Approx(s).epsilon(1e-9));
      CHECK(similarity(a, a) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("normalize and action deltas") {
    ActionStats stats;
    stats.scale << 2, 2, 2, 0.5, 0.5, 0.5, 0;
    const ActionVector raw = (ActionVector() << 1, 2, 3, 1, 1, 1, 1).finished();
    const NormalizedAction n = normalize(raw, stats);
    CHECK(n.v[0] == 0.5);
    CHECK(n.v[3] == 2.0);
    CHECK(n.v[6] == 1.0 / kScaleFloor);

    const Pose from{Vec3(0, 0, 0), Rotation{}};
    const Pose to{Vec3(0.1, 0, 0), Rotation::about_z(0.2)};
    const ActionVector d = action_delta(from, Gripper::open, to, Gripper::closed);
    CHECK(d[0] == doctest::Approx(0.1));
    CHECK(d[5] == doctest::Approx(0.2));
    CHECK(d[6] == 1.0);
    CHECK(action_delta(to, Gripper::closed, to, Gripper::closed).isZero());
  }

  TEST_CASE("select_reattach examples") {
    const TrajectorySegment traj = line(11);
    const ActionStats stats;
    const Pose current{Vec3(0.035, 0, 0.1), Rotation{}};
    const NormalizedAction a_il = na({0.01});
    // attach deltas 0.005, 0.015, 0.025 for t = 4, 5, 6 -> 2/3, 0.8, 0.571
    const auto loose = select_reattach(traj, current, Gripper::open, 2, a_il, 0.7, stats);
    REQUIRE(loose);
    CHECK(loose->t == 5);
    CHECK(loose->attach_similarity == doctest::Approx(0.8));
    CHECK(loose->recorded_similarity == doctest::Approx(1.0));
    CHECK_FALSE(select_reattach(traj, current, Gripper::open, 2, a_il, 0.9, stats));
    // only points after t_now are considered
    CHECK_FALSE(select_reattach(traj, current, Gripper::open, 5, a_il, 0.7, stats));
    CHECK_FALSE(select_reattach(traj, current, Gripper::open, 2, a_il, 0.7, stats, 2));
    CHECK(select_reattach(traj, current, Gripper::open, 2, a_il, 0.7, stats, 3)->t == 5);
    // the final point has no recorded action and never qualifies
    const Pose near_end{Vec3(0.09, 0, 0.1), Rotation{}};
    CHECK_FALSE(select_reattach(traj, near_end, Gripper::open, 9, a_il, 0.1, stats));
    CHECK_THROWS_AS(select_reattach(traj, current, Gripper::open, 11, a_il, 0.7, stats), std::out_of_range);
  }

  TEST_CASE("select_reattach prefers the more similar of two feasible points") {
    // a_IL = +1 cm along x from x = 0. Attach deltas 5.385 mm and 8.182 mm give
    // 2d / (d + 10 mm) = 0.7 and 0.9; the recorded steps stay above tau = 0.4.
    const double d1 = 0.007 / 1.3, d2 = 0.009 / 1.1;
    TrajectorySegment traj;
    for (double x : {0.0, d1, d2, d2 + 0.01}) {
      traj.poses.push_back({Vec3(x, 0, 0), Rotation{}});
      traj.gripper.push_back(Gripper::open);
    }
    const ActionStats stats;
    const NormalizedAction a_il = na({0.01});
    const Pose current = traj.poses[0];
    std::vector<double> att, rec;
    for (std::size_t t = 1; t < traj.size(); ++t) {
      att.push_back(similarity(na({traj.poses[t].position.x()}), a_il));
      rec.push_back(t + 1 < traj.size()
                        ? similarity(na({traj.poses[t + 1].position.x() - traj.poses[t].position.x()}), a_il)
                        : 0.0);
    }
    CHECK(att[0] == doctest::Approx(0.7));
    CHECK(att[1] == doctest::Approx(0.9));
    CHECK(rec[0] > 0.4);
    CHECK(rec[1] > 0.4);
    CHECK(att[2] > 0.4);  // last point: attach is fine, recorded action is zero
    const auto c = select_reattach(traj, current, Gripper::open, 0, a_il, 0.4, stats);
    REQUIRE(c);
    CHECK(c->t == 2);
    CHECK(c->attach_similarity == doctest::Approx(0.9));

    // a_IL orthogonal to every candidate direction
    CHECK_FALSE(select_reattach(traj, current, Gripper::open, 0, na({0, 0.01}), 0.5, stats));
  }

  TEST_CASE("agreeing feedback never switches") {
    EnsembleState s = make_ensemble_state(line(6));
    const ActionStats stats;
    const EnsembleParams params;
    Pose current{Vec3(0, 0, 0.1), Rotation{}};
    for (int i = 0; i < 6; ++i) {
      const Action ff = at(Vec3(0.01 * i, 0, 0.1));
      const auto r = ensemble_step(s, ff, current, Gripper::open, stats, params);
      CHECK(r.info.mode == EnsembleMode::feedforward);
      CHECK_FALSE(r.info.switched);
      CHECK(r.action.goal == ff.goal);
      current = r.action.goal;
    }
  }

  TEST_CASE("W disagreements switch, cooldown blocks the reattach") {
    EnsembleState s = make_ensemble_state(line(11));
    const ActionStats stats;
    EnsembleParams params;
    params.streak_window = 3;
    params.cooldown = 5;
    params.tau_reattach = 0.5;
    const Pose current{Vec3(0.0, 0, 0.1), Rotation{}};
    const Action away = at(Vec3(-0.01, 0, 0.1));
    std::vector<bool> switched;
    for (int i = 0; i < 3; ++i) {
      const auto r = ensemble_step(s, away, current, Gripper::open, stats, params);
      switched.push_back(r.info.switched);
      CHECK(r.info.similarity.has_value());
      if (i < 2) CHECK(r.info.mode == EnsembleMode::feedforward);
    }
    CHECK(switched == std::vector<bool>{false, false, true});
    CHECK(s.mode == EnsembleMode::feedback);
    CHECK(s.cooldown_remaining == 5);

    // Feedback now agrees with the trajectory; the reattach waits out the cooldown.
    const Action along = at(Vec3(0.01, 0, 0.1));
    int blocked = 0;
    for (int i = 0; i < 10; ++i) {
      const auto r = ensemble_step(s, along, current, Gripper::open, stats, params);
      if (r.info.reattach_blocked) {
        ++blocked;
        CHECK(r.action.goal == along.goal);
        continue;
      }
      REQUIRE(r.info.reattach);
      CHECK(r.info.switched);
      // cursor advanced to 1 before the switch; t = 2 is 2/3 similar, t = 3 only 1/2
      CHECK(r.info.reattach->t == 2);
      CHECK(s.mode == EnsembleMode::feedforward);
      CHECK(s.steps_on_point == 1);
      break;
    }
    CHECK(blocked == 4);
  }

  TEST_CASE("perfect feedback reproduces the feedforward rollout") {
    for (TaskKind kind : {TaskKind::pick_place, TaskKind::stack}) {
      const TaskSpec spec = TaskSpec::for_kind(kind);
      const Demonstration d = record_scripted_demo(spec, 6, "d");
      const TrajectorySegment traj = demo_trajectory(d);
      const auto [w, obs] = reset(spec, 6);
      const RolloutOutcome ff = rollout(w, traj);

      EnsembleState s = make_ensemble_state(traj);
      const ActionStats stats = ActionStats::from_demos({d});
      WorldState world = w;
      for (std::size_t i = 0; i < ff.actions.size(); ++i) {
        const auto r = ensemble_step(s, ff.actions[i], world.robot_pose, world.gripper, stats, {});
        CHECK(r.info.mode == EnsembleMode::feedforward);
        CHECK(r.action.goal == ff.actions[i].goal);
        CHECK(r.action.gripper == ff.actions[i].gripper);
        step(world, r.action);
      }
      CHECK(task_success(world) == ff.success);
    }
  }

  TEST_CASE("ensemble recovers from a disturbance the feedforward policy misses") {
    const TaskSpec spec = TaskSpec::for_kind(TaskKind::pick_place);
    const Demonstration d = record_scripted_demo(spec, 9, "d");
    const TrajectorySegment traj = demo_trajectory(d);
    const auto [w, obs] = reset(spec, 9);
    int grasp = 0;
    while (traj.gripper[static_cast<std::size_t>(grasp)] == Gripper::open) ++grasp;
    const Disturbance dist{std::max(0, grasp - 8), "cube", Vec3(0.06, 0.0, 0.0)};
    CHECK_FALSE(rollout(w, traj, dist).success);
    const EnsembleOutcome e = run_ensemble(w, traj, scripted_action, ActionStats::from_demos({d}), {}, dist);
    CHECK(e.success);
    CHECK(e.switches >= 1);

    std::ostringstream out;
    write_ensemble_trace_jsonl(out, e.trace);
    std::istringstream in(out.str());
    std::string l;
    std::size_t lines = 0;
    while (std::getline(in, l)) {
      const auto j = nlohmann::json::parse(l);
      CHECK(j.at("t") == lines);
      CHECK(j.contains("mode"));
      ++lines;
    }
    CHECK(lines == e.trace.size());
  }
}
