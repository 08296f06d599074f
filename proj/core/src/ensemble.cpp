#include "demoaug/ensemble.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace demoaug {

ActionStats ActionStats::from_demos(const std::vector<Demonstration>& demos) {
  ActionVector sum = ActionVector::Zero();
  ActionVector sum_sq = ActionVector::Zero();
  double n = 0.0;
  for (const auto& d : demos) {
    for (std::size_t t = 0; t < d.actions.size(); ++t) {
      const Observation& o = d.observations[t];
      const ActionVector a = action_delta(o.robot, o.gripper, d.actions[t].goal, d.actions[t].gripper);
      sum += a;
      sum_sq += a.cwiseProduct(a);
      n += 1.0;
    }
  }
  ActionStats stats;
  if (n == 0.0) return stats;
  const ActionVector mean = sum / n;
  const ActionVector var = (sum_sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  stats.scale = var.cwiseSqrt().cwiseMax(kScaleFloor);
  return stats;
}

ActionVector action_delta(const Pose& from, Gripper from_gripper, const Pose& to, Gripper to_gripper) {
  ActionVector a;
  a.head<3>() = to.position - from.position;
  a.segment<3>(3) = (to.rotation * from.rotation.inverse()).rotation_vector();
  a[6] = gripper_value(to_gripper) - gripper_value(from_gripper);
  return a;
}

NormalizedAction normalize(const ActionVector& raw, const ActionStats& stats) {
  return {raw.cwiseQuotient(stats.scale.cwiseMax(kScaleFloor))};
}

NormalizedAction normalized_delta(const Pose& from, Gripper from_gripper, const Action& to, const ActionStats& stats) {
  return normalize(action_delta(from, from_gripper, to.goal, to.gripper), stats);
}

double similarity(const NormalizedAction& a, const NormalizedAction& b) {
  const double a1 = a.v.lpNorm<1>();
  const double b1 = b.v.lpNorm<1>();
  if (a1 == 0.0 && b1 == 0.0) return 1.0;
  if (a1 == 0.0 || b1 == 0.0) return 0.0;
  const double magnitude = 2.0 * std::min(a1, b1) / (a1 + b1);
  const double cosine = a.v.dot(b.v) / (a.v.norm() * b.v.norm());
  return std::clamp(magnitude * cosine, -1.0, 1.0);
}

std::optional<ReattachCandidate> select_reattach(const TrajectorySegment& traj, const Pose& current,
                                                 Gripper current_gripper, int t_now,
                                                 const NormalizedAction& a_il, double tau,
                                                 const ActionStats& stats, int window) {
  const int n = static_cast<int>(traj.size());
  if (t_now < 0 || t_now >= n) throw std::out_of_range("select_reattach: t_now outside the trajectory");
  const int last = window < 0 ? n - 1 : std::min(n - 1, t_now + window);
  std::optional<ReattachCandidate> best;
  for (int t = t_now + 1; t <= last; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    const NormalizedAction att =
        normalize(action_delta(current, current_gripper, traj.poses[ut], traj.gripper[ut]), stats);
    const NormalizedAction rec =
        t + 1 < n ? normalize(action_delta(traj.poses[ut], traj.gripper[ut], traj.poses[ut + 1], traj.gripper[ut + 1]),
                              stats)
                  : NormalizedAction{};
    const double s_att = similarity(att, a_il);
    const double s_rec = similarity(rec, a_il);
    if (s_att > tau && s_rec > tau && (!best || s_att > best->attach_similarity)) {
      best = ReattachCandidate{t, s_att, s_rec};
    }
  }
  return best;
}

EnsembleState make_ensemble_state(TrajectorySegment traj) {
  if (traj.poses.empty() || traj.gripper.size() != traj.poses.size()) {
    throw std::invalid_argument("ensemble needs a non-empty trajectory");
  }
  EnsembleState s;
  s.ff_trajectory = std::move(traj);
  return s;
}

EnsembleStepResult ensemble_step(EnsembleState& state, const Action& feedback_action, const Pose& current,
                                 Gripper current_gripper, const ActionStats& stats, const EnsembleParams& params) {
  const TrajectorySegment& traj = state.ff_trajectory;
  const int n = static_cast<int>(traj.size());
  if (n == 0) throw std::invalid_argument("ensemble_step: empty trajectory");
  EnsembleStepInfo info;
  if (state.cooldown_remaining > 0) --state.cooldown_remaining;

  const auto finish = [&](const Action& a) {
    info.mode = state.mode;
    info.cursor = state.ff_cursor;
    info.cooldown_remaining = state.cooldown_remaining;
    return EnsembleStepResult{a, info};
  };
  const auto point = [&](int t) {
    return Action{traj.poses[static_cast<std::size_t>(t)], traj.gripper[static_cast<std::size_t>(t)]};
  };
  const auto switch_to = [&](EnsembleMode m) {
    state.mode = m;
    state.cooldown_remaining = params.cooldown;
    state.disagreement_streak = 0;
    info.switched = true;
  };

  if (state.mode == EnsembleMode::feedforward) {
    if (state.steps_on_point > 0) {
      const bool reached = current == traj.poses[static_cast<std::size_t>(state.ff_cursor)];
      if (reached || state.steps_on_point >= params.convergence_cap) {
        if (state.ff_cursor + 1 < n) {
          ++state.ff_cursor;
          state.steps_on_point = 0;
        } else {
          info.trajectory_complete = true;
        }
      }
    }
    if (info.trajectory_complete) {
      if (state.cooldown_remaining > 0) {
        ++state.steps_on_point;
        return finish(point(n - 1));
      }
      switch_to(EnsembleMode::feedback);
      return finish(feedback_action);
    }
    const Action ff = point(state.ff_cursor);
    const double sim = similarity(normalized_delta(current, current_gripper, ff, stats),
                                  normalized_delta(current, current_gripper, feedback_action, stats));
    info.similarity = sim;
    state.disagreement_streak = sim < params.tau_switch ? state.disagreement_streak + 1 : 0;
    if (state.disagreement_streak >= params.streak_window && state.cooldown_remaining == 0) {
      switch_to(EnsembleMode::feedback);
      return finish(feedback_action);
    }
    ++state.steps_on_point;
    return finish(ff);
  }

  const NormalizedAction a_il = normalized_delta(current, current_gripper, feedback_action, stats);
  const auto cand = select_reattach(traj, current, current_gripper, state.ff_cursor, a_il, params.tau_reattach,
                                    stats, params.reattach_window);
  if (cand) {
    if (state.cooldown_remaining == 0) {
      switch_to(EnsembleMode::feedforward);
      state.ff_cursor = cand->t;
      state.steps_on_point = 1;
      info.reattach = cand;
      return finish(point(cand->t));
    }
    info.reattach_blocked = true;
  }
  return finish(feedback_action);
}

EnsembleOutcome run_ensemble(const WorldState& start, const TrajectorySegment& traj, const FeedbackPolicy& feedback,
                             const ActionStats& stats, const EnsembleParams& params,
                             const std::optional<Disturbance>& disturbance,
                             const std::function<bool(const WorldState&)>& done, int max_steps) {
  EnsembleOutcome out;
  WorldState s = start;
  EnsembleState es = make_ensemble_state(traj);
  const int budget = max_steps < 0 ? 3 * static_cast<int>(traj.size()) + 500 : max_steps;
  while (out.steps < budget) {
    if (disturbance && out.steps == disturbance->at_step && s.attached_object != disturbance->object_id) {
      inject_disturbance(s, disturbance->object_id, disturbance->delta);
    }
    const Action fb = feedback(s);
    const EnsembleStepResult r = ensemble_step(es, fb, s.robot_pose, s.gripper, stats, params);
    if (r.info.trajectory_complete && task_success(s)) break;
    out.trace.push_back(r.info);
    out.actions.push_back(r.action);
    if (r.info.switched) ++out.switches;
    step(s, r.action);
    ++out.steps;
    if (es.mode == EnsembleMode::feedback && (done ? done(s) : task_success(s))) break;
  }
  out.success = task_success(s);
  out.final_state = std::move(s);
  return out;
}

void write_ensemble_trace_jsonl(std::ostream& out, const std::vector<EnsembleStepInfo>& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    nlohmann::json line{{"t", i},
                        {"mode", e.mode == EnsembleMode::feedforward ? "feedforward" : "feedback"},
                        {"switched", e.switched},
                        {"cursor", e.cursor},
                        {"cooldown", e.cooldown_remaining}};
    line["similarity"] = e.similarity ? nlohmann::json(*e.similarity) : nlohmann::json(nullptr);
    line["reattach"] = e.reattach ? nlohmann::json(e.reattach->t) : nlohmann::json(nullptr);
    out << line.dump() << '\n';
  }
}

}  // namespace demoaug
