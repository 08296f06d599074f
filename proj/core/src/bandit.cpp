#include "demoaug/bandit.hpp"

#include "demoaug/errors.hpp"

#include <algorithm>
#include <cmath>

namespace demoaug {

namespace {

constexpr std::uint64_t kPosteriorStream = 0;
constexpr std::uint64_t kOutcomeStream = 1;

// Thompson sampling over virtual arms for `horizon` pulls, ground truth `p`.
// Posterior draws come from `draws`, Bernoulli outcomes from `outcomes`.
int simulate_thompson(const std::vector<double>& p, std::vector<VirtualArm> arms, int horizon, Rng& draws,
                      Rng& outcomes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int successes = 0;
  for (int step = 0; step < horizon; ++step) {
    std::size_t best = 0;
    double best_draw = -1.0;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const double draw = sample_beta(draws, arms[i].n_suc + 1.0, arms[i].n_fail + 1.0);
      if (draw > best_draw) {
        best_draw = draw;
        best = i;
      }
    }
    const bool success = unit(outcomes) < p[best];
    if (success) {
      ++arms[best].n_suc;
      ++successes;
    } else {
      ++arms[best].n_fail;
    }
  }
  return successes;
}

std::vector<VirtualArm> virtual_arms(const BanditState& state) {
  std::vector<VirtualArm> out;
  out.reserve(state.arms.size());
  for (const auto& a : state.arms) out.push_back({a.n_suc, a.n_fail});
  return out;
}

}  // namespace

std::size_t thompson_select(const BanditState& state, Rng& rng) {
  if (state.arms.empty()) throw NoArms("thompson_select needs at least one arm");
  std::size_t best = 0;
  double best_draw = -1.0;
  for (std::size_t i = 0; i < state.arms.size(); ++i) {
    const double draw = sample_beta(rng, state.arms[i].alpha(), state.arms[i].beta());
    if (draw > best_draw) {
      best_draw = draw;
      best = i;
    }
  }
  return best;
}

void record_outcome(BanditState& state, std::size_t arm, bool success) {
  if (arm >= state.arms.size()) throw std::out_of_range("record_outcome: arm index out of range");
  if (success) {
    ++state.arms[arm].n_suc;
  } else {
    ++state.arms[arm].n_fail;
  }
}

PriorFit fit_arm_prior(const std::vector<Arm>& arms, int m, Rng& rng) {
  if (arms.empty()) throw NoArms("fit_arm_prior needs at least one arm");
  if (m < 1) throw std::invalid_argument("fit_arm_prior needs m >= 1");
  std::vector<double> pooled;
  pooled.reserve(arms.size() * static_cast<std::size_t>(m));
  for (const auto& arm : arms) {
    for (int i = 0; i < m; ++i) {
      pooled.push_back(std::clamp(sample_beta(rng, arm.alpha(), arm.beta()), 1e-6, 1.0 - 1e-6));
    }
  }
  const BetaMle fit = fit_beta_mle(pooled);
  return {fit.alpha, fit.beta, m};
}

double estimate_rollout_value(const std::vector<std::vector<double>>& probability_sets,
                              const std::vector<VirtualArm>& arms, int horizon, std::uint64_t seed) {
  if (probability_sets.empty()) throw std::invalid_argument("estimate_rollout_value needs k >= 1");
  if (horizon < 0) throw std::invalid_argument("estimate_rollout_value needs T >= 0");
  if (horizon == 0) return 0.0;
  if (arms.empty()) return 0.0;
  long long total = 0;
  for (std::size_t j = 0; j < probability_sets.size(); ++j) {
    if (probability_sets[j].size() != arms.size()) {
      throw std::invalid_argument("probability set size differs from the arm count");
    }
    Rng draws(mix_seed(seed, 2 * j + kPosteriorStream));
    Rng outcomes(mix_seed(seed, 2 * j + kOutcomeStream));
    total += simulate_thompson(probability_sets[j], arms, horizon, draws, outcomes);
  }
  return static_cast<double>(total) / static_cast<double>(probability_sets.size());
}

double estimate_rollout_value(const std::vector<std::vector<double>>& probability_sets,
                              const std::vector<VirtualArm>& arms, int horizon, Rng& rng) {
  return estimate_rollout_value(probability_sets, arms, horizon, rng());
}

ArmAddEvaluation evaluate_new_arm(const BanditState& state, int horizon, const PriorFit& prior, int k,
                                  std::uint64_t seed) {
  ArmAddEvaluation ev;
  ev.horizon = horizon;
  ev.p_add = estimate_p_add(state);
  ev.rollout_seed = mix_seed(seed, 0xadd);
  if (state.arms.empty()) {
    ev.add = true;
    return ev;
  }
  if (k < 1) throw std::invalid_argument("evaluate_new_arm needs k >= 1");
  if (horizon < 1) throw std::invalid_argument("evaluate_new_arm needs T >= 1");

  Rng sampler(mix_seed(seed, 0x5e7));
  ev.probability_sets.resize(static_cast<std::size_t>(k));
  ev.new_arm_probabilities.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    auto& set = ev.probability_sets[static_cast<std::size_t>(j)];
    set.reserve(state.arms.size());
    for (const auto& arm : state.arms) set.push_back(sample_beta(sampler, arm.alpha(), arm.beta()));
    ev.new_arm_probabilities[static_cast<std::size_t>(j)] = sample_beta(sampler, prior.alpha_hat, prior.beta_hat);
  }

  const std::vector<VirtualArm> base = virtual_arms(state);
  std::vector<VirtualArm> extended = base;
  extended.push_back({1, 0});
  std::vector<std::vector<double>> extended_sets = ev.probability_sets;
  for (std::size_t j = 0; j < extended_sets.size(); ++j) extended_sets[j].push_back(ev.new_arm_probabilities[j]);

  ev.e_keep = estimate_rollout_value(ev.probability_sets, base, horizon, ev.rollout_seed);
  ev.e_keep_short = estimate_rollout_value(ev.probability_sets, base, horizon - 1, ev.rollout_seed);
  ev.e_with_new_short = estimate_rollout_value(extended_sets, extended, horizon - 1, ev.rollout_seed);
  ev.e_add = ev.p_add * (1.0 + ev.e_with_new_short) + (1.0 - ev.p_add) * ev.e_keep_short;
  ev.add = ev.e_add > ev.e_keep;
  return ev;
}

bool decide_new_arm(const BanditState& state, int horizon, const PriorFit& prior, int k, Rng& rng) {
  if (state.arms.empty()) return true;
  return evaluate_new_arm(state, horizon, prior, k, rng()).add;
}

double estimate_p_add(const BanditState& state) {
  return (state.new_arm_successes + 1.0) / (state.new_arm_attempts + 2.0);
}

int estimate_horizon(const BanditState& state) {
  if (state.current_successes >= state.goal_successes) {
    throw GoalReached("goal of " + std::to_string(state.goal_successes) + " successes already reached");
  }
  if (state.arms.empty()) throw NoArms("estimate_horizon needs at least one arm");
  double best = 0.0;
  for (const auto& arm : state.arms) best = std::max(best, arm.posterior_mean());
  const double remaining = state.goal_successes - state.current_successes;
  const double t = std::ceil(remaining / best - 1e-9);
  return std::max(1, static_cast<int>(t));
}

nlohmann::json bandit_to_json(const BanditState& state) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : state.arms) {
    arms.push_back({{"annotation_id", a.annotation_id}, {"n_suc", a.n_suc}, {"n_fail", a.n_fail}});
  }
  return {{"arms", arms},
          {"new_arm_attempts", state.new_arm_attempts},
          {"new_arm_successes", state.new_arm_successes},
          {"goal", state.goal_successes},
          {"current", state.current_successes},
          {"seed", state.seed}};
}

BanditState bandit_from_json(const nlohmann::json& j) {
  BanditState s;
  for (const auto& a : j.at("arms")) {
    s.arms.push_back({a.at("annotation_id").get<std::string>(), a.at("n_suc").get<int>(), a.at("n_fail").get<int>()});
  }
  s.new_arm_attempts = j.at("new_arm_attempts").get<int>();
  s.new_arm_successes = j.at("new_arm_successes").get<int>();
  s.goal_successes = j.at("goal").get<int>();
  s.current_successes = j.at("current").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace demoaug
