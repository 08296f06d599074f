#pragma once

#include "demoaug/random.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace demoaug {

/// One annotation with its rollout tallies. Posterior is Beta(n_suc+1, n_fail+1).
struct Arm {
  std::string annotation_id;
  int n_suc = 0;
  int n_fail = 0;

  double alpha() const { return n_suc + 1.0; }
  double beta() const { return n_fail + 1.0; }
  double posterior_mean() const { return alpha() / (alpha() + beta()); }
  int pulls() const { return n_suc + n_fail; }
};

struct BanditState {
  std::vector<Arm> arms;
  int new_arm_attempts = 0;
  int new_arm_successes = 0;
  int goal_successes = 0;
  int current_successes = 0;
  std::uint64_t seed = 0;
};

/// Beta distribution fitted to pooled posterior samples of the existing arms;
/// the prior for the success rate of a not-yet-created arm.
struct PriorFit {
  double alpha_hat = 1.0;
  double beta_hat = 1.0;
  int m = 0;

  double mean() const { return alpha_hat / (alpha_hat + beta_hat); }
};

/// Virtual arm used in simulated Thompson rollouts: starting tallies only.
struct VirtualArm {
  int n_suc = 0;
  int n_fail = 0;
};

/// Argmax of one posterior draw per arm; ties go to the lowest index.
std::size_t thompson_select(const BanditState& state, Rng& rng);

void record_outcome(BanditState& state, std::size_t arm, bool success);

/// Draws m samples from each arm's posterior, clamps to [1e-6, 1 - 1e-6] and
/// returns the maximum-likelihood Beta over the pooled sample.
PriorFit fit_arm_prior(const std::vector<Arm>& arms, int m, Rng& rng);

/// Mean number of successes of T simulated Thompson-sampling pulls, one run
/// per probability set (each set is the ground-truth success rate of every
/// arm). Set j always uses the same random streams for a given seed, so calls
/// that share a seed share random numbers: outcome draws and posterior draws
/// come from separate streams.
double estimate_rollout_value(const std::vector<std::vector<double>>& probability_sets,
                              const std::vector<VirtualArm>& arms, int horizon, std::uint64_t seed);
double estimate_rollout_value(const std::vector<std::vector<double>>& probability_sets,
                              const std::vector<VirtualArm>& arms, int horizon, Rng& rng);

/// Everything decide_new_arm computed, for logging and verification.
struct ArmAddEvaluation {
  bool add = true;
  int horizon = 0;
  double p_add = 0.5;
  double e_keep = 0.0;              // E_T(P)
  double e_keep_short = 0.0;        // E_{T-1}(P)
  double e_with_new_short = 0.0;    // E_{T-1}(P u {p_new})
  double e_add = 0.0;
  /// Shared samples: probability_sets[j][i] for existing arm i, and the new
  /// arm's success rate new_arm_probabilities[j] drawn from the prior.
  std::vector<std::vector<double>> probability_sets;
  std::vector<double> new_arm_probabilities;
  std::uint64_t rollout_seed = 0;
};

/// E_add = P_add (1 + E_{T-1}(P u {p_new})) + (1 - P_add) E_{T-1}(P), compared
/// against E_T(P). The new virtual arm starts at 1 success / 0 failures. All
/// three values use the same k probability sets and random streams. With no
/// arms the answer is always "add".
ArmAddEvaluation evaluate_new_arm(const BanditState& state, int horizon, const PriorFit& prior,
                                  int k, std::uint64_t seed);
bool decide_new_arm(const BanditState& state, int horizon, const PriorFit& prior, int k, Rng& rng);

/// Laplace estimate (successes + 1) / (attempts + 2).
double estimate_p_add(const BanditState& state);

/// ceil((goal - current) / max posterior mean), at least 1. Throws
/// GoalReached when current >= goal and NoArms without arms.
int estimate_horizon(const BanditState& state);

nlohmann::json bandit_to_json(const BanditState& state);
BanditState bandit_from_json(const nlohmann::json& j);

// Beta maximum likelihood (shared with tests and benchmarks).

struct BetaMle {
  double alpha = 1.0;
  double beta = 1.0;
  double mean_log_likelihood = 0.0;
  int iterations = 0;
};

/// Average log-density of Beta(alpha, beta) over a sample summarized by
/// mean log x and mean log(1 - x).
double beta_mean_log_likelihood(double alpha, double beta, double mean_log_x, double mean_log_1mx);

/// Newton ascent on (log alpha, log beta) from a method-of-moments start.
/// Samples must lie strictly inside (0, 1).
BetaMle fit_beta_mle(std::span<const double> samples);

}  // namespace demoaug
