#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/simworld.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace demoaug {

/// Per-step limits of the scripted controller (half the world's caps, so a
/// replay of its demos converges in one step per point).
constexpr double kScriptedStep = 0.01;
constexpr double kScriptedAngleStep = 0.05;

/// Reactive solver for every bundled task. It reads the full world state
/// (including which goal color is on top), so it also serves as the feedback
/// policy for ensembling and can recover from disturbances.
Action scripted_action(const WorldState& state);

/// True once the task is solved and the gripper has retreated.
bool scripted_done(const WorldState& state);

RolloutOutcome run_scripted(const WorldState& start, int max_steps = 3000);

/// Records one source demonstration on the scene reset from `seed`. Throws
/// demoaug::Error if the solver fails.
Demonstration record_scripted_demo(const TaskSpec& spec, std::uint64_t seed, std::string id);

/// `count` source demonstrations with seeds derived from `seed`.
std::vector<Demonstration> make_source_demos(const TaskSpec& spec, int count, std::uint64_t seed);

}  // namespace demoaug
