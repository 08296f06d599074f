#pragma once

#include "demoaug/annotation.hpp"
#include "demoaug/demonstration.hpp"
#include "demoaug/llm_gateway.hpp"
#include "demoaug/random.hpp"

#include <string>
#include <vector>

namespace demoaug {

struct RetargetRequest {
  std::string description_text;
  TaskDescription task;
  SceneObservation observation;
  std::vector<Keypose> keyposes;
  Rotation home;
};

struct RetargetOptions {
  int max_retries = 3;
  CompletionParams params{"", 0.2, 2048, std::chrono::milliseconds(60000)};
};

struct RetargetResult {
  std::vector<Keypose> keyposes;
  int retries = 0;
};

RetargetRequest build_request(const Annotation& annotation, const TaskDescription& task,
                              const SceneObservation& observation, const Rotation& home);

/// Canonical prompt body for a request (also what campaign logs store).
std::string render_request(const RetargetRequest& request);

/// Parses {"keyposes": [...]} into K'. The count must match the request and
/// any timesteps given must match too; otherwise MalformedResponse.
std::vector<Keypose> parse_retarget_response(const std::string& response, const RetargetRequest& request);

/// Queries the model in a fresh session per attempt. Throws RetargetFailed
/// once `max_retries` attempts gave malformed output.
RetargetResult retarget(Gateway& gateway, const RetargetRequest& request, const RetargetOptions& options);

/// Scene observation at t = 0 of a recorded demonstration.
SceneObservation initial_observation(const Demonstration& demo);

/// Object-anchored retargeting: each keypose tied to an object follows that
/// object's translation and yaw change between `old_obs` and `obs`, plus
/// optional isotropic Gaussian position noise of std `noise_std` meters.
/// Keyposes without a related object are returned unchanged.
std::vector<Keypose> scripted_retarget(const Annotation& annotation, const SceneObservation& obs,
                                       const SceneObservation& old_obs, double noise_std, Rng& rng);

}  // namespace demoaug
