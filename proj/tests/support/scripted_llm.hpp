#pragma once

// A stand-in language model for tests. It answers the three prompt kinds
// (viewframes, annotation, retargeting) the way a well-behaved model would,
// using the scripted annotator and retargeter as ground truth. It only sees
// prompt text: scenes are parsed back out of the rendered prompts.

#include "demoaug/annotation.hpp"
#include "demoaug/llm_gateway.hpp"

#include <atomic>
#include <memory>
#include <string>
#include <vector>

namespace demoaug::testing {

class ScriptedLlm {
 public:
  ScriptedLlm(std::vector<Demonstration> sources, TaskKind kind, Rotation home);

  std::string operator()(const CompletionRequest& request);

  /// Every n-th reply (1-based, counted over all prompts) is garbage. 0 disables.
  void corrupt_every(int n) { corrupt_every_ = n; }

  int viewframe_calls() const { return viewframe_calls_; }
  int annotation_calls() const { return annotation_calls_; }
  int retarget_calls() const { return retarget_calls_; }

  MockGateway::Responder responder();

 private:
  std::string answer_viewframes(const std::string& prompt) const;
  std::string answer_annotation(const std::string& prompt) const;
  std::string answer_retarget(const std::string& prompt) const;
  const Demonstration* demo_for_annotation(const std::string& prompt) const;
  const Demonstration* demo_for_retarget(const std::string& prompt) const;

  std::vector<Demonstration> sources_;
  TaskKind kind_;
  Rotation home_;
  int corrupt_every_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> viewframe_calls_{0};
  std::atomic<int> annotation_calls_{0};
  std::atomic<int> retarget_calls_{0};
};

/// Parses "id pos_mm=[x, y, z] euler_deg=[r, p, y]" lines of a rendered
/// retargeting prompt back into object poses.
ObjectPoses parse_scene_objects(const std::string& prompt);

}  // namespace demoaug::testing
