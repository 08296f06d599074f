#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/llm_gateway.hpp"
#include "demoaug/warping.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace demoaug {

/// One- or two-sentence natural-language description of the task.
struct TaskDescription {
  std::string text;
};

struct SummaryRow {
  int t = 0;
  std::string robot;  // formatted, rotation relative to home
  std::vector<std::pair<std::string, std::string>> objects;
};

/// Compact text view of a demonstration used for viewframe selection.
struct DemoSummary {
  std::vector<SummaryRow> rows;
  std::optional<Attachment> first_image;
  std::optional<Attachment> final_image;
  Rotation home_rotation;
  int last_timestep = 0;
};

struct Keypose {
  int t = 0;
  Pose pose;
  Gripper gripper = Gripper::open;
  std::vector<std::string> relevant_objects;
  std::string relation_note;
};

/// Reusable annotated demonstration: keyposes plus the processed description
/// handed to retargeting. One annotation is one bandit arm.
struct Annotation {
  std::string id;
  std::vector<Keypose> keyposes;
  std::string description_text;
  std::string source_demo_id;
  std::string created_by;  // "scripted" or "llm(<model>)"
};

/// Optional per-timestep scene images supplied by the caller.
using ImageProvider = std::function<std::optional<Attachment>(int t)>;

struct AnnotationOptions {
  int cadence = 5;
  int jitter = 2;
  std::uint64_t seed = 0;
  int max_viewframes = 8;
  /// Total attempts of the annotation process before giving up.
  int max_retries = 3;
  CompletionParams params{"", 0.7, 2048, std::chrono::milliseconds(60000)};
  std::string annotation_id = "annotation";
  ImageProvider images;
};

struct AnnotationResult {
  Annotation annotation;
  int retries = 0;
};

/// Samples the demo roughly every `cadence` steps with per-gap jitter in
/// [-jitter, jitter]; always includes t = 0 and t = T. End-effector rotations
/// are rendered relative to `home`.
DemoSummary summarize_demo(const Demonstration& demo, const Rotation& home, int cadence = 5,
                           int jitter = 2, std::uint64_t seed = 0);
std::string render_summary(const DemoSummary& summary);

/// Parses "TIMESTEPS: a, b, c" (or a bare list). Out-of-range timesteps or
/// other text raise MalformedResponse. Result is sorted, deduplicated, and
/// truncated to `max_frames`.
std::vector<int> parse_viewframes(const std::string& response, int last_timestep, int max_frames);

/// Single viewframe query in a fresh session.
std::vector<int> select_viewframes(Gateway& gateway, const DemoSummary& summary,
                                   const TaskDescription& task, const AnnotationOptions& options);

/// Parses the model's annotation JSON into an unrepaired annotation. Poses are
/// read in mm / relative Euler degrees. Throws MalformedResponse.
Annotation parse_annotation_response(const std::string& response, const Demonstration& demo,
                                     const Rotation& home);

/// Annotation query for the given viewframes, re-asked in a fresh session on
/// malformed output until `max_retries` attempts are used.
AnnotationResult annotate(Gateway& gateway, const Demonstration& demo, const std::vector<int>& frames,
                          const TaskDescription& task, const Rotation& home,
                          const AnnotationOptions& options);

/// Full annotation process (summary, viewframes, annotation). Any malformed
/// response discards everything and restarts, up to `max_retries` attempts.
AnnotationResult create_annotation(Gateway& gateway, const Demonstration& demo,
                                   const TaskDescription& task, const Rotation& home,
                                   const AnnotationOptions& options);

/// Overwrites listed poses with recorded ones, adds missing t = 0 and t = T
/// keyposes, sorts and deduplicates, and re-renders the keypose block of the
/// description. Idempotent. Requires every keypose timestep within [0, T].
Annotation repair_annotation(const Annotation& raw, const Demonstration& demo);
Annotation repair_annotation(const Annotation& raw, const Demonstration& demo, const Rotation& home);

/// Objects farther than this from the end-effector are not considered related
/// to a keypose by the scripted annotator.
constexpr double kRelevanceRadius = 0.05;

/// Deterministic annotator: keyposes at gripper-command transitions plus the
/// endpoints, each tied to the nearest non-held object within kRelevanceRadius.
Annotation scripted_annotate(const Demonstration& demo, TaskKind task_kind);

/// Text rendering of a keypose list; this block is what repair rewrites.
std::string render_keypose_block(const std::vector<Keypose>& keyposes, const Rotation& home);

std::vector<TimedPose> timed_poses(const std::vector<Keypose>& keyposes);

nlohmann::json annotation_to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

}  // namespace demoaug
