#include "demoaug/annotation.hpp"

#include "demoaug/errors.hpp"
#include "demoaug/prompt_text.hpp"
#include "demoaug/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace demoaug {

namespace {

constexpr std::string_view kBlockSeparator = "\n\nKey poses:\n";

std::string_view gripper_word(Gripper g) { return g == Gripper::closed ? "closed" : "open"; }

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string format_objects(const ObjectPoses& objects) {
  std::vector<std::string> parts;
  for (const auto& [id, pose] : objects) parts.push_back(id + " " + format_pose(pose));
  return join(parts, "; ");
}

Vec3 read_vec3(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw MalformedResponse(std::string(key) + " must be a 3-array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw MalformedResponse(std::string(key) + " must be numeric");
    v[i] = a[i].get<double>();
  }
  if (!v.allFinite()) throw MalformedResponse(std::string(key) + " must be finite");
  return v;
}

int read_timestep(const nlohmann::json& j) {
  const auto& t = j.at("t");
  if (t.is_number_integer()) return t.get<int>();
  if (t.is_number_float()) {
    const double d = t.get<double>();
    if (std::floor(d) == d && std::abs(d) < 1e9) return static_cast<int>(d);
  }
  throw MalformedResponse("keypose timestep must be an integer");
}

std::string narrative_of(const std::string& description) {
  const auto pos = description.find(kBlockSeparator);
  return pos == std::string::npos ? description : description.substr(0, pos);
}

std::string with_block(const std::string& narrative, const std::vector<Keypose>& keyposes,
                       const Rotation& home) {
  return narrative + std::string(kBlockSeparator) + render_keypose_block(keyposes, home);
}

}  // namespace

DemoSummary summarize_demo(const Demonstration& demo, const Rotation& home, int cadence, int jitter,
                           std::uint64_t seed) {
  if (demo.observations.empty()) throw EmptyDemo("demonstration " + demo.id + " is empty");
  if (cadence < 1 || jitter < 0 || jitter >= cadence) {
    throw std::invalid_argument("summarize_demo needs cadence >= 1 and 0 <= jitter < cadence");
  }
  const int last = demo.last_timestep();
  const int lo = cadence - jitter;
  const int hi = cadence + jitter;

  std::vector<int> ts{0};
  Rng rng = derive_rng(seed, {0x5u});
  int prev = 0;
  while (last - prev > hi) {
    // Leave at least `lo` steps so the final gap stays in range.
    const int max_gap = std::min(hi, last - prev - lo);
    if (max_gap < lo) break;
    prev += std::uniform_int_distribution<int>(lo, max_gap)(rng);
    ts.push_back(prev);
  }
  if (last > 0) ts.push_back(last);

  DemoSummary s;
  s.home_rotation = home;
  s.last_timestep = last;
  for (int t : ts) {
    const Observation& o = demo.observations[t];
    SummaryRow row;
    row.t = t;
    row.robot = format_pose(o.robot, home);
    for (const auto& [id, pose] : o.objects) row.objects.emplace_back(id, format_pose(pose));
    s.rows.push_back(std::move(row));
  }
  return s;
}

std::string render_summary(const DemoSummary& summary) {
  std::ostringstream out;
  for (const auto& row : summary.rows) {
    out << "t=" << row.t << " robot " << row.robot;
    for (const auto& [id, text] : row.objects) out << " | " << id << ' ' << text;
    out << '\n';
  }
  return out.str();
}

std::vector<int> parse_viewframes(const std::string& response, int last_timestep, int max_frames) {
  std::string list;
  std::istringstream lines(response);
  std::string line;
  bool tagged = false;
  while (std::getline(lines, line)) {
    const auto pos = line.find("TIMESTEPS:");
    if (pos != std::string::npos) {
      list = line.substr(pos + 10);
      tagged = true;
      break;
    }
  }
  if (!tagged) list = response;

  std::vector<int> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    long v = 0;
    try {
      v = std::stol(token);
    } catch (const std::exception&) {
      throw MalformedResponse("bad timestep token: " + token);
    }
    if (v < 0 || v > last_timestep) {
      throw MalformedResponse("timestep " + token + " outside of the demonstration");
    }
    out.push_back(static_cast<int>(v));
    token.clear();
  };
  for (char c : list) {
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && token.empty())) {
      token += c;
    } else if (c == ',' || std::isspace(static_cast<unsigned char>(c)) ||
               (tagged && (c == '[' || c == ']'))) {
      flush();
    } else {
      throw MalformedResponse(std::string("unexpected character in timestep list: ") + c);
    }
  }
  flush();
  if (out.empty()) throw MalformedResponse("no timesteps in response");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (static_cast<int>(out.size()) > max_frames) out.resize(static_cast<std::size_t>(max_frames));
  return out;
}

std::vector<int> select_viewframes(Gateway& gateway, const DemoSummary& summary,
                                   const TaskDescription& task, const AnnotationOptions& options) {
  if (summary.rows.empty()) throw EmptyDemo("empty demo summary");
  const std::string prompt = prompts::render(
      "viewframes.v1", {{"task", task.text},
                        {"last_timestep", std::to_string(summary.last_timestep)},
                        {"summary", render_summary(summary)},
                        {"max_frames", std::to_string(options.max_viewframes)}});
  std::vector<Attachment> images;
  if (summary.first_image) images.push_back(*summary.first_image);
  if (summary.final_image) images.push_back(*summary.final_image);
  const Session session = gateway.fresh_session();
  const Completion c = gateway.complete(session, prompt, images, options.params);
  return parse_viewframes(c.text, summary.last_timestep, options.max_viewframes);
}

std::string render_keypose_block(const std::vector<Keypose>& keyposes, const Rotation& home) {
  std::string out;
  for (const auto& k : keyposes) {
    out += fmt::format("- t={} {} gripper={} objects=[{}]", k.t, format_pose(k.pose, home),
                       gripper_word(k.gripper), join(k.relevant_objects, ", "));
    if (!k.relation_note.empty()) out += " note: " + k.relation_note;
    out += '\n';
  }
  return out;
}

Annotation parse_annotation_response(const std::string& response, const Demonstration& demo,
                                     const Rotation& home) {
  const std::string body = prompts::extract_json_object(response);
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (body.empty() || j.is_discarded() || !j.is_object()) {
    throw MalformedResponse("annotation response is not a JSON object");
  }
  Annotation a;
  try {
    std::string narrative = j.at("description").get<std::string>();
    if (j.contains("instructions")) {
      narrative += "\nInstructions: " + j.at("instructions").get<std::string>();
    }
    const auto& list = j.at("keyposes");
    if (!list.is_array() || list.empty()) throw MalformedResponse("keyposes must be a non-empty array");
    const int last = demo.last_timestep();
    for (const auto& item : list) {
      Keypose k;
      k.t = read_timestep(item);
      if (k.t < 0 || k.t > last) {
        throw MalformedResponse("keypose timestep " + std::to_string(k.t) +
                                " outside of the demonstration");
      }
      k.pose = pose_from_mm_deg(read_vec3(item, "pos_mm"), read_vec3(item, "euler_deg"), home);
      k.gripper = demo.actions[static_cast<std::size_t>(k.t)].gripper;
      if (item.contains("objects")) k.relevant_objects = item.at("objects").get<std::vector<std::string>>();
      if (item.contains("note")) k.relation_note = item.at("note").get<std::string>();
      a.keyposes.push_back(std::move(k));
    }
    a.description_text = with_block(narrative, a.keyposes, home);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("annotation response has wrong shape: ") + e.what());
  }
  a.source_demo_id = demo.id;
  return a;
}

AnnotationResult annotate(Gateway& gateway, const Demonstration& demo, const std::vector<int>& frames,
                          const TaskDescription& task, const Rotation& home,
                          const AnnotationOptions& options) {
  validate(demo);
  const int last = demo.last_timestep();
  std::string trajectory;
  for (int t = 0; t <= last; ++t) {
    trajectory += fmt::format("t={} {} gripper={}\n", t, format_pose(demo.observations[t].robot, home),
                              gripper_word(demo.actions[t].gripper));
  }
  std::string frame_text;
  std::vector<Attachment> images;
  for (int t : frames) {
    if (t < 0 || t > last) throw std::invalid_argument("viewframe outside demonstration");
    frame_text += fmt::format("t={} {}\n", t, format_objects(demo.observations[t].objects));
    if (options.images) {
      if (auto img = options.images(t)) images.push_back(std::move(*img));
    }
  }
  const std::string prompt = prompts::render(
      "annotate.v1", {{"task", task.text}, {"trajectory", trajectory}, {"frames", frame_text}});

  const int attempts = std::max(1, options.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const Session session = gateway.fresh_session();
    const Completion c = gateway.complete(session, prompt, images, options.params);
    try {
      Annotation raw = parse_annotation_response(c.text, demo, home);
      raw.id = options.annotation_id;
      raw.created_by = "llm(" + options.params.model + ")";
      return {repair_annotation(raw, demo, home), attempt};
    } catch (const MalformedResponse& e) {
      last_error = e.what();
    }
  }
  throw AnnotationFailed("annotation failed after " + std::to_string(attempts) +
                             " attempts: " + last_error,
                         attempts);
}

AnnotationResult create_annotation(Gateway& gateway, const Demonstration& demo,
                                   const TaskDescription& task, const Rotation& home,
                                   const AnnotationOptions& options) {
  if (task.text.empty()) throw std::invalid_argument("task description must not be empty");
  const int attempts = std::max(1, options.max_retries);
  AnnotationOptions single = options;
  single.max_retries = 1;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      DemoSummary summary = summarize_demo(demo, home, options.cadence, options.jitter,
                                           derive_seed(options.seed, {static_cast<std::uint64_t>(attempt)}));
      if (options.images) {
        summary.first_image = options.images(0);
        summary.final_image = options.images(demo.last_timestep());
      }
      const std::vector<int> frames = select_viewframes(gateway, summary, task, options);
      AnnotationResult r = annotate(gateway, demo, frames, task, home, single);
      r.retries = attempt;
      return r;
    } catch (const MalformedResponse& e) {
      last_error = e.what();
    } catch (const AnnotationFailed& e) {
      last_error = e.what();
    }
  }
  throw AnnotationFailed("annotation failed after " + std::to_string(attempts) +
                             " attempts: " + last_error,
                         attempts);
}

Annotation repair_annotation(const Annotation& raw, const Demonstration& demo) {
  validate(demo);
  return repair_annotation(raw, demo, demo.observations.front().robot.rotation);
}

Annotation repair_annotation(const Annotation& raw, const Demonstration& demo, const Rotation& home) {
  validate(demo);
  const int last = demo.last_timestep();
  Annotation out = raw;
  out.keyposes.clear();

  std::map<int, Keypose> by_t;
  for (const auto& k : raw.keyposes) {
    if (k.t < 0 || k.t > last) throw std::invalid_argument("keypose timestep outside demonstration");
    by_t.try_emplace(k.t, k);
  }
  for (int t : {0, last}) {
    if (!by_t.count(t)) {
      Keypose k;
      k.t = t;
      k.relation_note = t == 0 ? "initial pose" : "final pose";
      by_t.emplace(t, std::move(k));
    }
  }
  for (auto& [t, k] : by_t) {
    k.pose = demo.observations[static_cast<std::size_t>(t)].robot;
    k.gripper = demo.actions[static_cast<std::size_t>(t)].gripper;
    out.keyposes.push_back(k);
  }
  out.description_text = with_block(narrative_of(raw.description_text), out.keyposes, home);
  return out;
}

Annotation scripted_annotate(const Demonstration& demo, TaskKind task_kind) {
  validate(demo);
  const int last = demo.last_timestep();
  std::vector<int> ts{0};
  for (int t = 1; t <= last; ++t) {
    if (demo.actions[t].gripper != demo.actions[t - 1].gripper) ts.push_back(t);
  }
  if (ts.back() != last) ts.push_back(last);

  const Rotation home = demo.observations.front().robot.rotation;
  Annotation a;
  a.id = "scripted-" + demo.id;
  a.source_demo_id = demo.id;
  a.created_by = "scripted";
  for (int t : ts) {
    const Observation& o = demo.observations[static_cast<std::size_t>(t)];
    Keypose k;
    k.t = t;
    k.pose = o.robot;
    k.gripper = demo.actions[static_cast<std::size_t>(t)].gripper;
    double best = kRelevanceRadius;
    const std::string* nearest = nullptr;
    const Pose* nearest_pose = nullptr;
    for (const auto& [id, pose] : o.objects) {
      if (id == o.held_object) continue;
      const double d = (pose.position - o.robot.position).norm();
      if (d <= best) {
        best = d;
        nearest = &id;
        nearest_pose = &pose;
      }
    }
    if (nearest) {
      k.relevant_objects.push_back(*nearest);
      k.relation_note = "offset from " + *nearest + " " +
                        format_vec((o.robot.position - nearest_pose->position) * 1000.0, 3) + " mm";
    }
    a.keyposes.push_back(std::move(k));
  }
  const std::string narrative = fmt::format(
      "Scripted annotation of a {} demonstration ({}). Key poses sit at gripper transitions; "
      "each one moves rigidly with its related object.",
      to_string(task_kind), demo.id);
  a.description_text = with_block(narrative, a.keyposes, home);
  return a;
}

std::vector<TimedPose> timed_poses(const std::vector<Keypose>& keyposes) {
  std::vector<TimedPose> out;
  out.reserve(keyposes.size());
  for (const auto& k : keyposes) out.push_back({k.t, k.pose});
  return out;
}

nlohmann::json annotation_to_json(const Annotation& a) {
  nlohmann::json kps = nlohmann::json::array();
  for (const auto& k : a.keyposes) {
    const Vec3 mm = k.pose.position * 1000.0;
    const Vec3 deg = k.pose.rotation.euler_deg();
    kps.push_back({{"t", k.t},
                   {"pos_mm", {mm.x(), mm.y(), mm.z()}},
                   {"euler_deg", {deg.x(), deg.y(), deg.z()}},
                   {"gripper", gripper_word(k.gripper)},
                   {"objects", k.relevant_objects},
                   {"note", k.relation_note}});
  }
  return {{"id", a.id},
          {"source_demo_id", a.source_demo_id},
          {"created_by", a.created_by},
          {"description_text", a.description_text},
          {"keyposes", std::move(kps)}};
}

Annotation annotation_from_json(const nlohmann::json& j) {
  Annotation a;
  a.id = j.at("id").get<std::string>();
  a.source_demo_id = j.at("source_demo_id").get<std::string>();
  a.created_by = j.at("created_by").get<std::string>();
  a.description_text = j.at("description_text").get<std::string>();
  for (const auto& item : j.at("keyposes")) {
    Keypose k;
    k.t = item.at("t").get<int>();
    k.pose = pose_from_mm_deg(read_vec3(item, "pos_mm"), read_vec3(item, "euler_deg"));
    const auto g = item.at("gripper").get<std::string>();
    if (g != "open" && g != "closed") throw std::invalid_argument("unknown gripper state: " + g);
    k.gripper = g == "closed" ? Gripper::closed : Gripper::open;
    k.relevant_objects = item.at("objects").get<std::vector<std::string>>();
    k.relation_note = item.at("note").get<std::string>();
    a.keyposes.push_back(std::move(k));
  }
  return a;
}

}  // namespace demoaug
