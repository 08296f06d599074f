#pragma once

#include <map>
#include <string>

namespace demoaug::prompts {

/// Raw template text by name ("viewframes.v1", "annotate.v1", "retarget.v1").
const std::string& template_text(const std::string& name);

/// Substitutes every {{key}}. Throws std::invalid_argument on a placeholder
/// without a value.
std::string render(const std::string& template_name, const std::map<std::string, std::string>& values);

/// Returns the outermost {...} span of `text`, tolerating code fences and
/// chatter around it. Empty when there is none.
std::string extract_json_object(const std::string& text);

}  // namespace demoaug::prompts
