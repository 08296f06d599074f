#include "demoaug/prompt_text.hpp"

#include <stdexcept>

namespace demoaug::prompts {

std::string render(const std::string& template_name, const std::map<std::string, std::string>& values) {
  const std::string& tpl = template_text(template_name);
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(tpl, pos, open - pos);
    const std::string key = tpl.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) {
      throw std::invalid_argument("template " + template_name + " needs a value for " + key);
    }
    out += it->second;
    pos = close + 2;
  }
  out.append(tpl, pos, std::string::npos);
  return out;
}

std::string extract_json_object(const std::string& text) {
  const auto first = text.find('{');
  const auto last = text.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first) return {};
  return text.substr(first, last - first + 1);
}

}  // namespace demoaug::prompts
