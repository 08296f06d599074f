#include "demoaug/llm_gateway.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>

namespace demoaug {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw GatewayError(GatewayErrorKind::protocol, "endpoint must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpGateway::HttpGateway(HttpGatewayConfig config, std::shared_ptr<AuditLog> log)
    : Gateway(std::move(log), config.retry), config_(std::move(config)) {}

std::string HttpGateway::request_body(const CompletionRequest& request) {
  nlohmann::json content;
  if (request.attachments.empty()) {
    content = request.prompt;
  } else {
    content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    for (const auto& a : request.attachments) {
      const std::string url = "data:" + a.media_type + ";base64," + httplib::detail::base64_encode(a.bytes);
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
  }
  nlohmann::json body = {{"model", request.params.model},
                         {"temperature", request.params.temperature},
                         {"max_tokens", request.params.max_tokens},
                         {"messages", {{{"role", "user"}, {"content", content}}}}};
  return body.dump();
}

std::string HttpGateway::parse_response_body(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw GatewayError(GatewayErrorKind::protocol, "response is not JSON");
  try {
    const auto& message = j.at("choices").at(0).at("message");
    return message.at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(GatewayErrorKind::protocol, std::string("unexpected response shape: ") + e.what());
  }
}

std::string HttpGateway::send(const CompletionRequest& request) {
  const char* key = std::getenv(config_.credential_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw GatewayError(GatewayErrorKind::auth,
                       "credential variable " + config_.credential_env + " is not set");
  }
  const SplitUrl url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.connect_timeout);
  client.set_read_timeout(request.params.timeout);
  client.set_write_timeout(request.params.timeout);
  client.set_bearer_token_auth(key);

  auto res = client.Post(url.path, request_body(request), "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    throw TransientFailure("transport error: " + httplib::to_string(err), timed_out);
  }
  if (res->status == 401 || res->status == 403) {
    throw GatewayError(GatewayErrorKind::auth, "endpoint rejected credentials (HTTP " +
                                                   std::to_string(res->status) + ")");
  }
  if (res->status == 408) throw TransientFailure("HTTP 408", true);
  if (res->status == 429 || res->status >= 500) {
    throw TransientFailure("HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw GatewayError(GatewayErrorKind::protocol, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  return parse_response_body(res->body);
}

}  // namespace demoaug
