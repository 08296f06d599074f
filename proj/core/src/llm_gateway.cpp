#include "demoaug/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <thread>

namespace demoaug {

AuditLog::AuditLog(std::string path) : path_(std::move(path)) {}

void AuditLog::append(const PromptExchange& e) {
  std::lock_guard lock(mu_);
  entries_.push_back(e);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << to_jsonl(e) << '\n';
  }
}

std::vector<PromptExchange> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string AuditLog::to_jsonl(const PromptExchange& e) {
  nlohmann::json j = {{"session", e.session_id},     {"request", e.request},
                      {"attachments", e.attachment_types}, {"response", e.response},
                      {"latency_ms", e.latency_ms},  {"model", e.model},
                      {"retries", e.retries},        {"error", e.error}};
  return j.dump();
}

PromptExchange AuditLog::from_jsonl(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  PromptExchange e;
  e.session_id = j.at("session").get<std::string>();
  e.request = j.at("request").get<std::string>();
  e.attachment_types = j.at("attachments").get<std::vector<std::string>>();
  e.response = j.at("response").get<std::string>();
  e.latency_ms = j.at("latency_ms").get<double>();
  e.model = j.at("model").get<std::string>();
  e.retries = j.at("retries").get<int>();
  e.error = j.at("error").get<std::string>();
  return e;
}

std::vector<PromptExchange> AuditLog::read(std::istream& in) {
  std::vector<PromptExchange> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(from_jsonl(line));
  }
  return out;
}

Gateway::Gateway(std::shared_ptr<AuditLog> log, RetryPolicy retry)
    : log_(log ? std::move(log) : std::make_shared<AuditLog>()), retry_(retry) {}

Session Gateway::fresh_session() {
  return {session_prefix() + "-" + std::to_string(next_session_.fetch_add(1))};
}

Completion Gateway::complete(const Session& session, const std::string& prompt,
                             const std::vector<Attachment>& attachments,
                             const CompletionParams& params) {
  if (prompt.empty()) throw GatewayError(GatewayErrorKind::protocol, "empty prompt");
  CompletionRequest request{session, prompt, attachments, params};

  PromptExchange exchange;
  exchange.session_id = session.id;
  exchange.request = prompt;
  exchange.model = params.model;
  for (const auto& a : attachments) exchange.attachment_types.push_back(a.media_type);

  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](int retries) {
    exchange.retries = retries;
    exchange.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    log_->append(exchange);
  };

  bool last_timed_out = false;
  std::string last_error;
  for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
    if (attempt > 0 && retry_.base_delay.count() > 0) {
      std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));
    }
    try {
      exchange.response = send(request);
      finish(attempt);
      return {exchange.response, attempt};
    } catch (const TransientFailure& f) {
      last_timed_out = f.timed_out();
      last_error = f.what();
    } catch (const GatewayError& e) {
      exchange.error = e.what();
      finish(attempt);
      throw;
    }
  }
  exchange.error = last_error;
  finish(retry_.max_retries);
  throw GatewayError(last_timed_out ? GatewayErrorKind::timeout : GatewayErrorKind::exhausted,
                     "completion failed after " + std::to_string(retry_.max_retries) +
                         " retries: " + last_error);
}

MockGateway::MockGateway(std::shared_ptr<AuditLog> log)
    : Gateway(std::move(log), RetryPolicy{3, std::chrono::milliseconds(0)}) {}

std::unique_ptr<MockGateway> MockGateway::always(std::string text) {
  auto g = std::make_unique<MockGateway>();
  g->respond_with([text = std::move(text)](const CompletionRequest&) { return text; });
  return g;
}

MockGateway& MockGateway::reply(std::string text) {
  std::lock_guard lock(mu_);
  script_.push_back({Step::Kind::reply, std::move(text)});
  return *this;
}

MockGateway& MockGateway::fail_transient(int times) {
  std::lock_guard lock(mu_);
  for (int i = 0; i < times; ++i) script_.push_back({Step::Kind::transient, {}});
  return *this;
}

MockGateway& MockGateway::fail_timeout(int times) {
  std::lock_guard lock(mu_);
  for (int i = 0; i < times; ++i) script_.push_back({Step::Kind::timeout, {}});
  return *this;
}

MockGateway& MockGateway::fail_auth() {
  std::lock_guard lock(mu_);
  script_.push_back({Step::Kind::auth, {}});
  return *this;
}

MockGateway& MockGateway::respond_with(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
  return *this;
}

std::string MockGateway::send(const CompletionRequest& request) {
  Step step;
  Responder responder;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (script_.empty()) {
      if (!responder_) throw GatewayError(GatewayErrorKind::protocol, "mock script exhausted");
      responder = responder_;
    } else {
      step = std::move(script_.front());
      script_.pop_front();
    }
  }
  if (responder) return responder(request);
  switch (step.kind) {
    case Step::Kind::reply:
      return step.text;
    case Step::Kind::transient:
      throw TransientFailure("mock transient failure");
    case Step::Kind::timeout:
      throw TransientFailure("mock timeout", true);
    case Step::Kind::auth:
      throw GatewayError(GatewayErrorKind::auth, "mock authentication failure");
  }
  return {};
}

}  // namespace demoaug
