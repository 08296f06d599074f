#pragma once

#include "demoaug/errors.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace demoaug {

/// Opaque binary attachment (typically an image) forwarded to the model.
struct Attachment {
  std::string media_type;
  std::string bytes;
};

struct CompletionParams {
  std::string model;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60000};
};

struct Session {
  std::string id;
};

struct CompletionRequest {
  Session session;
  std::string prompt;
  std::vector<Attachment> attachments;
  CompletionParams params;
};

struct Completion {
  std::string text;
  int retries = 0;
};

enum class GatewayErrorKind { exhausted, auth, timeout, protocol };

class GatewayError : public Error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  GatewayErrorKind kind() const noexcept { return kind_; }

 private:
  GatewayErrorKind kind_;
};

/// Raised by transports for failures worth retrying.
class TransientFailure : public Error {
 public:
  TransientFailure(const std::string& what, bool timed_out = false)
      : Error(what), timed_out_(timed_out) {}
  bool timed_out() const noexcept { return timed_out_; }

 private:
  bool timed_out_;
};

/// One logged request/response pair.
struct PromptExchange {
  std::string session_id;
  std::string request;
  std::vector<std::string> attachment_types;
  std::string response;
  double latency_ms = 0.0;
  std::string model;
  int retries = 0;
  std::string error;  // empty on success
};

/// Append-only JSON-lines log of prompt exchanges. Safe for concurrent writers.
class AuditLog {
 public:
  AuditLog() = default;
  /// Also streams each entry to `path` (appending).
  explicit AuditLog(std::string path);

  void append(const PromptExchange& e);
  std::vector<PromptExchange> entries() const;

  static std::string to_jsonl(const PromptExchange& e);
  static PromptExchange from_jsonl(const std::string& line);
  static std::vector<PromptExchange> read(std::istream& in);

 private:
  mutable std::mutex mu_;
  std::vector<PromptExchange> entries_;
  std::string path_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{250};
};

/// Uniform text-completion client. Subclasses provide the transport; this
/// class owns session ids, retries with exponential backoff, and auditing.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<AuditLog> log = nullptr, RetryPolicy retry = {});
  virtual ~Gateway() = default;
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// A session carries no conversational state; each completion is sent as a
  /// standalone prompt.
  Session fresh_session();

  Completion complete(const Session& session, const std::string& prompt,
                      const std::vector<Attachment>& attachments, const CompletionParams& params);

  const std::shared_ptr<AuditLog>& audit_log() const { return log_; }

 protected:
  virtual std::string send(const CompletionRequest& request) = 0;
  virtual std::string session_prefix() const { return "session"; }

 private:
  std::shared_ptr<AuditLog> log_;
  RetryPolicy retry_;
  std::atomic<std::uint64_t> next_session_{1};
};

/// Deterministic in-process double. Replies come from a script queue first,
/// then from the responder function if one is set.
class MockGateway : public Gateway {
 public:
  struct Step {
    enum class Kind { reply, transient, timeout, auth } kind = Kind::reply;
    std::string text;
  };
  using Responder = std::function<std::string(const CompletionRequest&)>;

  explicit MockGateway(std::shared_ptr<AuditLog> log = std::make_shared<AuditLog>());

  static std::unique_ptr<MockGateway> always(std::string text);

  MockGateway& reply(std::string text);
  MockGateway& fail_transient(int times = 1);
  MockGateway& fail_timeout(int times = 1);
  MockGateway& fail_auth();
  MockGateway& respond_with(Responder responder);

  std::size_t calls() const { return calls_; }

 protected:
  std::string send(const CompletionRequest& request) override;
  std::string session_prefix() const override { return "mock"; }

 private:
  std::mutex mu_;
  std::deque<Step> script_;
  Responder responder_;
  std::size_t calls_ = 0;
};

struct HttpGatewayConfig {
  /// Full URL of a chat-completion endpoint, e.g. https://host/v1/chat/completions.
  std::string endpoint;
  /// Environment variable holding the bearer token.
  std::string credential_env = "DEMOAUG_LLM_API_KEY";
  std::chrono::milliseconds connect_timeout{10000};
  RetryPolicy retry;
};

/// Chat-completion style JSON-over-HTTP(S) client.
class HttpGateway : public Gateway {
 public:
  HttpGateway(HttpGatewayConfig config, std::shared_ptr<AuditLog> log = std::make_shared<AuditLog>());

  /// Body sent for a request; exposed for wire-format tests.
  static std::string request_body(const CompletionRequest& request);
  /// Extracts choices[0].message.content. Throws GatewayError(protocol).
  static std::string parse_response_body(const std::string& body);

 protected:
  std::string send(const CompletionRequest& request) override;
  std::string session_prefix() const override { return "http"; }

 private:
  HttpGatewayConfig config_;
};

}  // namespace demoaug
