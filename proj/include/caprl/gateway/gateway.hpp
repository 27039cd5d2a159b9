#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace caprl::gateway {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

// One chat-completion call. `choices` switches the request into constrained
// single-label decoding; such requests must use max_tokens = 1 and
// temperature = 0 (validate() enforces this).
struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 256;
  std::optional<std::vector<std::string>> choices;

  nlohmann::json to_json() const;  // wire shape
  void validate() const;           // throws ProtocolError on bad shape
  std::uint64_t digest() const;    // stable content hash of the wire shape
};

struct GatewayConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8011
  std::string model = "local-model";
  int timeout_ms = 30000;
  int max_retries = 2;     // extra attempts after the first
  int max_in_flight = 4;   // concurrent request cap
  std::string audit_path;  // JSONL call log; empty disables

  // Reads CAPRL_GATEWAY_URL, _MODEL, _TIMEOUT_MS, _RETRIES, _MAX_IN_FLIGHT,
  // _AUDIT. Unset variables keep the defaults above.
  static GatewayConfig from_env();
};

// Result of a constrained single-label decode. `scores` is present only when
// the backend can expose per-choice scores (the mock can; plain HTTP
// endpoints usually cannot, and callers then treat `label` as the argmax).
struct ChoiceResult {
  std::string label;
  std::optional<std::map<std::string, double>> scores;
};

class Gateway {
 public:
  virtual ~Gateway() = default;

  // Free-form completion; returns the generated text.
  virtual std::string complete(const ChatRequest& req) = 0;

  // Constrained choice: forces temperature 0 / max_tokens 1 / the label set
  // onto `req`, then decodes exactly one label. The label may still fall
  // outside `labels` (a misbehaving backend); callers are expected to handle
  // that.
  ChoiceResult choose(ChatRequest req, const std::vector<std::string>& labels);

 protected:
  virtual ChoiceResult choose_impl(const ChatRequest& req) = 0;
};

// Deterministic in-process stand-in for a model server. Responses are a pure
// function of (seed, request digest) unless a scripted reply is queued.
// Constrained choices score each label by lexical overlap between the label's
// section of the prompt and the final user message, with a fixed floor for
// the reserved BASE label, so routing prompts resolve sensibly offline.
class MockGateway : public Gateway {
 public:
  explicit MockGateway(std::uint64_t seed = 0);

  void push_response(std::string text);  // FIFO, consumed by complete()
  void push_choice(std::string label);   // FIFO, consumed by choose() verbatim
  void set_choice_bias(const std::string& label, double score);

  std::string complete(const ChatRequest& req) override;
  int calls() const;

  // Exposed for tests: the heuristic label scores for a request.
  std::map<std::string, double> label_scores(const ChatRequest& req,
                                             const std::vector<std::string>& labels) const;

 protected:
  ChoiceResult choose_impl(const ChatRequest& req) override;

 private:
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::deque<std::string> scripted_;
  std::deque<std::string> scripted_choices_;
  std::map<std::string, double> bias_;
  int calls_ = 0;
};

// HTTP client for an OpenAI-style /v1/chat/completions endpoint. Retries
// transport failures and non-2xx statuses up to max_retries; malformed
// response bodies are fatal (ProtocolError). At most max_in_flight requests
// run concurrently; peak_in_flight() reports the high-water mark.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(GatewayConfig config);
  ~HttpGateway() override;

  std::string complete(const ChatRequest& req) override;
  int peak_in_flight() const;
  const GatewayConfig& config() const { return config_; }

 protected:
  ChoiceResult choose_impl(const ChatRequest& req) override;

 private:
  std::string post_with_retries(const ChatRequest& req);

  GatewayConfig config_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Appends one JSONL record per call to config.audit_path when set. Shared by
// gateway implementations; exposed for tests.
void audit_call(const std::string& path, const ChatRequest& req, const std::string& response);

}  // namespace caprl::gateway
