#include "caprl/gateway/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <set>
#include <thread>

#include <httplib.h>

#include "caprl/common.hpp"

namespace caprl::gateway {

using nlohmann::json;

nlohmann::json ChatRequest::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"content", m.content}, {"role", m.role}});
  json j = {{"max_tokens", max_tokens},
            {"messages", msgs},
            {"model", model},
            {"temperature", temperature}};
  if (choices) j["structured_outputs"] = {{"choice", *choices}};
  return j;
}

void ChatRequest::validate() const {
  if (messages.empty()) throw ProtocolError("chat request has no messages");
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw ProtocolError("chat message has unknown role '" + m.role + "'");
    }
  }
  if (max_tokens < 1) throw ProtocolError("chat request max_tokens must be >= 1");
  if (choices) {
    if (choices->empty()) throw ProtocolError("constrained request has an empty choice set");
    if (max_tokens != 1) throw ProtocolError("constrained request must use max_tokens = 1");
    if (temperature != 0.0) throw ProtocolError("constrained request must use temperature = 0");
  }
}

std::uint64_t ChatRequest::digest() const { return fnv1a64(to_json().dump()); }

namespace {

std::string env_or(const char* key, const std::string& fallback) {
  const char* v = std::getenv(key);
  return v ? std::string(v) : fallback;
}

int env_or_int(const char* key, int fallback) {
  const char* v = std::getenv(key);
  if (!v) return fallback;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string("environment variable ") + key + " is not an integer");
  }
}

}  // namespace

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig c;
  c.endpoint = env_or("CAPRL_GATEWAY_URL", c.endpoint);
  c.model = env_or("CAPRL_GATEWAY_MODEL", c.model);
  c.timeout_ms = env_or_int("CAPRL_GATEWAY_TIMEOUT_MS", c.timeout_ms);
  c.max_retries = env_or_int("CAPRL_GATEWAY_RETRIES", c.max_retries);
  c.max_in_flight = env_or_int("CAPRL_GATEWAY_MAX_IN_FLIGHT", c.max_in_flight);
  c.audit_path = env_or("CAPRL_GATEWAY_AUDIT", c.audit_path);
  if (c.timeout_ms <= 0) throw ConfigError("gateway timeout_ms must be positive");
  if (c.max_retries < 0) throw ConfigError("gateway max_retries must be >= 0");
  if (c.max_in_flight < 1) throw ConfigError("gateway max_in_flight must be >= 1");
  return c;
}

ChoiceResult Gateway::choose(ChatRequest req, const std::vector<std::string>& labels) {
  req.choices = labels;
  req.max_tokens = 1;
  req.temperature = 0.0;
  req.validate();
  return choose_impl(req);
}

// --- MockGateway -------------------------------------------------------------

MockGateway::MockGateway(std::uint64_t seed) : seed_(seed) {}

void MockGateway::push_response(std::string text) {
  std::lock_guard lk(mu_);
  scripted_.push_back(std::move(text));
}

void MockGateway::push_choice(std::string label) {
  std::lock_guard lk(mu_);
  scripted_choices_.push_back(std::move(label));
}

void MockGateway::set_choice_bias(const std::string& label, double score) {
  std::lock_guard lk(mu_);
  bias_[label] = score;
}

int MockGateway::calls() const {
  std::lock_guard lk(mu_);
  return calls_;
}

std::string MockGateway::complete(const ChatRequest& req) {
  req.validate();
  std::lock_guard lk(mu_);
  ++calls_;
  if (!scripted_.empty()) {
    std::string out = scripted_.front();
    scripted_.pop_front();
    return out;
  }
  return "mock:" + hex64(fnv1a64_u64(req.digest(), seed_));
}

namespace {

constexpr double kBaseChoicePrior = 0.35;

std::set<std::string> token_set(const std::string& text) {
  std::set<std::string> out;
  for (auto& t : tokenize(to_lower(text))) out.insert(std::move(t));
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  return lines;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

// Section of the prompt introduced by a line starting with "<label>) ",
// running until the next such marker (any label), a blank line, or the end
// of the text. Closing on blank lines keeps trailing instructions and the
// echoed task out of the last card's section.
std::map<std::string, std::string> label_sections(const std::string& text,
                                                  const std::vector<std::string>& labels) {
  auto lines = split_lines(text);
  auto marker_of = [&](const std::string& line) -> std::optional<std::string> {
    for (const auto& l : labels) {
      if (line.rfind(l + ") ", 0) == 0) return l;
    }
    return std::nullopt;
  };
  std::map<std::string, std::string> sections;
  std::optional<std::string> open;
  for (const auto& line : lines) {
    if (auto m = marker_of(line)) {
      open = *m;
      sections[*open] += line.substr(open->size() + 2) + "\n";
    } else if (line.find_first_not_of(" \t\r") == std::string::npos) {
      open.reset();
    } else if (open) {
      sections[*open] += line + "\n";
    }
  }
  return sections;
}

}  // namespace

std::map<std::string, double> MockGateway::label_scores(
    const ChatRequest& req, const std::vector<std::string>& labels) const {
  std::string full;
  std::string task;
  for (const auto& m : req.messages) {
    full += m.content + "\n";
    if (m.role == "user") task = m.content;
  }
  if (task.empty()) task = full;
  const auto task_tokens = token_set(task);
  auto sections = label_sections(full, labels);

  // Tokens that appear in exactly one label's section carry extra weight so
  // near-identical skill descriptions still separate.
  std::map<std::string, int> df;
  for (const auto& [label, text] : sections) {
    for (const auto& t : token_set(text)) df[t] += 1;
  }

  std::map<std::string, double> scores;
  std::lock_guard lk(mu_);
  for (const auto& label : labels) {
    if (auto it = bias_.find(label); it != bias_.end()) {
      scores[label] = it->second;
      continue;
    }
    auto sec = sections.find(label);
    if (sec == sections.end()) {
      scores[label] = label == "BASE" ? kBaseChoicePrior : 0.0;
      continue;
    }
    double best_line = 0.0;
    for (const auto& line : split_lines(sec->second)) {
      best_line = std::max(best_line, jaccard(task_tokens, token_set(line)));
    }
    std::size_t unique_hits = 0;
    for (const auto& t : token_set(sec->second)) {
      if (df[t] == 1 && task_tokens.count(t)) ++unique_hits;
    }
    const double unique_frac =
        task_tokens.empty() ? 0.0
                            : static_cast<double>(unique_hits) / static_cast<double>(task_tokens.size());
    scores[label] = best_line + 0.25 * unique_frac;
  }
  return scores;
}

ChoiceResult MockGateway::choose_impl(const ChatRequest& req) {
  {
    std::lock_guard lk(mu_);
    ++calls_;
    if (!scripted_choices_.empty()) {
      std::string out = scripted_choices_.front();
      scripted_choices_.pop_front();
      return {std::move(out), std::nullopt};
    }
  }
  const auto& labels = *req.choices;
  auto scores = label_scores(req, labels);
  // Scan order: alphabetical with BASE last; strict > keeps the earliest on
  // ties, mirroring the router's own tie rule.
  std::vector<std::string> order(labels.begin(), labels.end());
  std::sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
    const bool ab = a == "BASE", bb = b == "BASE";
    if (ab != bb) return bb;
    return a < b;
  });
  std::string best = order.front();
  double best_score = scores[best];
  for (const auto& label : order) {
    if (scores[label] > best_score) {
      best = label;
      best_score = scores[label];
    }
  }
  return {std::move(best), std::move(scores)};
}

// --- HttpGateway -------------------------------------------------------------

struct HttpGateway::Impl {
  std::string host;
  int port = 80;
  std::string prefix;
  std::counting_semaphore<4096> sem{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

namespace {

struct ParsedEndpoint {
  std::string host;
  int port = 80;
  std::string prefix;
};

// Accepts http://host[:port][/prefix]; anything else is a config error.
ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  ParsedEndpoint out;
  const std::string scheme = "http://";
  if (endpoint.rfind(scheme, 0) != 0) {
    throw ConfigError("gateway endpoint must start with http:// (got '" + endpoint + "')");
  }
  std::string rest = endpoint.substr(scheme.size());
  auto slash = rest.find('/');
  std::string hostport = rest.substr(0, slash);
  out.prefix = slash == std::string::npos ? "" : rest.substr(slash);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  auto colon = hostport.find(':');
  if (colon == std::string::npos) {
    out.host = hostport;
    out.port = 80;
  } else {
    out.host = hostport.substr(0, colon);
    try {
      out.port = std::stoi(hostport.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("gateway endpoint has a bad port: '" + endpoint + "'");
    }
  }
  if (out.host.empty()) throw ConfigError("gateway endpoint has no host: '" + endpoint + "'");
  return out;
}

}  // namespace

HttpGateway::HttpGateway(GatewayConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  if (config_.endpoint.empty()) throw ConfigError("gateway endpoint is not configured");
  if (config_.max_in_flight < 1 || config_.max_in_flight > 4096) {
    throw ConfigError("gateway max_in_flight out of range");
  }
  ParsedEndpoint ep = parse_endpoint(config_.endpoint);
  impl_->host = ep.host;
  impl_->port = ep.port;
  impl_->prefix = ep.prefix;
  impl_->sem.release(config_.max_in_flight);
}

HttpGateway::~HttpGateway() = default;

int HttpGateway::peak_in_flight() const { return impl_->peak.load(); }

std::string HttpGateway::complete(const ChatRequest& req) {
  req.validate();
  return post_with_retries(req);
}

ChoiceResult HttpGateway::choose_impl(const ChatRequest& req) {
  return {post_with_retries(req), std::nullopt};
}

std::string HttpGateway::post_with_retries(const ChatRequest& req) {
  impl_->sem.acquire();
  const int now = impl_->in_flight.fetch_add(1) + 1;
  int seen = impl_->peak.load();
  while (now > seen && !impl_->peak.compare_exchange_weak(seen, now)) {
  }
  struct Release {
    Impl* impl;
    ~Release() {
      impl->in_flight.fetch_sub(1);
      impl->sem.release();
    }
  } release{impl_.get()};

  ChatRequest wire = req;
  if (wire.model.empty()) wire.model = config_.model;
  const std::string body = wire.to_json().dump();
  const std::string path = impl_->prefix + "/v1/chat/completions";

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(25 * attempt));
    httplib::Client cli(impl_->host, impl_->port);
    cli.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    cli.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    auto res = cli.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("gateway returned unparseable body: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
        !parsed["choices"][0]["message"].contains("content") ||
        !parsed["choices"][0]["message"]["content"].is_string()) {
      throw ProtocolError("gateway response missing choices[0].message.content");
    }
    std::string text = parsed["choices"][0]["message"]["content"].get<std::string>();
    if (!config_.audit_path.empty()) audit_call(config_.audit_path, wire, text);
    return text;
  }
  throw TransportError("gateway request failed after " +
                       std::to_string(config_.max_retries + 1) + " attempts (" + last_error + ")");
}

void audit_call(const std::string& path, const ChatRequest& req, const std::string& response) {
  static std::mutex audit_mu;
  std::lock_guard lk(audit_mu);
  std::ofstream out(path, std::ios::app);
  if (!out) return;  // diagnostics only; never fail the caller
  json rec = {{"request", req.to_json()}, {"response", response}};
  out << rec.dump() << "\n";
}

}  // namespace caprl::gateway
