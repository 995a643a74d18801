#include "dsfp/transforms/chat.h"

#include <cstdlib>
#include <ctime>
#include <thread>

#include <httplib.h>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"

namespace dsfp {
namespace {

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void sleep_seconds(double s) {
  if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

}  // namespace

json ChatRequest::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", model}, {"messages", std::move(msgs)}, {"temperature", temperature}};
}

ChatRequest ChatRequest::from_json(const json& j) {
  ChatRequest r;
  r.model = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) {
    r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  r.temperature = j.value("temperature", 0.0);
  return r;
}

ChatReply parse_chat_response(const json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw EndpointError("response has no choices");
  }
  const auto& msg = body["choices"][0].value("message", json::object());
  if (!msg.contains("content") || !msg["content"].is_string()) throw EndpointError("response has no message content");
  ChatReply r;
  r.content = msg["content"].get<std::string>();
  if (body.contains("usage") && body["usage"].is_object()) {
    r.usage.prompt_tokens = body["usage"].value("prompt_tokens", uint64_t{0});
    r.usage.completion_tokens = body["usage"].value("completion_tokens", uint64_t{0});
  }
  return r;
}

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key, double timeout_seconds)
    : api_key_(std::move(api_key)), timeout_(timeout_seconds) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint must be an http(s) URL: " + endpoint);
  const std::string scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw InvalidArgument("unsupported endpoint scheme: " + scheme);
  const auto path_start = endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
  if (!(timeout_ > 0)) throw InvalidArgument("timeout must be positive");
}

ChatReply HttpChatTransport::send(const ChatRequest& request) {
  httplib::Client cli(scheme_host_port_);
  const auto sec = static_cast<time_t>(timeout_);
  const auto usec = static_cast<time_t>((timeout_ - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, request.to_json().dump(), "application/json");
  if (!res) throw EndpointError("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EndpointError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed response body: ") + e.what());
  }
  return parse_chat_response(body);
}

void ChatClientConfig::validate() const {
  if (model.empty()) throw InvalidArgument("chat model name is empty");
  if (max_retries < 0) throw InvalidArgument("max_retries must be non-negative");
  if (!(timeout_seconds > 0)) throw InvalidArgument("timeout_seconds must be positive");
  if (rate_limit_per_second < 0) throw InvalidArgument("rate_limit_per_second must be non-negative");
  if (rate_limit_per_second > 0 && !(burst >= 1)) throw InvalidArgument("burst must be at least 1");
  if (backoff_seconds < 0) throw InvalidArgument("backoff_seconds must be non-negative");
  if (temperature < 0) throw InvalidArgument("temperature must be non-negative");
}

json ChatClientConfig::to_json() const {
  return json{{"endpoint", endpoint},
              {"model", model},
              {"max_retries", max_retries},
              {"timeout_seconds", timeout_seconds},
              {"rate_limit_per_second", rate_limit_per_second},
              {"burst", burst},
              {"backoff_seconds", backoff_seconds},
              {"temperature", temperature},
              {"cache_dir", cache_dir},
              {"api_key_env", api_key_env}};
}

ChatClientConfig ChatClientConfig::from_json(const json& j) {
  ChatClientConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.rate_limit_per_second = j.value("rate_limit_per_second", c.rate_limit_per_second);
  c.burst = j.value("burst", c.burst);
  c.backoff_seconds = j.value("backoff_seconds", c.backoff_seconds);
  c.temperature = j.value("temperature", c.temperature);
  c.cache_dir = j.value("cache_dir", c.cache_dir);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.validate();
  return c;
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {
  if (!(rate_ > 0) || !(burst_ >= 1)) throw InvalidArgument("token bucket needs a positive rate and burst >= 1");
}

void TokenBucket::acquire() {
  for (;;) {
    double wait;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1) {
        tokens_ -= 1;
        return;
      }
      wait = (1 - tokens_) / rate_;
    }
    sleep_seconds(wait);
  }
}

json CostCounters::to_json() const {
  return json{{"requests", requests},
              {"cache_hits", cache_hits},
              {"retries", retries},
              {"failures", failures},
              {"prompt_tokens", prompt_tokens},
              {"completion_tokens", completion_tokens}};
}

json CacheRecord::to_json() const {
  return json{{"key", key},
              {"model", model},
              {"prompt_id", prompt_id},
              {"response", response},
              {"prompt_tokens", usage.prompt_tokens},
              {"completion_tokens", usage.completion_tokens},
              {"timestamp", timestamp}};
}

CacheRecord CacheRecord::from_json(const json& j) {
  CacheRecord r;
  r.key = j.at("key").get<std::string>();
  r.model = j.value("model", "");
  r.prompt_id = j.value("prompt_id", "");
  r.response = j.at("response").get<std::string>();
  r.usage.prompt_tokens = j.value("prompt_tokens", uint64_t{0});
  r.usage.completion_tokens = j.value("completion_tokens", uint64_t{0});
  r.timestamp = j.value("timestamp", "");
  return r;
}

ChatCache::ChatCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ChatCache::key(std::string_view model, std::string_view prompt_id, std::string_view text) {
  // Length prefixes keep field boundaries unambiguous.
  std::string buf;
  for (std::string_view part : {model, prompt_id, text}) {
    buf += std::to_string(part.size());
    buf += ':';
    buf += part;
  }
  return sha256_hex(buf);
}

std::optional<CacheRecord> ChatCache::get(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    CacheRecord r = CacheRecord::from_json(json::parse(read_file(path)));
    if (r.key != key) return std::nullopt;
    memory_.emplace(key, r);
    return r;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses and rewritten
  }
}

void ChatCache::put(const CacheRecord& record) {
  std::lock_guard lock(mu_);
  memory_[record.key] = record;
  if (!dir_.empty()) write_file_atomic(dir_ / (record.key + ".json"), record.to_json().dump(2));
}

ChatClient::ChatClient(ChatClientConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)), cache_(config_.cache_dir) {
  config_.validate();
  if (!transport_) throw InvalidArgument("chat client needs a transport");
  if (config_.rate_limit_per_second > 0) {
    limiter_ = std::make_unique<TokenBucket>(config_.rate_limit_per_second, config_.burst);
  }
}

Completion ChatClient::complete(std::string_view prompt_id, const std::vector<ChatMessage>& messages,
                                std::string_view text) {
  const std::string key = ChatCache::key(config_.model, prompt_id, text);
  if (auto hit = cache_.get(key)) {
    std::lock_guard lock(mu_);
    ++counters_.cache_hits;
    return Completion{hit->response, true, {}};
  }
  ChatRequest req{config_.model, messages, config_.temperature};
  std::string last_error;
  double backoff = config_.backoff_seconds;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      {
        std::lock_guard lock(mu_);
        ++counters_.retries;
      }
      sleep_seconds(backoff);
      backoff *= 2;
    }
    if (limiter_) limiter_->acquire();
    {
      std::lock_guard lock(mu_);
      ++counters_.requests;
    }
    try {
      ChatReply reply = transport_->send(req);
      {
        std::lock_guard lock(mu_);
        counters_.prompt_tokens += reply.usage.prompt_tokens;
        counters_.completion_tokens += reply.usage.completion_tokens;
      }
      cache_.put(CacheRecord{key, config_.model, std::string(prompt_id), reply.content, reply.usage, utc_timestamp()});
      return Completion{std::move(reply.content), false, reply.usage};
    } catch (const EndpointError& e) {
      last_error = e.what();
    }
  }
  {
    std::lock_guard lock(mu_);
    ++counters_.failures;
  }
  throw EndpointError("giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

CostCounters ChatClient::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

std::unique_ptr<ChatClient> make_http_chat_client(const ChatClientConfig& config) {
  config.validate();
  if (config.endpoint.empty()) throw InvalidArgument("no chat endpoint configured");
  std::string key;
  if (!config.api_key_env.empty()) {
    if (const char* v = std::getenv(config.api_key_env.c_str())) key = v;
  }
  auto transport = std::make_shared<HttpChatTransport>(config.endpoint, key, config.timeout_seconds);
  return std::make_unique<ChatClient>(config, std::move(transport));
}

}  // namespace dsfp
