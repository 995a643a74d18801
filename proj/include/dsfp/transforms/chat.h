#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsfp/common/io.h"

namespace dsfp {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  json to_json() const;
  static ChatRequest from_json(const json& j);
};

struct ChatUsage {
  uint64_t prompt_tokens = 0;
  uint64_t completion_tokens = 0;
};

struct ChatReply {
  std::string content;
  ChatUsage usage;
};

// One request/response exchange. Implementations throw EndpointError on any
// failure; retrying is the caller's business.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatReply send(const ChatRequest& request) = 0;
};

// Chat-completions-style JSON over HTTP(S). `endpoint` is the full URL of the
// completions route, e.g. https://api.openai.com/v1/chat/completions.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string api_key, double timeout_seconds);
  ChatReply send(const ChatRequest& request) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  double timeout_;
};

// Parses a chat-completions response body.
ChatReply parse_chat_response(const json& body);

struct ChatClientConfig {
  std::string endpoint;
  std::string model = "gpt-4o-mini";
  int max_retries = 3;
  double timeout_seconds = 60;
  double rate_limit_per_second = 0;  // 0 disables the limiter
  double burst = 1;
  double backoff_seconds = 0.5;      // doubled after every failed attempt
  double temperature = 0.0;
  std::string cache_dir;             // empty keeps the cache in memory only
  std::string api_key_env = "OPENAI_API_KEY";

  void validate() const;
  json to_json() const;
  static ChatClientConfig from_json(const json& j);
};

class TokenBucket {
 public:
  TokenBucket(double rate_per_second, double burst);
  // Blocks until a token is available.
  void acquire();

 private:
  std::mutex mu_;
  double rate_, burst_, tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct CostCounters {
  uint64_t requests = 0;  // attempts that reached the transport
  uint64_t cache_hits = 0;
  uint64_t retries = 0;
  uint64_t failures = 0;  // calls that gave up after every retry
  uint64_t prompt_tokens = 0;
  uint64_t completion_tokens = 0;
  json to_json() const;
};

struct CacheRecord {
  std::string key;
  std::string model;
  std::string prompt_id;
  std::string response;
  ChatUsage usage;
  std::string timestamp;
  json to_json() const;
  static CacheRecord from_json(const json& j);
};

// Content-addressed response cache: key = sha256(model, prompt id, text).
// With a directory, every record is also a file `<key>.json` there.
class ChatCache {
 public:
  explicit ChatCache(std::filesystem::path dir = {});
  static std::string key(std::string_view model, std::string_view prompt_id, std::string_view text);
  std::optional<CacheRecord> get(const std::string& key);
  void put(const CacheRecord& record);

 private:
  std::mutex mu_;
  std::filesystem::path dir_;
  std::unordered_map<std::string, CacheRecord> memory_;
};

struct Completion {
  std::string content;
  bool cached = false;
  ChatUsage usage;  // zero on cache hits
};

// Cache, retries with exponential backoff, rate limiting and cost counters in
// front of a transport. Safe to call from several threads.
class ChatClient {
 public:
  ChatClient(ChatClientConfig config, std::shared_ptr<ChatTransport> transport);

  // `prompt_id` names the instruction template and `text` the payload; the
  // pair plus the model name forms the cache key. Throws EndpointError once
  // the retries are exhausted.
  Completion complete(std::string_view prompt_id, const std::vector<ChatMessage>& messages, std::string_view text);

  CostCounters counters() const;
  const ChatClientConfig& config() const { return config_; }

 private:
  ChatClientConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  ChatCache cache_;
  std::unique_ptr<TokenBucket> limiter_;
  mutable std::mutex mu_;
  CostCounters counters_;
};

// Builds a client for `config`, reading the API key from config.api_key_env.
std::unique_ptr<ChatClient> make_http_chat_client(const ChatClientConfig& config);

}  // namespace dsfp
