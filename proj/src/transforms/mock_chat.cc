#include "dsfp/transforms/mock_chat.h"

#include <httplib.h>

#include "dsfp/common/error.h"

namespace dsfp {

uint64_t mock_token_count(std::string_view s) {
  uint64_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void MockLedger::record(MockLedgerEntry e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<MockLedgerEntry> MockLedger::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t MockLedger::calls() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ChatUsage MockLedger::billed() const {
  std::lock_guard lock(mu_);
  ChatUsage u;
  for (const auto& e : entries_) {
    if (e.failed) continue;
    u.prompt_tokens += e.usage.prompt_tokens;
    u.completion_tokens += e.usage.completion_tokens;
  }
  return u;
}

MockResponder identity_responder() {
  return [](const ChatRequest& req) -> std::optional<std::string> {
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
      if (it->role == "user") return it->content;
    }
    return std::string();
  };
}

namespace {

// Shared by both mocks: run the responder and fill in the ledger entry.
MockLedgerEntry answer(const MockResponder& responder, const ChatRequest& req) {
  MockLedgerEntry e;
  e.request = req;
  auto reply = responder(req);
  if (!reply) {
    e.failed = true;
    return e;
  }
  e.reply = *reply;
  for (const auto& m : req.messages) e.usage.prompt_tokens += mock_token_count(m.content);
  e.usage.completion_tokens = mock_token_count(e.reply);
  return e;
}

}  // namespace

MockChatTransport::MockChatTransport(MockResponder responder) : responder_(std::move(responder)) {}

ChatReply MockChatTransport::send(const ChatRequest& request) {
  MockLedgerEntry e = answer(responder_, request);
  ledger_.record(e);
  if (e.failed) throw EndpointError("mock endpoint failure");
  return ChatReply{e.reply, e.usage};
}

struct MockChatServer::Impl {
  httplib::Server server;
};

MockChatServer::MockChatServer(MockResponder responder)
    : impl_(std::make_unique<Impl>()), responder_(std::move(responder)) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& hreq, httplib::Response& res) {
    ChatRequest req;
    try {
      req = ChatRequest::from_json(json::parse(hreq.body));
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    MockLedgerEntry e = answer(responder_, req);
    ledger_.record(e);
    if (e.failed) {
      res.status = 503;
      res.set_content(R"({"error":"mock failure"})", "application/json");
      return;
    }
    json body{{"object", "chat.completion"},
              {"model", req.model},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", e.reply}}},
                                        {"finish_reason", "stop"}}})},
              {"usage",
               {{"prompt_tokens", e.usage.prompt_tokens},
                {"completion_tokens", e.usage.completion_tokens},
                {"total_tokens", e.usage.prompt_tokens + e.usage.completion_tokens}}}};
    res.set_content(body.dump(), "application/json");
  });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw IoError("mock chat server could not bind a port");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

}  // namespace dsfp
