#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dsfp/transforms/chat.h"

namespace dsfp {

// Returns the reply text, or nullopt to simulate an endpoint failure.
using MockResponder = std::function<std::optional<std::string>(const ChatRequest&)>;

// Whitespace word count; the mocks charge this many tokens.
uint64_t mock_token_count(std::string_view s);

struct MockLedgerEntry {
  ChatRequest request;
  bool failed = false;
  std::string reply;
  ChatUsage usage;
};

// What a mock endpoint answered and charged, in arrival order.
class MockLedger {
 public:
  void record(MockLedgerEntry e);
  std::vector<MockLedgerEntry> entries() const;
  std::size_t calls() const;
  ChatUsage billed() const;  // sum over successful calls

 private:
  mutable std::mutex mu_;
  std::vector<MockLedgerEntry> entries_;
};

// Echoes the last user message.
MockResponder identity_responder();

// In-process transport; no sockets.
class MockChatTransport final : public ChatTransport {
 public:
  explicit MockChatTransport(MockResponder responder);
  ChatReply send(const ChatRequest& request) override;
  const MockLedger& ledger() const { return ledger_; }

 private:
  MockResponder responder_;
  MockLedger ledger_;
};

// Loopback HTTP server speaking the chat-completions wire format.
class MockChatServer {
 public:
  explicit MockChatServer(MockResponder responder);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  std::string endpoint() const;  // http://127.0.0.1:<port>/v1/chat/completions
  const MockLedger& ledger() const { return ledger_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  MockResponder responder_;
  MockLedger ledger_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace dsfp
