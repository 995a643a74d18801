#include <iostream>

#include "context.h"
#include "dsfp/common/error.h"
#include "dsfp/transforms/chat.h"
#include "dsfp/transforms/rewrite.h"

namespace dsfp::cli {
namespace {

namespace fs = std::filesystem;

struct ChatOptions {
  std::string in, out;
  ChatClientConfig chat;

  void add(CLI::App* sub) {
    sub->add_option("--in", in, "Input JSONL of {id, text}")->required();
    sub->add_option("--out", out, "Output JSONL")->required();
    sub->add_option("--endpoint", chat.endpoint, "Chat-completions URL")->required();
    sub->add_option("--chat-model", chat.model, "Model name sent to the endpoint");
    sub->add_option("--retries", chat.max_retries, "Retries after a failed request")->check(CLI::NonNegativeNumber);
    sub->add_option("--timeout", chat.timeout_seconds, "Per-request timeout in seconds");
    sub->add_option("--rate-limit", chat.rate_limit_per_second, "Requests per second (0 = unlimited)");
    sub->add_option("--burst", chat.burst, "Token-bucket burst size");
    sub->add_option("--backoff", chat.backoff_seconds, "Initial retry backoff in seconds");
    sub->add_option("--cache-dir", chat.cache_dir, "Response cache directory");
    sub->add_option("--api-key-env", chat.api_key_env, "Environment variable holding the API key");
  }
};

std::size_t count_failed(const std::vector<json>& out) {
  std::size_t n = 0;
  for (const auto& r : out) n += r.value("status", "") != "ok";
  return n;
}

void add_rewrite(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("rewrite", "Rewrite records through a chat endpoint");
  auto o = std::make_shared<ChatOptions>();
  auto prompt = std::make_shared<int>(1);
  o->add(sub);
  sub->add_option("--prompt", *prompt, "Rewrite prompt 1, 2 or 3")->check(CLI::Range(1, 3));
  sub->callback([&common, sub, o, prompt] {
    Run run(*sub, common);
    const fs::path out = o->out;
    const fs::path dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
    if (run.up_to_date(dir)) return;
    auto client = make_http_chat_client(o->chat);
    const auto result = rewrite_batch(read_jsonl(o->in), rewrite_prompt(*prompt), *client);
    write_jsonl(out, result);
    const json costs = client->counters().to_json();
    const std::string stem = out.stem().string() + ".costs";
    run.write_report(dir, stem, costs.dump(2) + "\n",
                     json{{"prompt_id", *prompt}, {"chat", o->chat.to_json()}, {"costs", costs},
                          {"failed", count_failed(result)}});
    run.finish(dir, {out.filename().string(), stem + ".txt", stem + ".jsonl"});
    std::cout << "rewrite: " << result.size() << " records, " << count_failed(result) << " failed\n"
              << costs.dump() << "\n";
  });
}

void add_categorize(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("categorize", "Assign each record one of 13 thematic categories or Other");
  auto o = std::make_shared<ChatOptions>();
  o->add(sub);
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    const fs::path out = o->out;
    const fs::path dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
    if (run.up_to_date(dir)) return;
    auto client = make_http_chat_client(o->chat);
    const auto result = categorize_batch(read_jsonl(o->in), *client);
    write_jsonl(out, result);
    std::vector<std::size_t> labels;
    std::size_t flagged = 0;
    for (const auto& r : result) {
      if (r.value("status", "") != "ok") continue;
      labels.push_back(*parse_category(r.at("category").get<std::string>()));
      flagged += r.value("flagged", false);
    }
    const json costs = client->counters().to_json();
    std::string text;
    json record{{"prompt", categorization_prompt()}, {"costs", costs}, {"flagged", flagged},
                {"failed", count_failed(result)}};
    if (!labels.empty()) {
      const auto dist = aggregate_categories(labels);
      text = dist.format_table();
      record["distribution"] = dist.to_json();
    }
    const std::string stem = out.stem().string() + ".categories";
    run.write_report(dir, stem, text, record);
    run.finish(dir, {out.filename().string(), stem + ".txt", stem + ".jsonl"});
    std::cout << text << "flagged " << flagged << ", failed " << count_failed(result) << "\n" << costs.dump() << "\n";
  });
}

}  // namespace

void add_text_commands(CLI::App& app, Common& common) {
  add_rewrite(app, common);
  add_categorize(app, common);
}

}  // namespace dsfp::cli
