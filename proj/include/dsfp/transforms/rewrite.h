#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/transforms/chat.h"

namespace dsfp {

struct RewritePrompt {
  int id;
  std::string_view text;
};

const std::array<RewritePrompt, 3>& rewrite_prompts();
// Throws InvalidArgument unless id is 1, 2 or 3.
const RewritePrompt& rewrite_prompt(int id);

// Messages sent for a rewrite: the template as the system message and the
// text as the user message.
std::vector<ChatMessage> rewrite_messages(const RewritePrompt& prompt, std::string_view text);

// Throws EndpointError on transport failure or an empty response.
std::string rewrite(std::string_view text, const RewritePrompt& prompt, ChatClient& client);

inline constexpr std::array<std::string_view, 14> kCategoryNames = {
    "Advertisement",       "Health,Wellness & Fitness", "Food & Nutrition",  "Lifestyle & Recreation",
    "News & Media",        "Science",                   "Technology",        "Education",
    "Business & Finance",  "Politics & Policy",         "Arts & Entertainment", "Society & Culture",
    "Community",           "Other"};
inline constexpr std::size_t kOtherCategory = 13;

// The instruction sent with every categorization request.
std::string categorization_prompt();
// Same request phrased more insistently; used for the single retry.
std::string categorization_retry_prompt();

// Maps a reply to a category index. Case, surrounding punctuation, quotes,
// a "Category:" prefix and the spacing around the comma in the health label
// are ignored. Returns nullopt when the reply names no category or more
// than one.
std::optional<std::size_t> parse_category(std::string_view reply);

struct CategoryResult {
  std::size_t category = kOtherCategory;
  bool flagged = false;  // reply was unparseable twice and mapped to Other
  int attempts = 0;
  std::string raw;       // last reply
  std::string_view name() const { return kCategoryNames[category]; }
};

// Endpoint failures propagate as EndpointError.
CategoryResult categorize(std::string_view text, ChatClient& client);

struct CategoryDistribution {
  std::array<std::size_t, 14> counts{};
  std::size_t total = 0;
  std::array<double, 14> percent{};
  json to_json() const;
  std::string format_table() const;
};

// Throws InvalidArgument on an empty input.
CategoryDistribution aggregate_categories(const std::vector<std::size_t>& labels);
CategoryDistribution aggregate_categories(const std::vector<std::string>& labels);

// Batch drivers over {id, text} records. Every output carries id, text and a
// status of "ok" or the error kind; a failed record never stops the batch.
// rewrite_batch replaces text with the rewrite ("" on failure);
// categorize_batch keeps the text and adds category and flagged.
std::vector<json> rewrite_batch(const std::vector<json>& records, const RewritePrompt& prompt, ChatClient& client);
std::vector<json> categorize_batch(const std::vector<json>& records, ChatClient& client);

}  // namespace dsfp
