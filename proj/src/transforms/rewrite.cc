#include "dsfp/transforms/rewrite.h"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

const std::array<RewritePrompt, 3>& rewrite_prompts() {
  static const std::array<RewritePrompt, 3> kPrompts = {{
      {1,
       "Rewrite the following text sentence by sentence while preserving its length and the accuracy of its "
       "content. Maintain the overall format, structure, and flow of the text:"},
      {2, "Rewrite the following text while preserving its length and the accuracy of its content:"},
      {3,
       "Rewrite the following text while preserving its length and the accuracy of its content. Do not use "
       "newlines, new paragraphs, itemization, enumeration, and other formatting, unless it is important or "
       "appropriate for better readability:"},
  }};
  return kPrompts;
}

const RewritePrompt& rewrite_prompt(int id) {
  if (id < 1 || id > 3) throw InvalidArgument("rewrite prompt id must be 1, 2 or 3, got " + std::to_string(id));
  return rewrite_prompts()[static_cast<std::size_t>(id - 1)];
}

std::vector<ChatMessage> rewrite_messages(const RewritePrompt& prompt, std::string_view text) {
  return {{"system", std::string(prompt.text)}, {"user", std::string(text)}};
}

std::string rewrite(std::string_view text, const RewritePrompt& prompt, ChatClient& client) {
  auto c = client.complete("rewrite-" + std::to_string(prompt.id), rewrite_messages(prompt, text), text);
  if (c.content.empty()) throw EndpointError("empty rewrite response");
  return std::move(c.content);
}

namespace {

std::string category_list() {
  std::string s;
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    s += "- ";
    s += kCategoryNames[i];
    s += '\n';
  }
  return s;
}

// Lower-cased with everything except letters, digits and '&' dropped, so
// "Health, Wellness & Fitness" and "health,wellness & fitness." agree.
std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '&') out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

const std::array<std::string, 14>& normalized_names() {
  static const std::array<std::string, 14> kNames = [] {
    std::array<std::string, 14> a;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = normalize(kCategoryNames[i]);
    return a;
  }();
  return kNames;
}

}  // namespace

std::string categorization_prompt() {
  return "Classify the text given by the user into the single most appropriate of the following categories:\n" +
         category_list() + "Answer with exactly one category name from the list and nothing else.";
}

std::string categorization_retry_prompt() {
  return "Your answer must be exactly one of these category names, copied verbatim, with no other words:\n" +
         category_list() + "Pick the one that best fits the text given by the user.";
}

std::optional<std::size_t> parse_category(std::string_view reply) {
  std::string r = normalize(reply);
  static const std::string kPrefix = "category";
  if (r.rfind(kPrefix, 0) == 0 && r.size() > kPrefix.size()) {
    const std::string rest = r.substr(kPrefix.size());
    bool names_category = false;
    for (const auto& n : normalized_names()) names_category |= rest == n;
    if (names_category) r = rest;
  }
  if (r.empty()) return std::nullopt;
  for (std::size_t i = 0; i < normalized_names().size(); ++i) {
    if (r == normalized_names()[i]) return i;
  }
  return std::nullopt;
}

CategoryResult categorize(std::string_view text, ChatClient& client) {
  CategoryResult res;
  const std::string user(text);
  auto first = client.complete("categorize", {{"system", categorization_prompt()}, {"user", user}}, text);
  res.attempts = 1;
  res.raw = first.content;
  if (auto c = parse_category(first.content)) {
    res.category = *c;
    return res;
  }
  auto second = client.complete("categorize-retry", {{"system", categorization_retry_prompt()}, {"user", user}}, text);
  res.attempts = 2;
  res.raw = second.content;
  if (auto c = parse_category(second.content)) {
    res.category = *c;
    return res;
  }
  res.category = kOtherCategory;
  res.flagged = true;
  return res;
}

json CategoryDistribution::to_json() const {
  json cats = json::array();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    cats.push_back({{"category", kCategoryNames[i]}, {"count", counts[i]}, {"percent", percent[i]}});
  }
  return json{{"total", total}, {"categories", std::move(cats)}};
}

std::string CategoryDistribution::format_table() const {
  std::string out;
  char line[128];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::snprintf(line, sizeof line, "%-28s %8zu %7.2f%%\n", std::string(kCategoryNames[i]).c_str(), counts[i],
                  percent[i]);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-28s %8zu\n", "total", total);
  out += line;
  return out;
}

CategoryDistribution aggregate_categories(const std::vector<std::size_t>& labels) {
  if (labels.empty()) throw InvalidArgument("no category labels to aggregate");
  CategoryDistribution d;
  for (std::size_t l : labels) {
    if (l >= kCategoryNames.size()) throw InvalidArgument("category index out of range: " + std::to_string(l));
    ++d.counts[l];
  }
  d.total = labels.size();
  for (std::size_t i = 0; i < d.counts.size(); ++i) {
    d.percent[i] = 100.0 * static_cast<double>(d.counts[i]) / static_cast<double>(d.total);
  }
  return d;
}

CategoryDistribution aggregate_categories(const std::vector<std::string>& labels) {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) {
    auto c = parse_category(l);
    if (!c) throw InvalidArgument("not a category name: " + l);
    idx.push_back(*c);
  }
  return aggregate_categories(idx);
}

namespace {

std::string record_id(const json& r) {
  if (!r.is_object() || !r.contains("id")) return "";
  return r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
}

std::string record_text(const json& r) {
  if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) {
    throw FormatError("batch record needs a string \"text\" field");
  }
  return r["text"].get<std::string>();
}

}  // namespace

std::vector<json> rewrite_batch(const std::vector<json>& records, const RewritePrompt& prompt, ChatClient& client) {
  std::vector<json> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const std::string id = record_id(records[i]);
    try {
      const std::string text = record_text(records[i]);
      out[i] = json{{"id", id}, {"text", rewrite(text, prompt, client)}, {"status", "ok"}};
    } catch (const Error& e) {
      out[i] = json{{"id", id}, {"text", ""}, {"status", e.kind()}, {"error", e.what()}};
    }
  });
  return out;
}

std::vector<json> categorize_batch(const std::vector<json>& records, ChatClient& client) {
  std::vector<json> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const std::string id = record_id(records[i]);
    std::string text;
    try {
      text = record_text(records[i]);
      const CategoryResult r = categorize(text, client);
      out[i] = json{{"id", id},
                    {"text", text},
                    {"status", "ok"},
                    {"category", r.name()},
                    {"flagged", r.flagged},
                    {"attempts", r.attempts}};
    } catch (const Error& e) {
      out[i] = json{{"id", id}, {"text", text}, {"status", e.kind()}, {"error", e.what()}};
    }
  });
  return out;
}

}  // namespace dsfp
