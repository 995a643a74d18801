#include "dsfp/models/classifier.h"

#include <set>

#include "dsfp/common/error.h"

namespace dsfp {

std::vector<std::string_view> split_words(std::string_view text) {
  auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; };
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

void check_training_labels(const Corpus& corpus, std::size_t n_classes) {
  std::set<LabelId> seen;
  for (const auto& s : corpus.sequences()) {
    if (s.label >= n_classes) {
      throw InvalidArgument("label " + std::to_string(s.label) + " outside " + std::to_string(n_classes) +
                            " classes");
    }
    seen.insert(s.label);
  }
  if (seen.size() < 2) throw InvalidArgument("training needs examples from at least two classes");
}

}  // namespace dsfp
