#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dsfp/corpus/corpus.h"

namespace dsfp {

// Uniform prediction interface shared by the transformer, bag-of-words and
// shallow classifiers.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t n_classes() const = 0;
  virtual LabelId predict(std::string_view text) const = 0;
  virtual std::string kind() const = 0;
};

// Splits on ASCII whitespace; the pieces are views into `text`.
std::vector<std::string_view> split_words(std::string_view text);

// Index of the largest score; the lowest index wins ties.
template <typename It>
std::size_t argmax(It first, It last) {
  std::size_t best = 0;
  std::size_t i = 0;
  for (It it = first; it != last; ++it, ++i) {
    if (*it > *(first + static_cast<std::ptrdiff_t>(best))) best = i;
  }
  return best;
}

// Throws unless the corpus holds at least two distinct labels, all < n_classes.
void check_training_labels(const Corpus& corpus, std::size_t n_classes);

}  // namespace dsfp
