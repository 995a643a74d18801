#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/models/classifier.h"
#include "dsfp/train/evaluate.h"

namespace dsfp {

struct MixtureEstimate {
  std::vector<std::size_t> counts;
  std::size_t n = 0;
  std::vector<double> proportion;  // counts[k] / n
  std::vector<double> std_error;   // sqrt(p (1 - p) / n)
  std::vector<std::string> label_names;
  json metadata = json::object();

  json to_json() const;
  // One bar per class, scaled to 50 characters at 100%. With `truth`, a
  // second bar per class shows the true proportion.
  std::string format_table(const std::optional<std::vector<double>>& truth = std::nullopt) const;
};

MixtureEstimate mixture_from_predictions(const std::vector<LabelId>& predicted, std::size_t n_classes);

// Classifies every sequence whole. Throws InvalidArgument on an empty input or
// a classifier with fewer than two classes.
MixtureEstimate estimate_mixture(const Classifier& classifier, const Corpus& sequences,
                                 const std::vector<std::string>& label_names = {});

// Whole-sequence evaluation of sequences carrying claimed labels (for
// instance the LM that produced them). The registry must have exactly one
// name per classifier output and cover every label in `files`.
EvalReport classify_external(const Classifier& classifier, const Corpus& files, const LabelRegistry& registry);

}  // namespace dsfp
