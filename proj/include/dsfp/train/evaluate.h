#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/models/classifier.h"
#include "dsfp/models/transformer.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

enum class EvalMode { kWholeSeq, kMajority, kByLength, kAggregated };

std::string_view to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

struct LengthBucket {
  std::size_t lo = 0, hi = 0;  // token lengths [lo, hi); the last bucket also takes hi
  std::size_t count = 0;
  std::size_t correct = 0;
  bool insufficient = false;  // fewer than the requested sequences
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

struct EvalReport {
  EvalMode mode = EvalMode::kWholeSeq;
  std::size_t n_classes = 0;
  std::size_t n_test = 0;
  double accuracy = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> per_class_accuracy;
  std::vector<std::string> label_names;
  std::vector<LengthBucket> buckets;  // by-length mode only
  bool imbalanced = false;            // test classes were not equally represented
  json metadata = json::object();

  json to_json() const;
  // Plain-text confusion matrix and accuracy lines.
  std::string format_table() const;
};

// Builds a report from parallel truth/prediction vectors.
EvalReport report_from_predictions(const std::vector<LabelId>& truth, const std::vector<LabelId>& predicted,
                                   std::size_t n_classes, EvalMode mode);

// Whole-sequence evaluation of any classifier.
EvalReport evaluate(const Classifier& classifier, const Corpus& test);

// Transformer classifier over a tokenizer: prediction is the argmax of the
// final-position logits of the truncated test sequence.
class TransformerClassifier : public Classifier {
 public:
  TransformerClassifier(const TransformerModel& model, const Tokenizer& tokenizer);
  std::size_t n_classes() const override { return model_.output_width(); }
  LabelId predict(std::string_view text) const override;
  std::string kind() const override { return "transformer"; }
  const TransformerModel& model() const { return model_; }
  const Tokenizer& tokenizer() const { return tok_; }

 private:
  const TransformerModel& model_;
  const Tokenizer& tok_;
};

// Per-position argmax; the most frequent class wins, ties go to the tied
// class with the larger final-position logit.
LabelId majority_vote(const LogitMatrix& logits);

EvalReport evaluate_majority(const TransformerModel& model, const Tokenizer& tok, const Corpus& test);

struct ByLengthOptions {
  std::size_t bucket_width = 200;
  std::size_t max_len = 2000;
  std::size_t per_bucket = 1024;
};

// Buckets test sequences by token length (after truncation); each bucket
// keeps its first per_bucket members in test order.
EvalReport evaluate_by_length(const Classifier& classifier, const Tokenizer& tok, const Corpus& test,
                              const ByLengthOptions& opt = {});

// Same-label test sequences packed exactly like training rows; each row's
// first context_length tokens are classified whole. A label whose tokens do
// not fill one row contributes its single shorter row instead.
EvalReport evaluate_aggregated(const TransformerModel& model, const Tokenizer& tok, const Corpus& test);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dsfp
