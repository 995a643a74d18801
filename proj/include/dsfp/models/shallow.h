#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/models/bow.h"
#include "dsfp/models/classifier.h"

namespace dsfp {

struct ShallowHyper {
  std::size_t dim = 64;
  std::size_t buckets = 2'000'000;
  int n_gram_order = 2;  // 1: words only, 2: words plus hashed bigrams
  std::size_t epochs = 5;
  double lr = 0.5;  // decays linearly to zero over training
  std::size_t min_count = 1;
  uint64_t seed = 0;
  json to_json() const;
  static ShallowHyper from_json(const json& j);
};

// FastText-style classifier: the mean of word and bigram-bucket embeddings
// followed by a bias-free linear layer. Embedding rows are materialized on
// first update; an untouched row still reads as its deterministic initial
// value, so the model behaves exactly like a dense table.
class ShallowModel : public Classifier {
 public:
  ShallowModel(VocabIndex vocab, std::size_t n_classes, ShallowHyper hyper);

  std::size_t n_classes() const override { return n_classes_; }
  std::string kind() const override { return "shallow"; }
  LabelId predict(std::string_view text) const override;
  std::vector<double> scores(std::string_view text) const;

  // Embedding-row ids for a text: in-vocab word ids, then one bucket per
  // adjacent word pair when n_gram_order >= 2.
  std::vector<uint64_t> feature_rows(std::string_view text) const;

  const ShallowHyper& hyper() const { return hyper_; }
  const VocabIndex& vocab() const { return vocab_; }
  std::size_t materialized_rows() const { return slots_.size(); }

  // Effective word -> class map E * W (vocab x n_classes, row-major). With
  // n_gram_order 1 the decision is argmax of counts . this map, the same
  // family as the bag-of-words model without bias.
  std::vector<double> as_linear_weights() const;

  // One SGD step on a single example; returns its loss.
  double update(const std::vector<uint64_t>& rows, LabelId label, double lr);

  json to_json() const;
  static ShallowModel from_json(const json& j);

 private:
  void row_value(uint64_t row, float* out) const;
  float* mutable_row(uint64_t row);
  void hidden(const std::vector<uint64_t>& rows, std::vector<float>& h) const;

  VocabIndex vocab_;
  std::size_t n_classes_;
  ShallowHyper hyper_;
  std::unordered_map<uint64_t, std::size_t> slots_;
  std::vector<float> table_;  // materialized rows, dim floats each
  std::vector<float> out_;    // dim x n_classes, row-major
};

ShallowModel shallow_train(const Corpus& train, std::size_t n_classes, const ShallowHyper& hyper = {});

void save_shallow(const ShallowModel& m, const std::filesystem::path& path);
ShallowModel load_shallow(const std::filesystem::path& path);

}  // namespace dsfp
