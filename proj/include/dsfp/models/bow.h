#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/models/classifier.h"

namespace dsfp {

// word -> feature column
using VocabIndex = std::unordered_map<std::string, uint32_t>;

// Sorted (column, count) pairs; out-of-vocabulary words are dropped.
using SparseCounts = std::vector<std::pair<uint32_t, float>>;

SparseCounts bow_featurize(std::string_view text, const VocabIndex& vocab);

// Columns are assigned by descending frequency, ties lexicographic.
VocabIndex build_vocab_index(const Corpus& corpus, std::size_t min_count = 1, std::size_t max_words = 0);

struct BowHyper {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double l2 = 1e-5;
  std::size_t min_count = 1;
  std::size_t max_words = 0;  // 0 keeps every word
  uint64_t seed = 0;
  json to_json() const;
  static BowHyper from_json(const json& j);
};

// Multinomial logistic regression over raw word counts.
class BowModel : public Classifier {
 public:
  BowModel(VocabIndex vocab, std::size_t n_classes);

  std::size_t n_classes() const override { return n_classes_; }
  std::string kind() const override { return "bow"; }
  LabelId predict(std::string_view text) const override;
  std::vector<double> scores(const SparseCounts& x) const;

  const VocabIndex& vocab() const { return vocab_; }
  std::size_t n_features() const { return vocab_.size(); }
  // Row-major n_classes x n_features.
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  json to_json() const;
  static BowModel from_json(const json& j);

 private:
  VocabIndex vocab_;
  std::size_t n_classes_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

BowModel bow_train(const Corpus& train, std::size_t n_classes, const BowHyper& hyper = {});

void save_bow(const BowModel& m, const std::filesystem::path& path);
BowModel load_bow(const std::filesystem::path& path);

}  // namespace dsfp
