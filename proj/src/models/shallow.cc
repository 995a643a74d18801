#include "dsfp/models/shallow.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"

namespace dsfp {

json ShallowHyper::to_json() const {
  return json{{"dim", dim},       {"buckets", buckets},     {"n_gram_order", n_gram_order}, {"epochs", epochs},
              {"lr", lr},         {"min_count", min_count}, {"seed", seed}};
}

ShallowHyper ShallowHyper::from_json(const json& j) {
  ShallowHyper h;
  h.dim = j.value("dim", h.dim);
  h.buckets = j.value("buckets", h.buckets);
  h.n_gram_order = j.value("n_gram_order", h.n_gram_order);
  h.epochs = j.value("epochs", h.epochs);
  h.lr = j.value("lr", h.lr);
  h.min_count = j.value("min_count", h.min_count);
  h.seed = j.value("seed", h.seed);
  if (h.dim == 0) throw InvalidArgument("shallow dim must be positive");
  if (h.n_gram_order < 1 || h.n_gram_order > 2) throw InvalidArgument("shallow n_gram_order must be 1 or 2");
  if (h.n_gram_order == 2 && h.buckets == 0) throw InvalidArgument("bigram features need buckets > 0");
  return h;
}

ShallowModel::ShallowModel(VocabIndex vocab, std::size_t n_classes, ShallowHyper hyper)
    : vocab_(std::move(vocab)), n_classes_(n_classes), hyper_(hyper), out_(hyper.dim * n_classes, 0.0f) {
  if (n_classes < 2) throw InvalidArgument("a classifier needs at least two classes");
}

std::vector<uint64_t> ShallowModel::feature_rows(std::string_view text) const {
  const auto words = split_words(text);
  std::vector<uint64_t> rows;
  rows.reserve(words.size() * 2);
  std::string key;
  for (auto w : words) {
    key.assign(w);
    auto it = vocab_.find(key);
    if (it != vocab_.end()) rows.push_back(it->second);
  }
  if (hyper_.n_gram_order >= 2) {
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
      Fnv1a64 h;
      h.update(words[i]);
      h.update(" ");
      h.update(words[i + 1]);
      rows.push_back(vocab_.size() + h.digest() % hyper_.buckets);
    }
  }
  return rows;
}

void ShallowModel::row_value(uint64_t row, float* out) const {
  auto it = slots_.find(row);
  if (it != slots_.end()) {
    std::copy_n(table_.data() + it->second * hyper_.dim, hyper_.dim, out);
    return;
  }
  std::mt19937_64 rng(derive_seed(hyper_.seed, row));
  const double bound = 1.0 / static_cast<double>(hyper_.dim);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (std::size_t d = 0; d < hyper_.dim; ++d) out[d] = static_cast<float>(u(rng));
}

float* ShallowModel::mutable_row(uint64_t row) {
  auto it = slots_.find(row);
  if (it == slots_.end()) {
    const std::size_t slot = slots_.size();
    table_.resize(table_.size() + hyper_.dim);
    row_value(row, table_.data() + slot * hyper_.dim);
    it = slots_.emplace(row, slot).first;
  }
  return table_.data() + it->second * hyper_.dim;
}

void ShallowModel::hidden(const std::vector<uint64_t>& rows, std::vector<float>& h) const {
  h.assign(hyper_.dim, 0.0f);
  if (rows.empty()) return;
  std::vector<float> r(hyper_.dim);
  for (auto row : rows) {
    row_value(row, r.data());
    for (std::size_t d = 0; d < hyper_.dim; ++d) h[d] += r[d];
  }
  const float inv = 1.0f / static_cast<float>(rows.size());
  for (auto& x : h) x *= inv;
}

std::vector<double> ShallowModel::scores(std::string_view text) const {
  std::vector<float> h;
  hidden(feature_rows(text), h);
  std::vector<double> s(n_classes_, 0.0);
  for (std::size_t d = 0; d < hyper_.dim; ++d) {
    for (std::size_t k = 0; k < n_classes_; ++k) s[k] += static_cast<double>(h[d]) * out_[d * n_classes_ + k];
  }
  return s;
}

LabelId ShallowModel::predict(std::string_view text) const {
  auto s = scores(text);
  return static_cast<LabelId>(argmax(s.begin(), s.end()));
}

std::vector<double> ShallowModel::as_linear_weights() const {
  std::vector<double> m(vocab_.size() * n_classes_, 0.0);
  std::vector<float> r(hyper_.dim);
  for (std::size_t w = 0; w < vocab_.size(); ++w) {
    row_value(w, r.data());
    for (std::size_t d = 0; d < hyper_.dim; ++d) {
      for (std::size_t k = 0; k < n_classes_; ++k) {
        m[w * n_classes_ + k] += static_cast<double>(r[d]) * out_[d * n_classes_ + k];
      }
    }
  }
  return m;
}

double ShallowModel::update(const std::vector<uint64_t>& rows, LabelId label, double lr) {
  if (rows.empty()) return std::log(static_cast<double>(n_classes_));
  std::vector<float> h;
  hidden(rows, h);
  std::vector<double> p(n_classes_, 0.0);
  for (std::size_t d = 0; d < hyper_.dim; ++d) {
    for (std::size_t k = 0; k < n_classes_; ++k) p[k] += static_cast<double>(h[d]) * out_[d * n_classes_ + k];
  }
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0;
  for (auto& e : p) z += (e = std::exp(e - mx));
  for (auto& e : p) e /= z;
  const double loss = -std::log(std::max(p[label], 1e-300));

  std::vector<float> gh(hyper_.dim, 0.0f);
  for (std::size_t d = 0; d < hyper_.dim; ++d) {
    for (std::size_t k = 0; k < n_classes_; ++k) {
      const double gk = p[k] - (k == label ? 1.0 : 0.0);
      gh[d] += static_cast<float>(gk * out_[d * n_classes_ + k]);
      out_[d * n_classes_ + k] -= static_cast<float>(lr * gk * h[d]);
    }
  }
  const float step = static_cast<float>(lr / static_cast<double>(rows.size()));
  for (auto row : rows) {
    float* e = mutable_row(row);
    for (std::size_t d = 0; d < hyper_.dim; ++d) e[d] -= step * gh[d];
  }
  return loss;
}

json ShallowModel::to_json() const {
  std::vector<std::string> words(vocab_.size());
  for (const auto& [w, i] : vocab_) words[i] = w;
  std::vector<std::pair<uint64_t, std::size_t>> sorted(slots_.begin(), slots_.end());
  std::sort(sorted.begin(), sorted.end());
  json rows = json::array();
  for (const auto& [row, slot] : sorted) {
    rows.push_back({row, std::vector<float>(table_.begin() + static_cast<std::ptrdiff_t>(slot * hyper_.dim),
                                            table_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * hyper_.dim))});
  }
  return json{{"format", "dsfp-shallow"}, {"version", 1}, {"n_classes", n_classes_}, {"hyper", hyper_.to_json()},
              {"words", words},           {"out", out_},  {"rows", rows}};
}

ShallowModel ShallowModel::from_json(const json& j) {
  if (j.value("format", "") != "dsfp-shallow") throw FormatError("not a shallow model");
  if (j.value("version", 0) != 1) throw VersionError("unsupported shallow model version");
  VocabIndex vocab;
  const auto words = j.at("words").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < words.size(); ++i) vocab.emplace(words[i], static_cast<uint32_t>(i));
  ShallowModel m(std::move(vocab), j.at("n_classes").get<std::size_t>(), ShallowHyper::from_json(j.at("hyper")));
  m.out_ = j.at("out").get<std::vector<float>>();
  if (m.out_.size() != m.hyper_.dim * m.n_classes_) throw FormatError("shallow output layer shape mismatch");
  for (const auto& r : j.at("rows")) {
    const auto vals = r.at(1).get<std::vector<float>>();
    if (vals.size() != m.hyper_.dim) throw FormatError("shallow embedding row has the wrong width");
    std::copy(vals.begin(), vals.end(), m.mutable_row(r.at(0).get<uint64_t>()));
  }
  return m;
}

ShallowModel shallow_train(const Corpus& train, std::size_t n_classes, const ShallowHyper& hyper) {
  check_training_labels(train, n_classes);
  ShallowModel model(build_vocab_index(train, hyper.min_count), n_classes, hyper);
  const std::size_t n = train.size();
  std::vector<std::vector<uint64_t>> feats(n);
  for (std::size_t i = 0; i < n; ++i) feats[i] = model.feature_rows(train[i].text);

  std::mt19937_64 rng(derive_seed(hyper.seed, 0x5a11));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double total = static_cast<double>(hyper.epochs * n);
  std::size_t seen = 0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      const double lr = hyper.lr * (1.0 - static_cast<double>(seen) / total);
      model.update(feats[i], train[i].label, lr);
      ++seen;
    }
  }
  return model;
}

void save_shallow(const ShallowModel& m, const std::filesystem::path& path) {
  write_file_atomic(path, m.to_json().dump());
}

ShallowModel load_shallow(const std::filesystem::path& path) {
  return ShallowModel::from_json(json::parse(read_file(path)));
}

}  // namespace dsfp
