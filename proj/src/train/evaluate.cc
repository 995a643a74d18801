#include "dsfp/train/evaluate.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"
#include "dsfp/tokenize/packing.h"

namespace dsfp {

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::kWholeSeq: return "whole-seq";
    case EvalMode::kMajority: return "majority";
    case EvalMode::kByLength: return "by-length";
    case EvalMode::kAggregated: return "aggregated";
  }
  return "?";
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "whole-seq" || s == "whole") return EvalMode::kWholeSeq;
  if (s == "majority") return EvalMode::kMajority;
  if (s == "by-length") return EvalMode::kByLength;
  if (s == "aggregated") return EvalMode::kAggregated;
  throw InvalidArgument("unknown eval mode: " + std::string(s));
}

json EvalReport::to_json() const {
  json j{{"mode", to_string(mode)},
         {"n_classes", n_classes},
         {"n_test", n_test},
         {"accuracy", accuracy},
         {"confusion", confusion},
         {"per_class_accuracy", per_class_accuracy},
         {"imbalanced", imbalanced},
         {"metadata", metadata}};
  if (!label_names.empty()) j["label_names"] = label_names;
  if (!buckets.empty()) {
    json b = json::array();
    for (const auto& k : buckets) {
      b.push_back({{"lo", k.lo},
                   {"hi", k.hi},
                   {"count", k.count},
                   {"correct", k.correct},
                   {"accuracy", k.accuracy()},
                   {"insufficient", k.insufficient}});
    }
    j["buckets"] = b;
  }
  return j;
}

std::string EvalReport::format_table() const {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "mode %s  n_test %zu  accuracy %.2f%%\n", std::string(to_string(mode)).c_str(),
                n_test, 100.0 * accuracy);
  os << buf;
  auto name = [&](std::size_t k) { return k < label_names.size() ? label_names[k] : std::to_string(k); };
  os << "true\\pred";
  for (std::size_t k = 0; k < n_classes; ++k) os << '\t' << name(k);
  os << "\tacc\n";
  for (std::size_t t = 0; t < n_classes; ++t) {
    os << name(t);
    for (std::size_t p = 0; p < n_classes; ++p) os << '\t' << confusion[t][p];
    std::snprintf(buf, sizeof buf, "\t%.2f%%\n", 100.0 * per_class_accuracy[t]);
    os << buf;
  }
  for (const auto& b : buckets) {
    std::snprintf(buf, sizeof buf, "[%zu, %zu)\t%zu\t%.2f%%%s\n", b.lo, b.hi, b.count, 100.0 * b.accuracy(),
                  b.insufficient ? "\tinsufficient" : "");
    os << buf;
  }
  return os.str();
}

EvalReport report_from_predictions(const std::vector<LabelId>& truth, const std::vector<LabelId>& predicted,
                                   std::size_t n_classes, EvalMode mode) {
  if (truth.empty()) throw InvalidArgument("empty test set");
  if (truth.size() != predicted.size()) throw InvalidArgument("truth and prediction counts differ");
  EvalReport r;
  r.mode = mode;
  r.n_classes = n_classes;
  r.n_test = truth.size();
  r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_classes || predicted[i] >= n_classes) throw InvalidArgument("label outside the class range");
    ++r.confusion[truth[i]][predicted[i]];
  }
  std::size_t trace = 0;
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t k = 0; k < n_classes; ++k) {
    trace += r.confusion[k][k];
    counts[k] = std::accumulate(r.confusion[k].begin(), r.confusion[k].end(), std::size_t{0});
    r.per_class_accuracy.push_back(counts[k] ? static_cast<double>(r.confusion[k][k]) / static_cast<double>(counts[k])
                                             : 0.0);
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(truth.size());
  std::size_t present_min = SIZE_MAX, present_max = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    present_min = std::min(present_min, c);
    present_max = std::max(present_max, c);
  }
  r.imbalanced = present_min != present_max;
  if (r.imbalanced) r.metadata["warning"] = "test classes are not balanced";
  return r;
}

EvalReport evaluate(const Classifier& classifier, const Corpus& test) {
  if (test.empty()) throw InvalidArgument("empty test set");
  std::vector<LabelId> truth(test.size()), pred(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    truth[i] = test[i].label;
    pred[i] = classifier.predict(test[i].text);
  });
  auto r = report_from_predictions(truth, pred, classifier.n_classes(), EvalMode::kWholeSeq);
  r.metadata["classifier"] = classifier.kind();
  return r;
}

TransformerClassifier::TransformerClassifier(const TransformerModel& model, const Tokenizer& tokenizer)
    : model_(model), tok_(tokenizer) {
  if (model.head_mode() != HeadMode::kClass) throw InvalidArgument("classification needs a class-head model");
}

LabelId TransformerClassifier::predict(std::string_view text) const {
  const auto ids = prepare_test_sequence(tok_, text, static_cast<std::size_t>(model_.config().context_length));
  const auto logits = model_.forward(ids);
  const auto last = logits.row(logits.rows() - 1);
  return static_cast<LabelId>(argmax(last.data(), last.data() + last.size()));
}

LabelId majority_vote(const LogitMatrix& logits) {
  const auto k = static_cast<std::size_t>(logits.cols());
  std::vector<std::size_t> votes(k, 0);
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const auto row = logits.row(t);
    ++votes[argmax(row.data(), row.data() + row.size())];
  }
  const std::size_t top = *std::max_element(votes.begin(), votes.end());
  const auto last = logits.row(logits.rows() - 1);
  std::size_t best = k;
  for (std::size_t c = 0; c < k; ++c) {
    if (votes[c] != top) continue;
    if (best == k || last(static_cast<Eigen::Index>(c)) > last(static_cast<Eigen::Index>(best))) best = c;
  }
  return static_cast<LabelId>(best);
}

EvalReport evaluate_majority(const TransformerModel& model, const Tokenizer& tok, const Corpus& test) {
  if (model.head_mode() != HeadMode::kClass) throw InvalidArgument("classification needs a class-head model");
  if (test.empty()) throw InvalidArgument("empty test set");
  std::vector<LabelId> truth(test.size()), pred(test.size());
  const auto ctx = static_cast<std::size_t>(model.config().context_length);
  parallel_for(test.size(), [&](std::size_t i) {
    truth[i] = test[i].label;
    pred[i] = majority_vote(model.forward(prepare_test_sequence(tok, test[i].text, ctx)));
  });
  auto r = report_from_predictions(truth, pred, model.output_width(), EvalMode::kMajority);
  r.metadata["classifier"] = "transformer";
  return r;
}

EvalReport evaluate_by_length(const Classifier& classifier, const Tokenizer& tok, const Corpus& test,
                              const ByLengthOptions& opt) {
  if (opt.bucket_width == 0 || opt.max_len < opt.bucket_width) throw InvalidArgument("bad by-length buckets");
  if (test.empty()) throw InvalidArgument("empty test set");
  const std::size_t n_buckets = (opt.max_len + opt.bucket_width - 1) / opt.bucket_width;
  std::vector<std::size_t> lengths(test.size());
  parallel_for(test.size(), [&](std::size_t i) { lengths[i] = tok.encode(test[i].text).size(); });

  std::vector<std::vector<std::size_t>> members(n_buckets);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t len = lengths[i];
    if (len > opt.max_len) continue;
    const std::size_t b = std::min(len / opt.bucket_width, n_buckets - 1);
    if (members[b].size() < opt.per_bucket) members[b].push_back(i);
  }
  std::vector<std::size_t> chosen;
  for (const auto& m : members) chosen.insert(chosen.end(), m.begin(), m.end());
  if (chosen.empty()) throw InvalidArgument("no test sequence falls inside the length buckets");
  std::vector<LabelId> pred(test.size(), 0);
  parallel_for(chosen.size(), [&](std::size_t j) { pred[chosen[j]] = classifier.predict(test[chosen[j]].text); });

  std::vector<LabelId> truth_all, pred_all;
  EvalReport r;
  std::vector<LengthBucket> buckets;
  for (std::size_t b = 0; b < n_buckets; ++b) {
    LengthBucket lb;
    lb.lo = b * opt.bucket_width;
    lb.hi = std::min(opt.max_len, (b + 1) * opt.bucket_width);
    lb.count = members[b].size();
    lb.insufficient = lb.count < opt.per_bucket;
    for (auto i : members[b]) {
      lb.correct += pred[i] == test[i].label;
      truth_all.push_back(test[i].label);
      pred_all.push_back(pred[i]);
    }
    buckets.push_back(lb);
  }
  r = report_from_predictions(truth_all, pred_all, classifier.n_classes(), EvalMode::kByLength);
  r.buckets = std::move(buckets);
  r.metadata["classifier"] = classifier.kind();
  r.metadata["bucket_width"] = opt.bucket_width;
  r.metadata["max_len"] = opt.max_len;
  r.metadata["per_bucket"] = opt.per_bucket;
  return r;
}

EvalReport evaluate_aggregated(const TransformerModel& model, const Tokenizer& tok, const Corpus& test) {
  if (model.head_mode() != HeadMode::kClass) throw InvalidArgument("classification needs a class-head model");
  if (test.empty()) throw InvalidArgument("empty test set");
  const auto ctx = static_cast<std::size_t>(model.config().context_length);
  std::vector<std::vector<TokenId>> rows;
  std::vector<LabelId> truth;
  std::size_t short_rows = 0;
  for (const auto& [label, count] : test.manifest()) {
    (void)count;
    std::vector<std::vector<TokenId>> seqs;
    for (const auto& s : test.sequences()) {
      if (s.label == label) seqs.push_back(tok.encode(s.text));
    }
    auto packed = pack_stream(seqs, ctx, label, tok.eot_id(), tok.vocab_size());
    if (packed.rows.row_count() == 0) {
      // Not enough tokens for one row: classify what there is, without the
      // trailing separator.
      std::vector<TokenId> row;
      for (const auto& s : seqs) {
        if (!row.empty()) row.push_back(tok.eot_id());
        row.insert(row.end(), s.begin(), s.end());
      }
      if (row.empty()) continue;
      rows.push_back(std::move(row));
      truth.push_back(label);
      ++short_rows;
      continue;
    }
    for (std::size_t r = 0; r < packed.rows.row_count(); ++r) {
      auto row = packed.rows.row(r).first(ctx);
      rows.emplace_back(row.begin(), row.end());
      truth.push_back(label);
    }
  }
  std::vector<LabelId> pred(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    const auto logits = model.forward(rows[i]);
    const auto last = logits.row(logits.rows() - 1);
    pred[i] = static_cast<LabelId>(argmax(last.data(), last.data() + last.size()));
  });
  auto r = report_from_predictions(truth, pred, model.output_width(), EvalMode::kAggregated);
  r.metadata["classifier"] = "transformer";
  r.metadata["row_tokens"] = ctx;
  r.metadata["short_rows"] = short_rows;
  return r;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs two equal-length series");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dsfp
