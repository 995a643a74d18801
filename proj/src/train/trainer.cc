#include "dsfp/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/parallel.h"

namespace dsfp {
namespace {

enum class Objective { kNextToken, kClass };

void check_rows(const TransformerModel& model, const RowSet& rows, Objective obj) {
  const auto& cfg = model.config();
  for (const auto& block : rows) {
    if (block.context_length != static_cast<std::size_t>(cfg.context_length)) {
      throw InvalidArgument("rows have context length " + std::to_string(block.context_length) +
                            " but the model expects " + std::to_string(cfg.context_length));
    }
    for (TokenId t : block.tokens) {
      if (t >= static_cast<TokenId>(cfg.vocab_size)) {
        throw InvalidArgument("row token id " + std::to_string(t) + " exceeds the model vocabulary");
      }
    }
    if (obj == Objective::kClass && block.label >= static_cast<LabelId>(cfg.n_classes)) {
      throw InvalidArgument("row label " + std::to_string(block.label) + " outside " +
                            std::to_string(cfg.n_classes) + " classes");
    }
  }
}

// Loss of one row; with grads set, accumulates d(loss * weight) into it.
template <typename T>
double row_loss(const engine::Engine<T>& eng, const T* params, std::span<const TokenId> row, LabelId label,
                Objective obj, bool bf16, T weight, T* grads, bool head_only) {
  const std::size_t ctx = row.size() - 1;
  engine::ForwardCache<T> cache;
  eng.forward(params, row.first(ctx), cache, bf16);
  engine::Mat<T> dlogits;
  T loss;
  if (obj == Objective::kNextToken) {
    loss = engine::softmax_cross_entropy<T>(
        cache.logits, [&](Eigen::Index t) { return row[static_cast<std::size_t>(t) + 1]; }, dlogits, weight);
  } else {
    loss = engine::softmax_cross_entropy<T>(cache.logits, [&](Eigen::Index) { return label; }, dlogits, weight);
  }
  if (grads != nullptr) eng.backward(params, cache, dlogits, grads, head_only);
  return static_cast<double>(loss);
}

TransformerModel train_loop(TransformerModel model, const RowSet& rows, const TrainHyper& hyper, Objective obj,
                            bool head_only, TrainLog* log) {
  hyper.validate();
  check_rows(model, rows, obj);
  const auto& layout = model.layout();
  const std::size_t begin = head_only ? layout.body_size() : 0;
  const std::size_t total = layout.total();
  AdamW opt(hyper, layout, begin, total);
  const std::size_t steps = planned_steps(rows, hyper);

  TrainLog local;
  TrainLog& lg = log ? *log : local;
  std::vector<std::vector<float>> group_grads(hyper.grad_groups, std::vector<float>(total));
  std::vector<float> grads(total);
  std::vector<float> bf16_params;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < hyper.epochs && step < steps; ++epoch) {
    const auto order = interleave_rows(rows, hyper.seed, epoch);
    for (std::size_t start = 0; start < order.size() && step < steps; start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      const std::size_t b = end - start;
      const float* params = model.params().data();
      if (hyper.mixed_precision) {
        bf16_params = model.params();
        engine::round_bf16_inplace(bf16_params.data(), bf16_params.size());
        params = bf16_params.data();
      }
      std::vector<double> losses(b, 0.0);
      const std::size_t groups = std::min(hyper.grad_groups, b);
      parallel_for(groups, [&](std::size_t g) {
        auto& gg = group_grads[g];
        std::fill(gg.begin() + static_cast<std::ptrdiff_t>(begin), gg.end(), 0.0f);
        const std::size_t lo = g * b / groups, hi = (g + 1) * b / groups;
        for (std::size_t i = lo; i < hi; ++i) {
          const auto [blk, r] = order[start + i];
          losses[i] = row_loss<float>(model.engine(), params, rows[blk].row(r), rows[blk].label, obj,
                                      hyper.mixed_precision, 1.0f / static_cast<float>(b), gg.data(), head_only);
        }
      });
      std::fill(grads.begin(), grads.end(), 0.0f);
      for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t i = begin; i < total; ++i) grads[i] += group_grads[g][i];
      }
      const double norm = clip_grad_norm(std::span<float>(grads).subspan(begin), hyper.grad_clip_norm);
      const double lr = learning_rate(hyper, step, steps);
      opt.step(model.params(), grads, lr);

      lg.loss.push_back(std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(b));
      lg.lr.push_back(lr);
      lg.grad_norm.push_back(norm);
      lg.rows_seen += b;
      lg.tokens_seen += b * rows.front().context_length;
      ++step;
    }
  }
  return model;
}

double mean_loss(const TransformerModel& model, const RowSet& rows, Objective obj) {
  check_rows(model, rows, obj);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t r = 0; r < rows[b].row_count(); ++r) all.emplace_back(b, r);
  }
  if (all.empty()) throw InvalidArgument("no rows to evaluate");
  std::vector<double> losses(all.size());
  parallel_for(all.size(), [&](std::size_t i) {
    const auto [b, r] = all[i];
    losses[i] = row_loss<float>(model.engine(), model.params().data(), rows[b].row(r), rows[b].label, obj, false,
                                1.0f, nullptr, false);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

std::size_t total_rows(const RowSet& rows) {
  std::size_t n = 0;
  for (const auto& b : rows) n += b.row_count();
  return n;
}

}  // namespace

json TrainLog::to_json() const {
  return json{{"steps", loss.size()}, {"rows_seen", rows_seen}, {"tokens_seen", tokens_seen},
              {"loss", loss},         {"lr", lr},               {"grad_norm", grad_norm}};
}

std::vector<std::pair<std::size_t, std::size_t>> interleave_rows(const RowSet& rows, uint64_t seed,
                                                                 std::size_t epoch) {
  std::vector<std::vector<std::size_t>> perms(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    perms[b].resize(rows[b].row_count());
    std::iota(perms[b].begin(), perms[b].end(), 0);
    std::mt19937_64 rng(derive_seed(derive_seed(seed, epoch), b));
    std::shuffle(perms[b].begin(), perms[b].end(), rng);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(total_rows(rows));
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (i < perms[b].size()) {
        out.emplace_back(b, perms[b][i]);
        any = true;
      }
    }
    if (!any) break;
  }
  return out;
}

std::size_t planned_steps(const RowSet& rows, const TrainHyper& hyper) {
  const std::size_t per_epoch = (total_rows(rows) + hyper.batch_size - 1) / hyper.batch_size;
  std::size_t steps = per_epoch * hyper.epochs;
  if (hyper.max_steps >= 0) steps = std::min(steps, static_cast<std::size_t>(hyper.max_steps));
  return steps;
}

TransformerModel pretrain_lm(TransformerModel model, const RowSet& rows, const TrainHyper& hyper, TrainLog* log) {
  if (model.head_mode() != HeadMode::kLm) throw InvalidArgument("pretraining needs an lm-head model");
  TrainLog local;
  TrainLog& lg = log ? *log : local;
  auto out = train_loop(std::move(model), rows, hyper, Objective::kNextToken, false, &lg);
  json stage{{"tokens", lg.tokens_seen}, {"steps", lg.loss.size()}, {"hyper", hyper.to_json()}};
  if (!out.metadata.contains("pretrain")) out.metadata["pretrain"] = json::array();
  out.metadata["pretrain"].push_back(stage);
  return out;
}

TransformerModel finetune_classifier(TransformerModel model, const RowSet& rows, const TrainHyper& hyper,
                                     TrainLog* log) {
  if (model.head_mode() != HeadMode::kClass) throw InvalidArgument("finetuning needs a class-head model");
  TrainLog local;
  TrainLog& lg = log ? *log : local;
  const bool scratch = !model.metadata.contains("pretrain");
  auto out = train_loop(std::move(model), rows, hyper, Objective::kClass, false, &lg);
  out.metadata["from_scratch"] = scratch;
  out.metadata["finetune"] = {{"tokens", lg.tokens_seen}, {"steps", lg.loss.size()}, {"hyper", hyper.to_json()}};
  return out;
}

TransformerModel linear_probe(const TransformerModel& lm, const RowSet& rows, std::size_t n_classes,
                              const TrainHyper& hyper, TrainLog* log) {
  auto probe = replace_head(lm, static_cast<int>(n_classes));
  TrainLog local;
  TrainLog& lg = log ? *log : local;
  auto out = train_loop(std::move(probe), rows, hyper, Objective::kClass, true, &lg);
  out.metadata["linear_probe"] = {{"tokens", lg.tokens_seen}, {"steps", lg.loss.size()}, {"hyper", hyper.to_json()}};
  return out;
}

double lm_loss(const TransformerModel& model, const RowSet& rows) {
  if (model.head_mode() != HeadMode::kLm) throw InvalidArgument("lm_loss needs an lm-head model");
  return mean_loss(model, rows, Objective::kNextToken);
}

double classification_loss(const TransformerModel& model, const RowSet& rows) {
  if (model.head_mode() != HeadMode::kClass) throw InvalidArgument("classification_loss needs a class-head model");
  return mean_loss(model, rows, Objective::kClass);
}

RowSet take_token_budget(const RowSet& rows, std::size_t tokens) {
  if (rows.empty()) return {};
  std::size_t available = SIZE_MAX;
  for (const auto& b : rows) available = std::min(available, b.row_count());
  const std::size_t per_block = tokens / rows.size();
  const std::size_t ctx = rows.front().context_length;
  std::size_t n = std::max<std::size_t>(1, per_block / ctx + (per_block % ctx >= ctx / 2 ? 1 : 0));
  n = std::min(n, available);
  RowSet out;
  for (const auto& b : rows) {
    RowBlock r;
    r.context_length = b.context_length;
    r.label = b.label;
    r.tokens.assign(b.tokens.begin(), b.tokens.begin() + static_cast<std::ptrdiff_t>(n * b.row_width()));
    out.push_back(std::move(r));
  }
  return out;
}

RowSet balance_rows(const RowSet& rows) { return take_token_budget(rows, SIZE_MAX); }

}  // namespace dsfp
