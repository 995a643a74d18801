#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/models/transformer.h"
#include "dsfp/tokenize/packing.h"
#include "dsfp/train/hyper.h"

namespace dsfp {

// Training rows grouped by dataset, one block per label.
using RowSet = std::vector<RowBlock>;

struct TrainLog {
  std::vector<double> loss;  // mean per-position loss of each step's batch
  std::vector<double> lr;
  std::vector<double> grad_norm;  // before clipping
  std::size_t rows_seen = 0;
  std::size_t tokens_seen = 0;
  json to_json() const;
};

// Visiting order for one epoch: each block's rows are shuffled with a seed
// derived from (seed, epoch, block), then the blocks are interleaved
// round-robin (block 0, 1, ..., k-1, 0, 1, ...). Blocks that run out drop
// out of the rotation. Entries are (block index, row index).
std::vector<std::pair<std::size_t, std::size_t>> interleave_rows(const RowSet& rows, uint64_t seed,
                                                                 std::size_t epoch = 0);

// Optimizer steps the hyperparameters imply for `rows`.
std::size_t planned_steps(const RowSet& rows, const TrainHyper& hyper);

// Next-token training on rows of context_length + 1 tokens.
TransformerModel pretrain_lm(TransformerModel model, const RowSet& rows, const TrainHyper& hyper,
                             TrainLog* log = nullptr);

// Per-position classification: every position of a row is trained towards
// the row's label. A model that never went through pretrain_lm is flagged
// from_scratch in its metadata.
TransformerModel finetune_classifier(TransformerModel model, const RowSet& rows, const TrainHyper& hyper,
                                     TrainLog* log = nullptr);

// Replaces the LM head with an n_classes head and trains only that head; the
// body stays bit-identical.
TransformerModel linear_probe(const TransformerModel& lm, const RowSet& rows, std::size_t n_classes,
                              const TrainHyper& hyper, TrainLog* log = nullptr);

// Mean per-position losses over every row (no parameter updates).
double lm_loss(const TransformerModel& model, const RowSet& rows);
double classification_loss(const TransformerModel& model, const RowSet& rows);

// Keeps the same number of leading rows from every block: about tokens /
// blocks each, never more than the smallest block holds, at least one.
RowSet take_token_budget(const RowSet& rows, std::size_t tokens);

// Truncates every block to the row count of the smallest one.
RowSet balance_rows(const RowSet& rows);

}  // namespace dsfp
