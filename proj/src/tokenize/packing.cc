#include "dsfp/tokenize/packing.h"

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

StreamPacker::StreamPacker(std::size_t context_length, LabelId label, TokenId eot_id, uint32_t vocab_size)
    : eot_id_(eot_id), vocab_size_(vocab_size) {
  if (context_length == 0) throw InvalidArgument("context_length must be positive");
  if (eot_id >= vocab_size) throw InvalidArgument("eot id outside the vocabulary");
  rows_.context_length = context_length;
  rows_.label = label;
  pending_.reserve(context_length + 1);
}

void StreamPacker::push(std::span<const TokenId> sequence) {
  const std::size_t width = rows_.row_width();
  auto emit = [&](TokenId t) {
    pending_.push_back(t);
    if (pending_.size() == width) {
      rows_.tokens.insert(rows_.tokens.end(), pending_.begin(), pending_.end());
      pending_.clear();
    }
  };
  for (TokenId t : sequence) {
    if (t >= vocab_size_) {
      throw InvalidArgument("token id " + std::to_string(t) + " >= vocab size " + std::to_string(vocab_size_));
    }
    emit(t);
  }
  emit(eot_id_);
  stats_.total_tokens += sequence.size() + 1;
  ++stats_.sequences;
}

PackStats StreamPacker::finish() {
  stats_.dropped_tokens = pending_.size();
  pending_.clear();
  return stats_;
}

PackResult pack_stream(const std::vector<std::vector<TokenId>>& sequences, std::size_t context_length,
                       LabelId label, TokenId eot_id, uint32_t vocab_size) {
  StreamPacker packer(context_length, label, eot_id, vocab_size);
  for (const auto& s : sequences) packer.push(s);
  PackResult out;
  out.stats = packer.finish();
  out.rows = std::move(packer.rows());
  return out;
}

PackResult pack_corpus(const Corpus& corpus, const Tokenizer& tokenizer, std::size_t context_length,
                       LabelId label) {
  std::vector<const TextSequence*> selected;
  for (const auto& s : corpus.sequences()) {
    if (s.label == label) selected.push_back(&s);
  }
  std::vector<std::vector<TokenId>> encoded(selected.size());
  parallel_for(selected.size(), [&](std::size_t i) { encoded[i] = tokenizer.encode(selected[i]->text); });
  return pack_stream(encoded, context_length, label, tokenizer.eot_id(), tokenizer.vocab_size());
}

}  // namespace dsfp
