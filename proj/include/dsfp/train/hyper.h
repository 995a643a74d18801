#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/models/transformer_config.h"

namespace dsfp {

struct TrainHyper {
  std::size_t batch_size = 16;
  double grad_clip_norm = 1.0;  // <= 0 disables clipping
  double lr = 3e-4;
  std::size_t warmup_steps = 2000;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.2;  // decoupled; matrices only, norm gains are not decayed
  std::size_t epochs = 1;
  bool mixed_precision = false;  // bf16 matmul operands, fp32 master weights
  uint64_t seed = 0;
  // Caps the number of optimizer steps; -1 runs every epoch to completion.
  int64_t max_steps = -1;
  // Gradients of a batch are summed in this many fixed groups (rows assigned
  // contiguously), then the groups are added in order. The result does not
  // depend on how many threads run the groups.
  std::size_t grad_groups = 4;

  void validate() const;
  json to_json() const;
  static TrainHyper from_json(const json& j);
};

// Linear warmup to hyper.lr over warmup_steps, then cosine decay to zero at
// total_steps. `step` is 0-based.
double learning_rate(const TrainHyper& h, std::size_t step, std::size_t total_steps);

// Decoupled-weight-decay Adam over a contiguous parameter range
// [begin, end) of the flat vector.
class AdamW {
 public:
  AdamW(const TrainHyper& h, const ParamLayout& layout, std::size_t begin, std::size_t end);

  void step(std::vector<float>& params, std::span<const float> grads, double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  TrainHyper h_;
  std::size_t begin_, end_;
  std::vector<float> m_, v_;
  std::vector<uint8_t> decay_;  // per parameter in range
  std::size_t t_ = 0;
};

// Scales `grads` in place so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(std::span<float> grads, double max_norm);

}  // namespace dsfp
