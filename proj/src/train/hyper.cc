#include "dsfp/train/hyper.h"

#include <cmath>
#include <numbers>

#include "dsfp/common/error.h"

namespace dsfp {

void TrainHyper::validate() const {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(lr >= 0)) throw InvalidArgument("lr must be non-negative");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw InvalidArgument("eps must be positive");
  if (weight_decay < 0) throw InvalidArgument("weight_decay must be non-negative");
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (grad_groups == 0) throw InvalidArgument("grad_groups must be positive");
}

json TrainHyper::to_json() const {
  return json{{"batch_size", batch_size},
              {"grad_clip_norm", grad_clip_norm},
              {"lr", lr},
              {"schedule", "cosine-to-zero"},
              {"warmup_steps", warmup_steps},
              {"optimizer", "adamw"},
              {"beta1", beta1},
              {"beta2", beta2},
              {"eps", eps},
              {"weight_decay", weight_decay},
              {"epochs", epochs},
              {"mixed_precision", mixed_precision},
              {"seed", seed},
              {"max_steps", max_steps},
              {"grad_groups", grad_groups}};
}

TrainHyper TrainHyper::from_json(const json& j) {
  TrainHyper h;
  h.batch_size = j.value("batch_size", h.batch_size);
  h.grad_clip_norm = j.value("grad_clip_norm", h.grad_clip_norm);
  h.lr = j.value("lr", h.lr);
  h.warmup_steps = j.value("warmup_steps", h.warmup_steps);
  h.beta1 = j.value("beta1", h.beta1);
  h.beta2 = j.value("beta2", h.beta2);
  h.eps = j.value("eps", h.eps);
  h.weight_decay = j.value("weight_decay", h.weight_decay);
  h.epochs = j.value("epochs", h.epochs);
  h.mixed_precision = j.value("mixed_precision", h.mixed_precision);
  h.seed = j.value("seed", h.seed);
  h.max_steps = j.value("max_steps", h.max_steps);
  h.grad_groups = j.value("grad_groups", h.grad_groups);
  if (j.contains("schedule") && j["schedule"] != "cosine-to-zero") {
    throw InvalidArgument("only the cosine-to-zero schedule is implemented");
  }
  if (j.contains("optimizer") && j["optimizer"] != "adamw") throw InvalidArgument("only adamw is implemented");
  h.validate();
  return h;
}

double learning_rate(const TrainHyper& h, std::size_t step, std::size_t total_steps) {
  if (step < h.warmup_steps) return h.lr * static_cast<double>(step + 1) / static_cast<double>(h.warmup_steps);
  if (total_steps <= h.warmup_steps) return h.lr;
  const double progress =
      static_cast<double>(step - h.warmup_steps) / static_cast<double>(total_steps - h.warmup_steps);
  return 0.5 * h.lr * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

AdamW::AdamW(const TrainHyper& h, const ParamLayout& layout, std::size_t begin, std::size_t end)
    : h_(h), begin_(begin), end_(end), m_(end - begin, 0.0f), v_(end - begin, 0.0f), decay_(end - begin, 0) {
  for (const auto& t : layout.tensors()) {
    if (!t.is_matrix) continue;
    const std::size_t lo = std::max(t.offset, begin);
    const std::size_t hi = std::min(t.offset + t.size(), end);
    for (std::size_t i = lo; i < hi; ++i) decay_[i - begin] = 1;
  }
}

void AdamW::step(std::vector<float>& params, std::span<const float> grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(h_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(h_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(h_.beta1), b2 = static_cast<float>(h_.beta2);
  const float step = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(h_.eps);
  const float wd = static_cast<float>(lr * h_.weight_decay);
  for (std::size_t i = begin_; i < end_; ++i) {
    const std::size_t k = i - begin_;
    const float g = grads[i];
    m_[k] = b1 * m_[k] + (1 - b1) * g;
    v_[k] = b2 * v_[k] + (1 - b2) * g * g;
    float p = params[i];
    if (decay_[k]) p -= wd * p;
    p -= step * m_[k] / (std::sqrt(v_[k] * inv_c2) + eps);
    params[i] = p;
  }
}

double clip_grad_norm(std::span<float> grads, double max_norm) {
  double sq = 0;
  for (float g : grads) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const float s = static_cast<float>(max_norm / (norm + 1e-12));
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace dsfp
