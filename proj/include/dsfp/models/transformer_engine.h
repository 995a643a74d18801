#pragma once

// Forward/backward kernels of the decoder-only transformer, templated on the
// scalar type: float for training and inference, double for gradient checks.

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <limits>
#include <span>
#include <vector>

#include "dsfp/common/error.h"
#include "dsfp/models/transformer_config.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp::engine {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Round-to-nearest-even truncation of a float to bfloat16 precision.
inline float round_bf16(float x) {
  uint32_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  if ((bits & 0x7f800000u) == 0x7f800000u) return x;  // inf / nan
  const uint32_t lsb = (bits >> 16) & 1u;
  bits += 0x7fffu + lsb;
  bits &= 0xffff0000u;
  std::memcpy(&x, &bits, sizeof bits);
  return x;
}

template <typename T>
void round_bf16_inplace(T* data, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    for (std::size_t i = 0; i < n; ++i) data[i] = round_bf16(data[i]);
  }
}

template <typename T>
struct LayerCache {
  Mat<T> x_in, a, q, k, v, attn, x_mid, b, gate, up, hmid;
  Vec<T> r1, r2;
  std::vector<Mat<T>> probs;  // per head, T x T, zero above the diagonal
};

template <typename T>
struct ForwardCache {
  std::vector<TokenId> tokens;
  std::vector<LayerCache<T>> layers;
  Mat<T> x_final, f, logits;
  Vec<T> rf;
};

// Key/value cache for token-by-token decoding.
template <typename T>
struct DecodeState {
  std::vector<Mat<T>> keys, values;  // per layer, context_length x hidden
  int position = 0;
};

template <typename T>
class Engine {
 public:
  Engine(const TransformerConfig& cfg, const ParamLayout& layout) : cfg_(cfg), layout_(layout) {
    const int half = cfg.head_dim() / 2;
    cos_.resize(static_cast<std::size_t>(cfg.context_length) * half);
    sin_.resize(cos_.size());
    for (int t = 0; t < cfg.context_length; ++t) {
      for (int i = 0; i < half; ++i) {
        const double freq = std::pow(cfg.rope_theta, -2.0 * i / cfg.head_dim());
        cos_[static_cast<std::size_t>(t) * half + i] = static_cast<T>(std::cos(t * freq));
        sin_[static_cast<std::size_t>(t) * half + i] = static_cast<T>(std::sin(t * freq));
      }
    }
  }

  const ParamLayout& layout() const { return layout_; }
  const TransformerConfig& config() const { return cfg_; }

  // Runs the full sequence. With bf16 set, every matmul operand is rounded to
  // bfloat16 (callers pass bf16-rounded parameters as well).
  void forward(const T* params, std::span<const TokenId> tokens, ForwardCache<T>& c, bool bf16 = false) const {
    const int n = static_cast<int>(tokens.size());
    if (n == 0) throw InvalidArgument("forward on an empty token sequence");
    if (n > cfg_.context_length) {
      throw InvalidArgument("sequence of " + std::to_string(n) + " tokens exceeds context length " +
                            std::to_string(cfg_.context_length));
    }
    const int d = cfg_.hidden_dim;
    c.tokens.assign(tokens.begin(), tokens.end());
    c.layers.resize(static_cast<std::size_t>(cfg_.n_layers));

    Mat<T> x(n, d);
    auto emb = map(params, layout_.tensors()[layout_.tok_emb()]);
    for (int t = 0; t < n; ++t) {
      if (tokens[t] >= static_cast<TokenId>(cfg_.vocab_size)) {
        throw InvalidArgument("token id " + std::to_string(tokens[t]) + " >= vocab size");
      }
      x.row(t) = emb.row(tokens[t]);
    }
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const auto& idx = layout_.layer(static_cast<std::size_t>(l));
      auto& lc = c.layers[static_cast<std::size_t>(l)];
      lc.x_in = x;
      rmsnorm(x, vec(params, idx.attn_norm), lc.a, lc.r1);
      maybe_round(lc.a, bf16);
      lc.q.noalias() = lc.a * map(params, idx.wq);
      lc.k.noalias() = lc.a * map(params, idx.wk);
      lc.v.noalias() = lc.a * map(params, idx.wv);
      rope(lc.q, 0, +1);
      rope(lc.k, 0, +1);
      attention_forward(lc, bf16);
      maybe_round(lc.attn, bf16);
      x.noalias() += lc.attn * map(params, idx.wo);
      lc.x_mid = x;
      rmsnorm(x, vec(params, idx.mlp_norm), lc.b, lc.r2);
      maybe_round(lc.b, bf16);
      lc.gate.noalias() = lc.b * map(params, idx.w_gate);
      lc.up.noalias() = lc.b * map(params, idx.w_up);
      lc.hmid = lc.gate.unaryExpr([](T g) { return silu(g); }).cwiseProduct(lc.up);
      maybe_round(lc.hmid, bf16);
      x.noalias() += lc.hmid * map(params, idx.w_down);
    }
    c.x_final = x;
    rmsnorm(x, vec(params, layout_.final_norm()), c.f, c.rf);
    maybe_round(c.f, bf16);
    c.logits.noalias() = c.f * map(params, layout_.head_index());
  }

  // Accumulates parameter gradients for upstream dlogits into `grads` (same
  // layout as params). head_only stops after the head.
  void backward(const T* params, const ForwardCache<T>& c, const Mat<T>& dlogits, T* grads,
                bool head_only = false) const {
    const int n = static_cast<int>(c.tokens.size());
    const int d = cfg_.hidden_dim;
    gmap(grads, layout_.head_index()).noalias() += c.f.transpose() * dlogits;
    if (head_only) return;
    Mat<T> df = dlogits * map(params, layout_.head_index()).transpose();
    Mat<T> dx = Mat<T>::Zero(n, d);
    rmsnorm_backward(c.x_final, c.rf, vec(params, layout_.final_norm()), df, dx, gvec(grads, layout_.final_norm()));

    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
      const auto& idx = layout_.layer(static_cast<std::size_t>(l));
      const auto& lc = c.layers[static_cast<std::size_t>(l)];
      // MLP
      gmap(grads, idx.w_down).noalias() += lc.hmid.transpose() * dx;
      Mat<T> dh = dx * map(params, idx.w_down).transpose();
      Mat<T> dgate(n, cfg_.mlp_dim());
      Mat<T> dup(n, cfg_.mlp_dim());
      for (int t = 0; t < n; ++t) {
        for (int j = 0; j < cfg_.mlp_dim(); ++j) {
          const T g = lc.gate(t, j);
          const T sg = sigmoid(g);
          dup(t, j) = dh(t, j) * g * sg;
          dgate(t, j) = dh(t, j) * lc.up(t, j) * sg * (T(1) + g * (T(1) - sg));
        }
      }
      gmap(grads, idx.w_gate).noalias() += lc.b.transpose() * dgate;
      gmap(grads, idx.w_up).noalias() += lc.b.transpose() * dup;
      Mat<T> db = dgate * map(params, idx.w_gate).transpose();
      db.noalias() += dup * map(params, idx.w_up).transpose();
      rmsnorm_backward(lc.x_mid, lc.r2, vec(params, idx.mlp_norm), db, dx, gvec(grads, idx.mlp_norm));

      // attention
      gmap(grads, idx.wo).noalias() += lc.attn.transpose() * dx;
      Mat<T> dattn = dx * map(params, idx.wo).transpose();
      Mat<T> dq(n, d), dk(n, d), dv(n, d);
      attention_backward(lc, dattn, dq, dk, dv);
      rope(dq, 0, -1);
      rope(dk, 0, -1);
      gmap(grads, idx.wq).noalias() += lc.a.transpose() * dq;
      gmap(grads, idx.wk).noalias() += lc.a.transpose() * dk;
      gmap(grads, idx.wv).noalias() += lc.a.transpose() * dv;
      Mat<T> da = dq * map(params, idx.wq).transpose();
      da.noalias() += dk * map(params, idx.wk).transpose();
      da.noalias() += dv * map(params, idx.wv).transpose();
      rmsnorm_backward(lc.x_in, lc.r1, vec(params, idx.attn_norm), da, dx, gvec(grads, idx.attn_norm));
    }
    auto demb = gmap(grads, layout_.tok_emb());
    for (int t = 0; t < n; ++t) demb.row(c.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
  }

  void start_decode(DecodeState<T>& s) const {
    s.keys.assign(static_cast<std::size_t>(cfg_.n_layers), Mat<T>(cfg_.context_length, cfg_.hidden_dim));
    s.values.assign(static_cast<std::size_t>(cfg_.n_layers), Mat<T>(cfg_.context_length, cfg_.hidden_dim));
    s.position = 0;
  }

  // Appends one token and returns the logits at its position.
  RowVec<T> decode_step(const T* params, DecodeState<T>& s, TokenId token) const {
    if (s.position >= cfg_.context_length) throw InvalidArgument("decode past the context length");
    if (token >= static_cast<TokenId>(cfg_.vocab_size)) throw InvalidArgument("token id >= vocab size");
    const int d = cfg_.hidden_dim;
    const int dh = cfg_.head_dim();
    const int pos = s.position;
    Mat<T> x = map(params, layout_.tensors()[layout_.tok_emb()]).row(token);
    Mat<T> a, q, k, v;
    Vec<T> r;
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const auto& idx = layout_.layer(static_cast<std::size_t>(l));
      rmsnorm(x, vec(params, idx.attn_norm), a, r);
      q.noalias() = a * map(params, idx.wq);
      k.noalias() = a * map(params, idx.wk);
      v.noalias() = a * map(params, idx.wv);
      rope(q, pos, +1);
      rope(k, pos, +1);
      auto& K = s.keys[static_cast<std::size_t>(l)];
      auto& V = s.values[static_cast<std::size_t>(l)];
      K.row(pos) = k.row(0);
      V.row(pos) = v.row(0);
      Mat<T> attn(1, d);
      const T scale = T(1) / std::sqrt(static_cast<T>(dh));
      for (int h = 0; h < cfg_.n_heads; ++h) {
        RowVec<T> scores = (q.block(0, h * dh, 1, dh) * K.block(0, h * dh, pos + 1, dh).transpose()) * scale;
        const T mx = scores.maxCoeff();
        scores = (scores.array() - mx).exp();
        scores /= scores.sum();
        attn.block(0, h * dh, 1, dh).noalias() = scores * V.block(0, h * dh, pos + 1, dh);
      }
      x.noalias() += attn * map(params, idx.wo);
      Mat<T> b;
      rmsnorm(x, vec(params, idx.mlp_norm), b, r);
      Mat<T> g = b * map(params, idx.w_gate);
      Mat<T> u = b * map(params, idx.w_up);
      Mat<T> hm = g.unaryExpr([](T z) { return silu(z); }).cwiseProduct(u);
      x.noalias() += hm * map(params, idx.w_down);
    }
    Mat<T> f;
    rmsnorm(x, vec(params, layout_.final_norm()), f, r);
    ++s.position;
    return f * map(params, layout_.head_index());
  }

 private:
  static T sigmoid(T z) { return T(1) / (T(1) + std::exp(-z)); }
  static T silu(T z) { return z * sigmoid(z); }

  void maybe_round(Mat<T>& m, bool bf16) const {
    if (bf16) round_bf16_inplace(m.data(), static_cast<std::size_t>(m.size()));
  }

  Eigen::Map<const Mat<T>> map(const T* p, std::size_t tensor) const { return map(p, layout_.tensors()[tensor]); }
  Eigen::Map<const Mat<T>> map(const T* p, const TensorSpec& s) const {
    return Eigen::Map<const Mat<T>>(p + s.offset, static_cast<Eigen::Index>(s.rows),
                                    static_cast<Eigen::Index>(s.cols));
  }
  Eigen::Map<const RowVec<T>> vec(const T* p, std::size_t tensor) const {
    const auto& s = layout_.tensors()[tensor];
    return Eigen::Map<const RowVec<T>>(p + s.offset, static_cast<Eigen::Index>(s.size()));
  }
  Eigen::Map<Mat<T>> gmap(T* g, std::size_t tensor) const {
    const auto& s = layout_.tensors()[tensor];
    return Eigen::Map<Mat<T>>(g + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
  }
  Eigen::Map<RowVec<T>> gvec(T* g, std::size_t tensor) const {
    const auto& s = layout_.tensors()[tensor];
    return Eigen::Map<RowVec<T>>(g + s.offset, static_cast<Eigen::Index>(s.size()));
  }

  void rmsnorm(const Mat<T>& x, const Eigen::Map<const RowVec<T>>& gain, Mat<T>& out, Vec<T>& r) const {
    const Eigen::Index n = x.rows();
    out.resize(n, x.cols());
    r.resize(n);
    const T eps = static_cast<T>(cfg_.norm_eps);
    for (Eigen::Index t = 0; t < n; ++t) {
      const T ms = x.row(t).squaredNorm() / static_cast<T>(x.cols());
      r(t) = T(1) / std::sqrt(ms + eps);
      out.row(t) = x.row(t).cwiseProduct(gain) * r(t);
    }
  }

  // dx += d(out)/dx^T dy ; dgain += sum_t dy * x * r
  void rmsnorm_backward(const Mat<T>& x, const Vec<T>& r, const Eigen::Map<const RowVec<T>>& gain, const Mat<T>& dy,
                        Mat<T>& dx, Eigen::Map<RowVec<T>> dgain) const {
    const T inv_d = T(1) / static_cast<T>(x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const RowVec<T> gdy = dy.row(t).cwiseProduct(gain);
      const T dot = gdy.dot(x.row(t));
      const T rt = r(t);
      dx.row(t) += rt * gdy - x.row(t) * (rt * rt * rt * dot * inv_d);
      dgain += dy.row(t).cwiseProduct(x.row(t)) * rt;
    }
  }

  // Rotates consecutive pairs within each head by position * freq. dir = -1
  // applies the inverse rotation (used to pull gradients back).
  void rope(Mat<T>& m, int start, int dir) const {
    const int dh = cfg_.head_dim();
    const int half = dh / 2;
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      const std::size_t base = static_cast<std::size_t>(start + t) * half;
      for (int h = 0; h < cfg_.n_heads; ++h) {
        for (int i = 0; i < half; ++i) {
          const T c = cos_[base + i];
          const T s = dir > 0 ? sin_[base + i] : -sin_[base + i];
          const int j = h * dh + 2 * i;
          const T x0 = m(t, j);
          const T x1 = m(t, j + 1);
          m(t, j) = x0 * c - x1 * s;
          m(t, j + 1) = x0 * s + x1 * c;
        }
      }
    }
  }

  void attention_forward(LayerCache<T>& lc, bool bf16) const {
    const Eigen::Index n = lc.q.rows();
    const int dh = cfg_.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    lc.attn.resize(n, cfg_.hidden_dim);
    lc.probs.resize(static_cast<std::size_t>(cfg_.n_heads));
    for (int h = 0; h < cfg_.n_heads; ++h) {
      auto& p = lc.probs[static_cast<std::size_t>(h)];
      p.noalias() = (lc.q.middleCols(h * dh, dh) * lc.k.middleCols(h * dh, dh).transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        T mx = -std::numeric_limits<T>::infinity();
        for (Eigen::Index j = 0; j <= i; ++j) mx = std::max(mx, p(i, j));
        T sum = 0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          p(i, j) = std::exp(p(i, j) - mx);
          sum += p(i, j);
        }
        const T inv = T(1) / sum;
        for (Eigen::Index j = 0; j <= i; ++j) p(i, j) *= inv;
        for (Eigen::Index j = i + 1; j < n; ++j) p(i, j) = 0;
      }
      if (bf16) {
        Mat<T> pr = p;
        maybe_round(pr, true);
        lc.attn.middleCols(h * dh, dh).noalias() = pr * lc.v.middleCols(h * dh, dh);
      } else {
        lc.attn.middleCols(h * dh, dh).noalias() = p * lc.v.middleCols(h * dh, dh);
      }
    }
  }

  void attention_backward(const LayerCache<T>& lc, const Mat<T>& dattn, Mat<T>& dq, Mat<T>& dk, Mat<T>& dv) const {
    const Eigen::Index n = lc.q.rows();
    const int dh = cfg_.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Mat<T> dp, ds(n, n);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const auto& p = lc.probs[static_cast<std::size_t>(h)];
      const auto d_o = dattn.middleCols(h * dh, dh);
      dp.noalias() = d_o * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh).noalias() = p.transpose() * d_o;
      for (Eigen::Index i = 0; i < n; ++i) {
        T rowdot = 0;
        for (Eigen::Index j = 0; j <= i; ++j) rowdot += dp(i, j) * p(i, j);
        for (Eigen::Index j = 0; j <= i; ++j) ds(i, j) = p(i, j) * (dp(i, j) - rowdot) * scale;
        for (Eigen::Index j = i + 1; j < n; ++j) ds(i, j) = 0;
      }
      dq.middleCols(h * dh, dh).noalias() = ds * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * lc.q.middleCols(h * dh, dh);
    }
  }

  TransformerConfig cfg_;
  ParamLayout layout_;
  std::vector<T> cos_, sin_;
};

// Mean cross-entropy over rows against per-row targets; writes
// d(loss * weight)/d(logits) into dlogits. Returns the mean loss.
template <typename T, typename TargetFn>
T softmax_cross_entropy(const Mat<T>& logits, TargetFn target_of_row, Mat<T>& dlogits, T weight) {
  const Eigen::Index n = logits.rows();
  dlogits.resize(n, logits.cols());
  T total = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const T mx = logits.row(t).maxCoeff();
    RowVec<T> e = (logits.row(t).array() - mx).exp();
    const T z = e.sum();
    const Eigen::Index y = static_cast<Eigen::Index>(target_of_row(t));
    total += std::log(z) + mx - logits(t, y);
    dlogits.row(t) = e * (weight / (z * static_cast<T>(n)));
    dlogits(t, y) -= weight / static_cast<T>(n);
  }
  return total / static_cast<T>(n);
}

}  // namespace dsfp::engine
