#pragma once

#include <cstddef>
#include <vector>

#include "deris/ops.hpp"
#include "deris/rng.hpp"
#include "deris/tensor.hpp"

namespace deris {

/// Affine layer with weight [in x out] and bias [out].
struct Linear {
  Tensor weight;
  Tensor bias;

  /// Weight and bias uniform in [-1/sqrt(in), +1/sqrt(in)].
  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Tensor gain;
  Tensor shift;

  static LayerNorm unit(std::size_t width);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, shift); }
};

/// Stack of linear layers with ReLU between consecutive layers (none after
/// the last).
struct Mlp {
  std::vector<Linear> layers;

  /// widths = {in, hidden..., out}
  static Mlp init(const std::vector<std::size_t>& widths, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

struct AttentionOutput {
  Tensor out;             // [N x D] after output projection
  Tensor pre_projection;  // [N x D] convex mix of projected values
  Tensor weights;         // [heads x N x M]
};

/// Multi-head attention with input projections and an output projection.
struct MultiHeadAttention {
  Linear q_proj;
  Linear k_proj;
  Linear v_proj;
  Linear out_proj;
  std::size_t heads = 1;

  static MultiHeadAttention init(std::size_t width, std::size_t heads, Rng& rng);
  AttentionOutput operator()(const Tensor& q, const Tensor& k, const Tensor& v) const;
};

}  // namespace deris
