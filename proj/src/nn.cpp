#include "deris/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace deris {

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear layer = zeros(in, out);
  for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  for (double& b : layer.bias.values()) b = rng.uniform(-bound, bound);
  return layer;
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return Linear{Tensor({in, out}), Tensor({out})};
}

LayerNorm LayerNorm::unit(std::size_t width) {
  return LayerNorm{Tensor({width}, 1.0), Tensor({width})};
}

Mlp Mlp::init(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.layers.push_back(Linear::init(widths[i], widths[i + 1], rng));
  }
  return mlp;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

MultiHeadAttention MultiHeadAttention::init(std::size_t width, std::size_t heads, Rng& rng) {
  MultiHeadAttention mha;
  mha.q_proj = Linear::init(width, width, rng);
  mha.k_proj = Linear::init(width, width, rng);
  mha.v_proj = Linear::init(width, width, rng);
  mha.out_proj = Linear::init(width, width, rng);
  mha.heads = heads;
  return mha;
}

AttentionOutput MultiHeadAttention::operator()(const Tensor& q, const Tensor& k,
                                               const Tensor& v) const {
  AttentionMix mix = scaled_dot_attention(q_proj(q), k_proj(k), v_proj(v), heads);
  Tensor out = out_proj(mix.mixed);
  return {std::move(out), std::move(mix.mixed), std::move(mix.weights)};
}

}  // namespace deris
