#pragma once

#include <cstddef>
#include <span>

#include "deris/tensor.hpp"

namespace deris {

Tensor matmul(const Tensor& a, const Tensor& b);

/// Softmax along `axis`, max-subtracted per slice.
Tensor softmax(const Tensor& x, std::size_t axis);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);

Tensor relu(const Tensor& x);

/// Affine map on the last axis: x[..., D_in] * w[D_in, D_out] + bias[D_out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Normalizes the last axis to zero mean and unit variance (epsilon 1e-5),
/// then applies per-feature gain and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift);

inline constexpr double kLayerNormEpsilon = 1e-5;

Tensor add(const Tensor& a, const Tensor& b);

/// Concatenates two matrices [N x A] and [N x B] into [N x (A + B)].
Tensor concat_columns(const Tensor& a, const Tensor& b);

/// Concatenates two feature maps [C1 x H x W] and [C2 x H x W] channelwise.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// [C x H x W] -> [(H*W) x C] and back.
Tensor channels_last(const Tensor& map);
Tensor channels_first(const Tensor& pixels, std::size_t height, std::size_t width);

struct AttentionMix {
  Tensor mixed;    // [N x D], heads concatenated
  Tensor weights;  // [heads x N x M]
};

/// Multi-head scaled dot-product attention on already-projected inputs.
/// Head h reads feature columns [h*D/heads, (h+1)*D/heads).
AttentionMix scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                  std::size_t heads);

/// Samples a [C x H x W] map at normalized points [P x 2], given as (x, y)
/// in [0, 1]. Grid cell (i, j) has its center at ((j + 0.5) / W,
/// (i + 0.5) / H); coordinates beyond the outermost centers are clamped to
/// the border. Returns [P x C].
Tensor bilinear_sample(const Tensor& map, const Tensor& points);

/// Resamples a [C x H x W] map to [C x height x width] by bilinear sampling
/// at the target grid centers.
Tensor resize_bilinear(const Tensor& map, std::size_t height, std::size_t width);

/// Compensated (Neumaier) summation.
double accurate_sum(std::span<const double> values);

}  // namespace deris
