#include "deris/ops.hpp"

#include <algorithm>
#include <cmath>

namespace deris {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto row = out.slice(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      const auto brow = b.slice(p);
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const std::size_t len = x.dim(axis);
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < x.rank(); ++a) inner *= x.shape()[a];
  const std::size_t outer = x.size() / (len * inner);

  Tensor out = x;
  auto v = out.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double peak = v[base];
      for (std::size_t i = 1; i < len; ++i) peak = std::max(peak, v[base + i * inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        double& e = v[base + i * inner];
        e = std::exp(e - peak);
        total += e;
      }
      for (std::size_t i = 0; i < len; ++i) v[base + i * inner] /= total;
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() == 0 || w.rank() != 2 || bias.rank() != 1 || x.shape().back() != w.dim(0) ||
      bias.dim(0) != w.dim(1)) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(w.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t d_in = w.dim(0), d_out = w.dim(1);
  const std::size_t rows = x.size() / d_in;
  Shape out_shape = x.shape();
  out_shape.back() = d_out;
  Tensor out(out_shape);
  auto xv = x.values();
  auto ov = out.values();
  auto wv = w.values();
  auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = ov.data() + r * d_out;
    std::copy(bv.begin(), bv.end(), orow);
    for (std::size_t p = 0; p < d_in; ++p) {
      const double xp = xv[r * d_in + p];
      const double* wrow = wv.data() + p * d_out;
      for (std::size_t j = 0; j < d_out; ++j) orow[j] += xp * wrow[j];
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift) {
  const std::size_t d = x.shape().back();
  if (gain.size() != d || shift.size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) + ", gain " +
                         shape_string(gain.shape()) + ", shift " + shape_string(shift.shape()));
  }
  Tensor out = x;
  auto v = out.values();
  for (std::size_t r = 0; r < x.size() / d; ++r) {
    double* row = v.data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t i = 0; i < d; ++i) row[i] = (row[i] - mean) * inv * gain[i] + shift[i];
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor concat_columns(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_columns");
  require_rank(b, 2, "concat_columns");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_columns: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  Tensor out({n, ca + cb});
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.slice(i);
    std::ranges::copy(a.slice(i), row.begin());
    std::ranges::copy(b.slice(i), row.begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw DimensionError("concat_channels: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  values.insert(values.end(), b.values().begin(), b.values().end());
  return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(values));
}

Tensor channels_last(const Tensor& map) {
  require_rank(map, 3, "channels_last");
  const std::size_t c = map.dim(0), hw = map.dim(1) * map.dim(2);
  Tensor out({hw, c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto plane = map.slice(ch);
    for (std::size_t p = 0; p < hw; ++p) out.at(p, ch) = plane[p];
  }
  return out;
}

Tensor channels_first(const Tensor& pixels, std::size_t height, std::size_t width) {
  require_rank(pixels, 2, "channels_first");
  if (pixels.dim(0) != height * width) {
    throw DimensionError("channels_first: " + shape_string(pixels.shape()) + " is not " +
                         std::to_string(height) + "x" + std::to_string(width) + " pixels");
  }
  const std::size_t c = pixels.dim(1);
  Tensor out({c, height, width});
  for (std::size_t ch = 0; ch < c; ++ch) {
    auto plane = out.slice(ch);
    for (std::size_t p = 0; p < height * width; ++p) plane[p] = pixels.at(p, ch);
  }
  return out;
}

AttentionMix scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                  std::size_t heads) {
  require_rank(q, 2, "attention");
  require_rank(k, 2, "attention");
  require_rank(v, 2, "attention");
  const std::size_t n = q.dim(0), m = k.dim(0), d = q.dim(1);
  if (k.dim(1) != d || v.dim(1) != d || v.dim(0) != m) {
    throw DimensionError("attention: q " + shape_string(q.shape()) + ", k " +
                         shape_string(k.shape()) + ", v " + shape_string(v.shape()));
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor logits({heads, n, m});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) dot += q.at(i, c) * k.at(j, c);
        logits.at(h, i, j) = dot * scale;
      }
    }
  }
  Tensor weights = softmax(logits, 2);

  Tensor mixed({n, d});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double w = weights.at(h, i, j);
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) mixed.at(i, c) += w * v.at(j, c);
      }
    }
  }
  return {std::move(mixed), std::move(weights)};
}

Tensor bilinear_sample(const Tensor& map, const Tensor& points) {
  require_rank(map, 3, "bilinear_sample");
  if (points.rank() != 2 || points.dim(1) != 2) {
    throw DimensionError("bilinear_sample: points must be [P x 2], got " +
                         shape_string(points.shape()));
  }
  const std::size_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
  const std::size_t p = points.dim(0);
  Tensor out({p, c});
  const auto axis = [](double coord, std::size_t extent, std::size_t& lo, std::size_t& hi,
                       double& frac) {
    double px = coord * static_cast<double>(extent) - 0.5;
    px = std::clamp(px, 0.0, static_cast<double>(extent - 1));
    const double fl = std::floor(px);
    lo = static_cast<std::size_t>(fl);
    hi = std::min(lo + 1, extent - 1);
    frac = px - fl;
  };
  for (std::size_t i = 0; i < p; ++i) {
    std::size_t x0, x1, y0, y1;
    double fx, fy;
    axis(points.at(i, 0), w, x0, x1, fx);
    axis(points.at(i, 1), h, y0, y1, fy);
    auto row = out.slice(i);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double top = (1.0 - fx) * map.at(ch, y0, x0) + fx * map.at(ch, y0, x1);
      const double bottom = (1.0 - fx) * map.at(ch, y1, x0) + fx * map.at(ch, y1, x1);
      row[ch] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Tensor resize_bilinear(const Tensor& map, std::size_t height, std::size_t width) {
  require_rank(map, 3, "resize_bilinear");
  Tensor points({height * width, 2});
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      points.at(i * width + j, 0) = (static_cast<double>(j) + 0.5) / static_cast<double>(width);
      points.at(i * width + j, 1) = (static_cast<double>(i) + 0.5) / static_cast<double>(height);
    }
  }
  return channels_first(bilinear_sample(map, points), height, width);
}

double accurate_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace deris
