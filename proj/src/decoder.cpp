#include "deris/decoder.hpp"

#include <stdexcept>

#include "deris/ops.hpp"

namespace deris {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw DimensionError(message);
}

}  // namespace

void validate(const DecoderConfig& cfg) {
  if (cfg.queries == 0) throw std::invalid_argument("decoder needs at least one query");
  if (cfg.rounds == 0) throw std::invalid_argument("decoder needs at least one round");
  if (cfg.width == 0 || cfg.heads == 0 || cfg.width % cfg.heads != 0) {
    throw std::invalid_argument("decoder width must be a positive multiple of the head count");
  }
  if (cfg.points == 0 || cfg.levels == 0) {
    throw std::invalid_argument("deformable attention needs points and levels");
  }
}

DeformableCrossAttention DeformableCrossAttention::init(const DecoderConfig& cfg, Rng& rng) {
  const std::size_t samples = cfg.heads * cfg.levels * cfg.points;
  DeformableCrossAttention attn;
  attn.reference = Linear::init(cfg.width, 2, rng);
  attn.offsets = Linear::init(cfg.width, samples * 2, rng);
  attn.logits = Linear::init(cfg.width, samples, rng);
  attn.value_proj = Linear::init(cfg.width, cfg.width, rng);
  attn.out_proj = Linear::init(cfg.width, cfg.width, rng);
  attn.heads = cfg.heads;
  attn.levels = cfg.levels;
  attn.points = cfg.points;
  return attn;
}

DeformableCrossAttention::Output DeformableCrossAttention::operator()(
    const Tensor& queries, const std::vector<Tensor>& pyramid) const {
  require(pyramid.size() == levels, "deformable attention: expected " + std::to_string(levels) +
                                        " levels, got " + std::to_string(pyramid.size()));
  const std::size_t n = queries.dim(0);
  const std::size_t d = queries.dim(1);
  const std::size_t dh = d / heads;
  const std::size_t per_head = levels * points;

  const Tensor ref = sigmoid(reference(queries));
  const Tensor off = offsets(queries);
  const Tensor weights = softmax(logits(queries).reshaped({n, heads, per_head}), 2);

  Tensor locations({n, heads, per_head * 2});
  Tensor mixed({n, d});
  for (std::size_t l = 0; l < levels; ++l) {
    const Tensor& level = pyramid[l];
    require(level.rank() == 3 && level.dim(0) == d,
            "deformable attention: level " + std::to_string(l) + " has shape " +
                shape_string(level.shape()) + ", width " + std::to_string(d));
    const std::size_t lh = level.dim(1), lw = level.dim(2);
    const Tensor values = channels_first(value_proj(channels_last(level)), lh, lw);

    Tensor pts({n * heads * points, 2});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t k = 0; k < points; ++k) {
          const std::size_t s = (h * levels + l) * points + k;
          const std::size_t p = (i * heads + h) * points + k;
          const double x = ref.at(i, 0) + off.at(i, 2 * s) / static_cast<double>(lw);
          const double y = ref.at(i, 1) + off.at(i, 2 * s + 1) / static_cast<double>(lh);
          pts.at(p, 0) = x;
          pts.at(p, 1) = y;
          locations.at(i, h, 2 * (l * points + k)) = x;
          locations.at(i, h, 2 * (l * points + k) + 1) = y;
        }
      }
    }
    const Tensor sampled = bilinear_sample(values, pts);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t k = 0; k < points; ++k) {
          const double w = weights.at(i, h, l * points + k);
          const std::size_t p = (i * heads + h) * points + k;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) mixed.at(i, c) += w * sampled.at(p, c);
        }
      }
    }
  }
  return {out_proj(mixed), weights, std::move(locations)};
}

DecoderParams DecoderParams::init(const DecoderConfig& cfg, Rng& rng) {
  validate(cfg);
  const std::size_t d = cfg.width;
  DecoderParams params;
  params.config = cfg;

  Rng query_rng = rng.child(0);
  params.initial_queries = Tensor({cfg.queries, d});
  for (double& v : params.initial_queries.values()) v = query_rng.uniform(-1.0, 1.0);

  Rng fusion_rng = rng.child(1);
  params.feature_fusion = Linear::init(2 * d, d, fusion_rng);
  Rng nonref_rng = rng.child(2);
  params.nonref = Linear::init(d, 1, nonref_rng);

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    Rng round_rng = rng.child(100 + r);
    RoundParams round;
    round.perception.cross = DeformableCrossAttention::init(cfg, round_rng);
    round.perception.cross_norm = LayerNorm::unit(d);
    round.perception.self_attn = MultiHeadAttention::init(d, cfg.heads, round_rng);
    round.perception.self_norm = LayerNorm::unit(d);
    round.perception.mask_embed = Mlp::init({d, d, d, d}, round_rng);
    round.cognition.instance_attn = MultiHeadAttention::init(d, cfg.heads, round_rng);
    round.cognition.instance_norm = LayerNorm::unit(d);
    round.cognition.text_attn = MultiHeadAttention::init(d, cfg.heads, round_rng);
    round.cognition.text_norm = LayerNorm::unit(d);
    round.cognition.score = Mlp::init({d, d, 1}, round_rng);
    round.fusion = Mlp::init({2 * d, 2 * d, d}, round_rng);
    params.rounds.push_back(std::move(round));
  }
  return params;
}

Tensor fuse_feature_map(const Tensor& f_h4, const Tensor& f_v, const Linear& projection) {
  require(f_h4.rank() == 3 && f_v.rank() == 3 && f_h4.dim(0) == f_v.dim(0),
          "fuse_feature_map: f_h4 " + shape_string(f_h4.shape()) + ", f_v " +
              shape_string(f_v.shape()));
  const std::size_t h = f_h4.dim(1), w = f_h4.dim(2);
  const Tensor stacked = concat_channels(f_h4, resize_bilinear(f_v, h, w));
  return channels_first(projection(channels_last(stacked)), h, w);
}

Tensor mask_logits(const Tensor& embed, const Tensor& f_m) {
  require(embed.rank() == 2 && f_m.rank() == 3 && embed.dim(1) == f_m.dim(0),
          "mask_logits: embed " + shape_string(embed.shape()) + ", f_m " +
              shape_string(f_m.shape()));
  const std::size_t c = f_m.dim(0), h = f_m.dim(1), w = f_m.dim(2);
  return matmul(embed, f_m.reshaped({c, h * w})).reshaped({embed.dim(0), h, w});
}

Tensor mask_pooled_features(const Tensor& f_m, const Tensor& m_p) {
  require(f_m.rank() == 3 && m_p.rank() == 3 && f_m.dim(1) == m_p.dim(1) &&
              f_m.dim(2) == m_p.dim(2),
          "mask_pooled_features: f_m " + shape_string(f_m.shape()) + ", m_p " +
              shape_string(m_p.shape()));
  const std::size_t n = m_p.dim(0), hw = m_p.dim(1) * m_p.dim(2);
  Tensor pooled = matmul(sigmoid(m_p).reshaped({n, hw}), channels_last(f_m));
  for (double& v : pooled.values()) v /= static_cast<double>(hw);
  return pooled;
}

PerceptionOutput perception_layer(const QuerySet& q_in, const std::vector<Tensor>& pyramid,
                                  const Tensor& f_m, const PerceptionParams& params) {
  auto cross = params.cross(q_in.q, pyramid);
  const Tensor x = params.cross_norm(add(q_in.q, cross.out));
  auto self = params.self_attn(x, x, x);
  Tensor q_p = params.self_norm(add(x, self.out));
  Tensor m_p = mask_logits(params.mask_embed(q_p), f_m);
  return {QuerySet{std::move(q_p), QueryStage::perception}, std::move(m_p),
          std::move(cross.weights), std::move(self.weights)};
}

CognitionOutput cognition_layer(const QuerySet& q_p, const Tensor& m_p, const Tensor& f_m,
                                const Tensor& f_t, const CognitionParams& params) {
  Tensor f_s = mask_pooled_features(f_m, m_p);
  auto instance = params.instance_attn(q_p.q, add(q_p.q, f_s), q_p.q);
  const Tensor related = params.instance_norm(add(q_p.q, instance.out));
  auto text = params.text_attn(related, f_t, f_t);
  Tensor q_c = params.text_norm(add(related, text.out));
  Tensor s_r = params.score(q_c).reshaped({q_c.dim(0)});
  return {QuerySet{std::move(q_c), QueryStage::cognition}, std::move(s_r), std::move(f_s),
          std::move(instance.weights), std::move(text.weights)};
}

QuerySet fuse_queries(const QuerySet& q_p, const QuerySet& q_c, const Mlp& fusion) {
  require(q_p.q.shape() == q_c.q.shape(), "fuse_queries: " + shape_string(q_p.q.shape()) +
                                              " vs " + shape_string(q_c.q.shape()));
  return QuerySet{fusion(concat_columns(q_p.q, q_c.q)), QueryStage::fused};
}

double non_referent_head(const QuerySet& q_ck, const Linear& head) {
  const Tensor scores = head(q_ck.q);
  double total = 0.0;
  for (double s : scores.values()) total += s;
  return total / static_cast<double>(scores.size());
}

std::vector<RoundOutput> loopback_forward(const FeatureBundle& features,
                                          const DecoderParams& params) {
  const auto& cfg = params.config;
  validate(cfg);
  require(params.rounds.size() == cfg.rounds, "decoder params hold " +
                                                  std::to_string(params.rounds.size()) +
                                                  " rounds, config says " +
                                                  std::to_string(cfg.rounds));
  require(features.f_t.rank() == 2 && features.f_t.dim(1) == cfg.width,
          "text features " + shape_string(features.f_t.shape()) + " vs width " +
              std::to_string(cfg.width));

  const Tensor f_m = fuse_feature_map(features.f_h4, features.f_v, params.feature_fusion);

  std::vector<RoundOutput> outputs;
  outputs.reserve(cfg.rounds);
  QuerySet queries{params.initial_queries, QueryStage::initial};
  for (const RoundParams& round : params.rounds) {
    PerceptionOutput perception = perception_layer(queries, features.pyramid, f_m, round.perception);
    CognitionOutput cognition =
        cognition_layer(perception.q_p, perception.m_p, f_m, features.f_t, round.cognition);
    QuerySet fused = fuse_queries(perception.q_p, cognition.q_c, round.fusion);

    RoundOutput out;
    out.q_p = std::move(perception.q_p);
    out.m_p = std::move(perception.m_p);
    out.q_c = std::move(cognition.q_c);
    out.s_r = std::move(cognition.s_r);
    out.q_f = fused;
    out.attention = {std::move(perception.deformable_weights), std::move(perception.self_weights),
                     std::move(cognition.instance_weights), std::move(cognition.text_weights)};
    outputs.push_back(std::move(out));
    queries = std::move(fused);
  }
  outputs.back().nonref_logit = non_referent_head(outputs.back().q_c, params.nonref);
  return outputs;
}

double existence_probability(const std::vector<RoundOutput>& rounds) {
  if (rounds.empty() || !rounds.back().nonref_logit) {
    throw std::invalid_argument("existence_probability: final round carries no P_nr logit");
  }
  return sigmoid(*rounds.back().nonref_logit);
}

Prediction predict(const Tensor& s_r, const Tensor& m_p, double p_nr, double t_ref, bool use_pnr) {
  if (!(t_ref > 0.0 && t_ref < 1.0)) throw std::invalid_argument("t_ref must lie in (0, 1)");
  require(s_r.rank() == 1 && m_p.rank() == 3 && s_r.dim(0) == m_p.dim(0),
          "predict: s_r " + shape_string(s_r.shape()) + ", m_p " + shape_string(m_p.shape()));
  const std::size_t n = s_r.dim(0), h = m_p.dim(1), w = m_p.dim(2);
  Prediction pred;
  pred.mask = BinaryMask(h, w);
  pred.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred.scores[i] = sigmoid(s_r[i]) * (use_pnr ? p_nr : 1.0);
    if (pred.scores[i] <= t_ref) continue;
    pred.selected.push_back(i);
    const auto plane = m_p.slice(i);
    for (std::size_t p = 0; p < h * w; ++p) {
      if (sigmoid(plane[p]) > 0.5) pred.mask.bits[p] = 1;
    }
  }
  pred.empty = pred.selected.empty();
  return pred;
}

Prediction predict(const RoundOutput& final_round, double p_nr, double t_ref, bool use_pnr) {
  return predict(final_round.s_r, final_round.m_p, p_nr, t_ref, use_pnr);
}

Tensor upsample_mask_logits(const Tensor& m_p, std::size_t height, std::size_t width) {
  require(m_p.rank() == 3, "upsample_mask_logits: " + shape_string(m_p.shape()));
  if (m_p.dim(1) == height && m_p.dim(2) == width) return m_p;
  return resize_bilinear(m_p, height, width);
}

}  // namespace deris
