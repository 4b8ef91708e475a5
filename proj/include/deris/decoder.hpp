#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "deris/fixtures.hpp"
#include "deris/mask.hpp"
#include "deris/nn.hpp"
#include "deris/rng.hpp"
#include "deris/tensor.hpp"

namespace deris {

enum class QueryStage { initial, perception, cognition, fused };

/// [N_q x D] object queries tagged with the stage that produced them.
struct QuerySet {
  Tensor q;
  QueryStage stage = QueryStage::initial;

  std::size_t count() const { return q.dim(0); }
  friend bool operator==(const QuerySet&, const QuerySet&) = default;
};

struct DecoderConfig {
  std::size_t queries = 20;
  std::size_t rounds = 3;
  std::size_t width = 32;  // must equal the feature channel count
  std::size_t heads = 4;
  std::size_t points = 4;  // sampling points per head and level
  std::size_t levels = 3;
};

void validate(const DecoderConfig& cfg);

/// Multi-scale deformable cross-attention with one learned reference point
/// per query. For query n, head h, level l and point k the sampling location
/// is sigmoid(reference(q_n)) + offset_{h,l,k}(q_n) / (W_l, H_l); the
/// attention weights are a softmax over the levels * points samples of each
/// head.
struct DeformableCrossAttention {
  Linear reference;   // D -> 2
  Linear offsets;     // D -> heads * levels * points * 2
  Linear logits;      // D -> heads * levels * points
  Linear value_proj;  // D -> D, applied per pixel
  Linear out_proj;    // D -> D
  std::size_t heads = 4;
  std::size_t levels = 3;
  std::size_t points = 4;

  struct Output {
    Tensor out;        // [N x D]
    Tensor weights;    // [N x heads x levels*points]
    Tensor locations;  // [N x heads x levels*points*2], (x, y) pairs
  };

  static DeformableCrossAttention init(const DecoderConfig& cfg, Rng& rng);
  Output operator()(const Tensor& queries, const std::vector<Tensor>& pyramid) const;
};

struct PerceptionParams {
  DeformableCrossAttention cross;
  LayerNorm cross_norm;
  MultiHeadAttention self_attn;
  LayerNorm self_norm;
  Mlp mask_embed;  // 3 layers, D -> D -> D -> D
};

struct CognitionParams {
  MultiHeadAttention instance_attn;
  LayerNorm instance_norm;
  MultiHeadAttention text_attn;
  LayerNorm text_norm;
  Mlp score;  // D -> D -> 1
};

struct RoundParams {
  PerceptionParams perception;
  CognitionParams cognition;
  Mlp fusion;  // 2D -> 2D -> D
};

/// Every round owns its weights; nothing is shared across rounds.
struct DecoderParams {
  DecoderConfig config;
  Tensor initial_queries;  // [N_q x D]
  Linear feature_fusion;   // 2C -> C, the 1x1 convolution producing f_m
  std::vector<RoundParams> rounds;
  Linear nonref;           // D -> 1

  /// Weights uniform in +-1/sqrt(fan_in); initial queries uniform in [-1, 1);
  /// layer norms start at unit gain and zero shift. Each round draws from its
  /// own child stream of `rng`.
  static DecoderParams init(const DecoderConfig& cfg, Rng& rng);
};

struct PerceptionOutput {
  QuerySet q_p;
  Tensor m_p;                 // [N_q x H' x W'] mask logits
  Tensor deformable_weights;  // [N_q x heads x levels*points]
  Tensor self_weights;        // [heads x N_q x N_q]
};

struct CognitionOutput {
  QuerySet q_c;
  Tensor s_r;               // [N_q] referent logits
  Tensor f_s;               // [N_q x C] mask-pooled features
  Tensor instance_weights;  // [heads x N_q x N_q]
  Tensor text_weights;      // [heads x N_q x L]
};

struct AttentionTrace {
  Tensor deformable;
  Tensor self;
  Tensor instance;
  Tensor text;
};

struct RoundOutput {
  QuerySet q_p;
  Tensor m_p;
  QuerySet q_c;
  Tensor s_r;
  QuerySet q_f;
  AttentionTrace attention;
  /// Present on the final round only.
  std::optional<double> nonref_logit;
};

/// C2: upsample f_v to f_h4's grid, concatenate channelwise and apply a
/// per-pixel 2C -> C projection.
Tensor fuse_feature_map(const Tensor& f_h4, const Tensor& f_v, const Linear& projection);

/// M[n, h, w] = <embed[n], f_m[:, h, w]>.
Tensor mask_logits(const Tensor& embed, const Tensor& f_m);

/// f_s[n, c] = mean over pixels of f_m[c] * sigmoid(m_p[n]).
Tensor mask_pooled_features(const Tensor& f_m, const Tensor& m_p);

PerceptionOutput perception_layer(const QuerySet& q_in, const std::vector<Tensor>& pyramid,
                                  const Tensor& f_m, const PerceptionParams& params);

CognitionOutput cognition_layer(const QuerySet& q_p, const Tensor& m_p, const Tensor& f_m,
                                const Tensor& f_t, const CognitionParams& params);

/// C1: per-query MLP over concat(Q_p, Q_c).
QuerySet fuse_queries(const QuerySet& q_p, const QuerySet& q_c, const Mlp& fusion);

/// Mean over queries of a per-query linear score. sigmoid of the result is
/// the probability that the referred object exists.
double non_referent_head(const QuerySet& q_ck, const Linear& head);

/// Runs config.rounds rounds of perception -> cognition -> fusion. Round 1
/// consumes the learned initial queries, later rounds the previous fused
/// queries. f_m is computed once.
std::vector<RoundOutput> loopback_forward(const FeatureBundle& features,
                                          const DecoderParams& params);

/// sigmoid(nonref_logit) of the final round.
double existence_probability(const std::vector<RoundOutput>& rounds);

struct Prediction {
  std::vector<std::size_t> selected;
  std::vector<double> scores;  // per query, after optional P_nr gating
  BinaryMask mask;
  bool empty = true;
};

inline constexpr double kDefaultReferentThreshold = 0.7;

/// score_n = sigmoid(s_r[n]) * (use_pnr ? p_nr : 1); queries with
/// score_n > t_ref are selected and their masks (sigmoid > 0.5) OR-ed.
Prediction predict(const Tensor& s_r, const Tensor& m_p, double p_nr, double t_ref, bool use_pnr);
Prediction predict(const RoundOutput& final_round, double p_nr, double t_ref, bool use_pnr);

/// Bilinear resize of per-query mask logits [N x H' x W'] -> [N x h x w].
Tensor upsample_mask_logits(const Tensor& m_p, std::size_t height, std::size_t width);

}  // namespace deris
