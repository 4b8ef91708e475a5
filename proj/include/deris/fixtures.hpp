#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deris/mask.hpp"
#include "deris/rng.hpp"
#include "deris/tensor.hpp"

namespace deris {

using ImageId = std::int64_t;

/// One image-expression annotation.
///
/// `is_nonreferent` holds exactly when `gt_masks` is empty. All masks share
/// one size and each has at least one foreground pixel. `source_image_id` is
/// set only on samples produced by non-referent conversion and names the
/// image the replacement sentence was taken from.
struct Sample {
  ImageId image_id = 0;
  std::string sentence;
  std::vector<BinaryMask> gt_masks;
  bool is_nonreferent = true;
  std::optional<ImageId> source_image_id;

  /// Union of the GT masks, or an all-zero mask of the given size.
  BinaryMask gt_union(std::size_t height, std::size_t width) const;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Throws std::invalid_argument if the sample violates its invariants.
void validate_sample(const Sample& sample);

struct FixtureConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t max_instances = 3;
  std::size_t vocab_size = 48;
  std::size_t sentence_len = 8;
  double p_nonreferent = 0.09;
  /// Consecutive samples sharing one image_id.
  std::size_t samples_per_image = 2;
};

void validate(const FixtureConfig& cfg);

/// Words used to render synthetic token ids; vocab_size may not exceed its
/// length.
const std::vector<std::string>& fixture_lexicon();

/// One sample: with probability p_nonreferent an empty-GT sample, otherwise
/// 1..max_instances rectangle or ellipse masks. Sentences have 1..sentence_len
/// words from the first vocab_size entries of the lexicon.
Sample gen_sample(Rng& rng, const FixtureConfig& cfg, ImageId image_id);

/// Sample i draws from Rng(derive_seed(seed, i)) and belongs to image
/// i / samples_per_image, so content never depends on generation order.
std::vector<Sample> gen_dataset(std::uint64_t seed, const FixtureConfig& cfg, std::size_t count);

struct FeatureDims {
  std::size_t channels = 32;
  std::size_t height = 64;
  std::size_t width = 64;
  std::vector<std::size_t> level_strides = {32, 16, 8};
  std::size_t mask_stride = 4;
  std::size_t visual_stride = 16;

  std::size_t mask_height() const { return height / mask_stride; }
  std::size_t mask_width() const { return width / mask_stride; }
};

void validate(const FeatureDims& dims);

/// Stand-in for encoder outputs.
struct FeatureBundle {
  std::vector<Tensor> pyramid;  // [C x H/s x W/s], coarse to fine
  Tensor f_h4;                  // [C x H/4 x W/4]
  Tensor f_v;                   // [C x H/16 x W/16]
  Tensor f_t;                   // [L x C], one row per token (at least one)

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

/// Visual tensors draw from a generator keyed by (seed, image_id), text
/// features from one keyed by (seed, FNV-1a of the token list). Values are
/// uniform in [-1, 1).
FeatureBundle pseudo_features(const Sample& sample, const FeatureDims& dims, std::uint64_t seed);

}  // namespace deris
