#include "deris/fixtures.hpp"

#include <algorithm>
#include <stdexcept>

#include "deris/text.hpp"

namespace deris {

namespace {

constexpr std::uint64_t kVisualStream = 0x76697375616cULL;  // "visual"
constexpr std::uint64_t kTextStream = 0x74657874ULL;        // "text"

Tensor noise(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void paint_instance(BinaryMask& mask, Rng& rng) {
  const auto h = static_cast<std::int64_t>(mask.height);
  const auto w = static_cast<std::int64_t>(mask.width);
  const bool ellipse = rng.below(2) == 1;
  const std::int64_t cy = rng.between(0, h - 1);
  const std::int64_t cx = rng.between(0, w - 1);
  const std::int64_t ry = rng.between(std::max<std::int64_t>(2, h / 16), std::max<std::int64_t>(2, h / 4));
  const std::int64_t rx = rng.between(std::max<std::int64_t>(2, w / 16), std::max<std::int64_t>(2, w / 4));
  for (std::int64_t y = std::max<std::int64_t>(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y) {
    for (std::int64_t x = std::max<std::int64_t>(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x) {
      bool inside = true;
      if (ellipse) {
        const double dy = static_cast<double>(y - cy) / static_cast<double>(ry);
        const double dx = static_cast<double>(x - cx) / static_cast<double>(rx);
        inside = dy * dy + dx * dx <= 1.0;
      }
      if (inside) mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1;
    }
  }
}

}  // namespace

BinaryMask Sample::gt_union(std::size_t height, std::size_t width) const {
  return mask_union(gt_masks, height, width);
}

void validate_sample(const Sample& sample) {
  if (sample.is_nonreferent != sample.gt_masks.empty()) {
    throw std::invalid_argument("sample " + std::to_string(sample.image_id) +
                                ": non-referent flag disagrees with mask list");
  }
  for (const auto& m : sample.gt_masks) {
    if (m.height != sample.gt_masks.front().height || m.width != sample.gt_masks.front().width) {
      throw std::invalid_argument("sample " + std::to_string(sample.image_id) +
                                  ": masks differ in size");
    }
    if (m.empty()) {
      throw std::invalid_argument("sample " + std::to_string(sample.image_id) +
                                  ": mask without foreground");
    }
  }
}

void validate(const FixtureConfig& cfg) {
  if (cfg.height < 8 || cfg.width < 8) throw std::invalid_argument("fixture H and W must be >= 8");
  if (cfg.max_instances < 1) throw std::invalid_argument("max_instances must be >= 1");
  if (cfg.vocab_size < 1 || cfg.vocab_size > fixture_lexicon().size()) {
    throw std::invalid_argument("vocab_size must be in [1, " +
                                std::to_string(fixture_lexicon().size()) + "]");
  }
  if (cfg.sentence_len < 1) throw std::invalid_argument("sentence_len must be >= 1");
  if (!(cfg.p_nonreferent >= 0.0 && cfg.p_nonreferent <= 1.0)) {
    throw std::invalid_argument("p_nonreferent must be in [0, 1]");
  }
  if (cfg.samples_per_image < 1) throw std::invalid_argument("samples_per_image must be >= 1");
}

const std::vector<std::string>& fixture_lexicon() {
  static const std::vector<std::string> words = {
      "the",    "a",      "red",    "green",  "blue",   "yellow", "black",  "white",
      "left",   "right",  "top",    "bottom", "middle", "front",  "back",   "near",
      "far",    "big",    "small",  "tall",   "short",  "man",    "woman",  "child",
      "dog",    "cat",    "horse",  "car",    "bus",    "bike",   "chair",  "table",
      "cup",    "bottle", "plate",  "bowl",   "apple",  "banana", "orange", "pizza",
      "shirt",  "hat",    "bag",    "umbrella", "tree", "sign",   "window", "door",
      "sitting", "standing", "holding", "wearing", "behind", "beside", "under", "above",
      "with",   "on",     "in",     "of",     "closest", "second", "third", "last"};
  return words;
}

Sample gen_sample(Rng& rng, const FixtureConfig& cfg, ImageId image_id) {
  validate(cfg);
  Sample sample;
  sample.image_id = image_id;
  sample.is_nonreferent = rng.bernoulli(cfg.p_nonreferent);

  const auto& lexicon = fixture_lexicon();
  const auto words = rng.between(1, static_cast<std::int64_t>(cfg.sentence_len));
  for (std::int64_t i = 0; i < words; ++i) {
    if (i > 0) sample.sentence += ' ';
    sample.sentence += lexicon[rng.below(cfg.vocab_size)];
  }

  if (!sample.is_nonreferent) {
    const auto count = rng.between(1, static_cast<std::int64_t>(cfg.max_instances));
    for (std::int64_t i = 0; i < count; ++i) {
      BinaryMask mask(cfg.height, cfg.width);
      paint_instance(mask, rng);
      sample.gt_masks.push_back(std::move(mask));
    }
  }
  return sample;
}

std::vector<Sample> gen_dataset(std::uint64_t seed, const FixtureConfig& cfg, std::size_t count) {
  validate(cfg);
  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    samples.push_back(gen_sample(rng, cfg, static_cast<ImageId>(i / cfg.samples_per_image)));
  }
  return samples;
}

void validate(const FeatureDims& dims) {
  if (dims.channels == 0) throw std::invalid_argument("feature channels must be positive");
  if (dims.mask_stride == 0 || dims.height % dims.mask_stride != 0 ||
      dims.width % dims.mask_stride != 0) {
    throw std::invalid_argument("working resolution must be a multiple of the mask stride");
  }
  if (dims.level_strides.empty()) throw std::invalid_argument("need at least one pyramid level");
  for (std::size_t i = 0; i < dims.level_strides.size(); ++i) {
    if (dims.level_strides[i] == 0) throw std::invalid_argument("zero pyramid stride");
    if (i > 0 && dims.level_strides[i] >= dims.level_strides[i - 1]) {
      throw std::invalid_argument("pyramid strides must decrease (coarse to fine)");
    }
  }
  if (dims.level_strides.back() <= dims.mask_stride) {
    throw std::invalid_argument("mask features must be finer than every pyramid level");
  }
  if (dims.visual_stride <= dims.mask_stride) {
    throw std::invalid_argument("visual grid must be coarser than the mask features");
  }
}

FeatureBundle pseudo_features(const Sample& sample, const FeatureDims& dims, std::uint64_t seed) {
  validate(dims);
  const auto extent = [](std::size_t size, std::size_t stride) {
    return std::max<std::size_t>(1, size / stride);
  };
  const std::size_t c = dims.channels;

  FeatureBundle bundle;
  Rng visual(derive_seed(derive_seed(seed, kVisualStream), static_cast<std::uint64_t>(sample.image_id)));
  for (std::size_t stride : dims.level_strides) {
    bundle.pyramid.push_back(
        noise({c, extent(dims.height, stride), extent(dims.width, stride)}, visual));
  }
  bundle.f_h4 = noise({c, dims.mask_height(), dims.mask_width()}, visual);
  bundle.f_v = noise(
      {c, extent(dims.height, dims.visual_stride), extent(dims.width, dims.visual_stride)}, visual);

  const auto tokens = tokenize(sample.sentence);
  std::uint64_t text_key = fnv1a("");
  for (const auto& t : tokens) {
    text_key = fnv1a(t, text_key);
    text_key = fnv1a("\x1f", text_key);
  }
  Rng text(derive_seed(derive_seed(seed, kTextStream), text_key));
  bundle.f_t = noise({std::max<std::size_t>(1, tokens.size()), c}, text);
  return bundle;
}

}  // namespace deris
