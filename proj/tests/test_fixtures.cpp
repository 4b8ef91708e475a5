#include <gtest/gtest.h>

#include <filesystem>

#include "deris/annotations.hpp"
#include "deris/fixtures.hpp"
#include "deris/mask.hpp"
#include "deris/text.hpp"

using namespace deris;

namespace {

BinaryMask random_mask(Rng& rng, std::size_t h, std::size_t w, double density) {
  BinaryMask m(h, w);
  for (auto& b : m.bits) b = rng.bernoulli(density) ? 1 : 0;
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("deris_fixtures_" + name);
}

}  // namespace

TEST(Rle, RoundTripProperty) {
  Rng root(100);
  for (std::size_t i = 0; i < 1000; ++i) {
    Rng rng = root.child(i);
    const std::size_t h = 1 + rng.below(12), w = 1 + rng.below(12);
    const double density = rng.uniform();
    const BinaryMask m = random_mask(rng, h, w, density);
    const RleMask rle = encode_rle(m);
    std::uint64_t total = 0;
    for (std::size_t r = 0; r < rle.runs.size(); ++r) {
      total += rle.runs[r];
      if (r > 0) ASSERT_GT(rle.runs[r], 0u);
    }
    ASSERT_EQ(total, h * w);
    ASSERT_EQ(decode_rle(rle), m) << "case " << i;
  }
}

TEST(Rle, HandEncodedExample) {
  BinaryMask m(2, 3);
  m.bits = {1, 1, 0, 0, 0, 1};
  EXPECT_EQ(encode_rle(m).runs, (std::vector<std::uint32_t>{0, 2, 3, 1}));
  BinaryMask zeros(2, 2);
  EXPECT_EQ(encode_rle(zeros).runs, (std::vector<std::uint32_t>{4}));
}

TEST(Rle, DecodeRejectsMalformedRuns) {
  EXPECT_THROW(decode_rle(RleMask{2, 2, {1, 2}}), FormatError);
  EXPECT_THROW(decode_rle(RleMask{2, 2, {1, 0, 3}}), FormatError);
  EXPECT_NO_THROW(decode_rle(RleMask{2, 2, {0, 4}}));
}

TEST(Rle, EncodeRejectsNonBinary) {
  BinaryMask m(1, 2);
  m.bits = {0, 2};
  EXPECT_THROW(encode_rle(m), FormatError);
}

TEST(Mask, UnionAndDownsample) {
  BinaryMask a(4, 4), b(4, 4);
  a.at(0, 0) = a.at(0, 1) = 1;
  b.at(3, 3) = 1;
  const BinaryMask u = mask_union({a, b}, 4, 4);
  EXPECT_EQ(u.area(), 3u);
  const BinaryMask d = downsample_majority(u, 2, 2);
  EXPECT_EQ(d.at(0, 0), 1);  // 2 of 4 cells on
  EXPECT_EQ(d.at(1, 1), 0);  // 1 of 4
  EXPECT_THROW(downsample_majority(u, 3, 3), std::invalid_argument);
  EXPECT_TRUE(mask_union({}, 2, 2).empty());
}

TEST(Text, TokenizeLowercasesAndSplits) {
  EXPECT_EQ(tokenize("The  red-Apple, left!"),
            (std::vector<std::string>{"the", "red", "apple", "left"}));
  EXPECT_TRUE(tokenize("  ... ").empty());
  EXPECT_EQ(tokenize("caf\xc3\xa9 bar").size(), 2u);
}

TEST(Fixtures, SamplesSatisfyInvariants) {
  const FixtureConfig cfg;
  const auto samples = gen_dataset(5, cfg, 500);
  ASSERT_EQ(samples.size(), 500u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    EXPECT_NO_THROW(validate_sample(s));
    EXPECT_EQ(s.is_nonreferent, s.gt_masks.empty());
    EXPECT_LE(s.gt_masks.size(), cfg.max_instances);
    EXPECT_EQ(s.image_id, static_cast<ImageId>(i / cfg.samples_per_image));
    const auto words = tokenize(s.sentence);
    EXPECT_GE(words.size(), 1u);
    EXPECT_LE(words.size(), cfg.sentence_len);
    for (const auto& m : s.gt_masks) {
      EXPECT_EQ(m.height, cfg.height);
      EXPECT_GT(m.area(), 0u);
    }
  }
}

TEST(Fixtures, DatasetIsDeterministicAndPrefixStable) {
  const FixtureConfig cfg;
  const auto a = gen_dataset(9, cfg, 50);
  const auto b = gen_dataset(9, cfg, 80);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_NE(gen_dataset(10, cfg, 50), a);
}

TEST(Fixtures, NonReferentRateTracksProbability) {
  FixtureConfig cfg;
  cfg.p_nonreferent = 0.0;
  for (const auto& s : gen_dataset(1, cfg, 300)) EXPECT_FALSE(s.is_nonreferent);
  cfg.p_nonreferent = 1.0;
  for (const auto& s : gen_dataset(1, cfg, 300)) EXPECT_TRUE(s.is_nonreferent);
}

TEST(Fixtures, ValidateRejectsBadConfig) {
  FixtureConfig cfg;
  cfg.height = 4;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = FixtureConfig{};
  cfg.vocab_size = 1000;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = FixtureConfig{};
  cfg.p_nonreferent = 1.5;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(Fixtures, PseudoFeatureShapesAndStreams) {
  const FeatureDims dims;
  Sample s;
  s.image_id = 3;
  s.sentence = "red ball on the left";
  const FeatureBundle f = pseudo_features(s, dims, 77);
  ASSERT_EQ(f.pyramid.size(), 3u);
  EXPECT_EQ(f.pyramid[0].shape(), (Shape{32, 2, 2}));
  EXPECT_EQ(f.pyramid[2].shape(), (Shape{32, 8, 8}));
  EXPECT_EQ(f.f_h4.shape(), (Shape{32, 16, 16}));
  EXPECT_EQ(f.f_v.shape(), (Shape{32, 4, 4}));
  EXPECT_EQ(f.f_t.shape(), (Shape{5, 32}));
  for (double v : f.f_h4.values()) {
    ASSERT_GE(v, -1.0);
    ASSERT_LT(v, 1.0);
  }
  EXPECT_EQ(pseudo_features(s, dims, 77), f);

  // Text changes leave visual features alone and vice versa.
  Sample other = s;
  other.sentence = "blue cup";
  const FeatureBundle g = pseudo_features(other, dims, 77);
  EXPECT_EQ(g.pyramid, f.pyramid);
  EXPECT_EQ(g.f_h4, f.f_h4);
  EXPECT_NE(g.f_t, f.f_t);
  other = s;
  other.image_id = 4;
  const FeatureBundle h = pseudo_features(other, dims, 77);
  EXPECT_NE(h.f_h4, f.f_h4);
  EXPECT_EQ(h.f_t, f.f_t);
}

TEST(Fixtures, WordlessSentenceGetsOneTextRow) {
  Sample s;
  s.sentence = "";
  EXPECT_EQ(pseudo_features(s, FeatureDims{}, 1).f_t.dim(0), 1u);
}

TEST(Annotations, JsonRoundTrip) {
  const auto samples = gen_dataset(12, FixtureConfig{}, 40);
  for (const auto& s : samples) EXPECT_EQ(sample_from_json(sample_to_json(s)), s);
  Sample converted = samples[0];
  converted.gt_masks.clear();
  converted.is_nonreferent = true;
  converted.source_image_id = 17;
  EXPECT_EQ(sample_from_json(sample_to_json(converted)), converted);
}

TEST(Annotations, FileRoundTrip) {
  const auto samples = gen_dataset(13, FixtureConfig{}, 25);
  const auto path = temp_file("roundtrip.jsonl");
  write_annotations(path, samples);
  EXPECT_EQ(read_annotations(path), samples);
  std::filesystem::remove(path);
}

TEST(Annotations, IntegerTokenSentence) {
  const Json j = Json::parse(R"({"image_id": 1, "sentence": [4, 8, 15], "masks": [], "nonreferent": true})");
  EXPECT_EQ(sample_from_json(j).sentence, "4 8 15");
}

TEST(Annotations, RejectsInconsistentSamples) {
  const Json missing = Json::parse(R"({"image_id": 1, "masks": [], "nonreferent": true})");
  EXPECT_THROW(sample_from_json(missing), FormatError);
  const Json inconsistent =
      Json::parse(R"({"image_id": 1, "sentence": "a b", "masks": [], "nonreferent": false})");
  EXPECT_THROW(sample_from_json(inconsistent), FormatError);
}
