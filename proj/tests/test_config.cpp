#include <gtest/gtest.h>

#include <cstdlib>

#include "deris/config.hpp"

using namespace deris;

TEST(Config, DefaultsAreTheReferenceValues) {
  const RunConfig cfg = config_from_json(Json::object());
  EXPECT_EQ(cfg.decoder.rounds, 3u);
  EXPECT_EQ(cfg.decoder.queries, 20u);
  EXPECT_EQ(cfg.loss.aux, 0.2);
  EXPECT_EQ(cfg.inference.t_ref, 0.7);
  EXPECT_FALSE(cfg.inference.use_pnr);
  EXPECT_EQ(cfg.nsc.r_c, 0.15);
  EXPECT_EQ(cfg.nsc.n_w, 2u);
  EXPECT_EQ(cfg.nsc.t_s, 0.6);
  EXPECT_FALSE(cfg.seed.has_value());
}

TEST(Config, SectionsOverrideFields) {
  const RunConfig cfg = config_from_json(Json::parse(R"({
    "seed": 5,
    "fixtures": {"height": 32, "width": 32, "count": 10},
    "decoder": {"rounds": 2, "queries": 8},
    "nsc": {"r_c": 0.5},
    "inference": {"use_pnr": true, "t_ref": 0.4}
  })"));
  EXPECT_EQ(*cfg.seed, 5u);
  EXPECT_EQ(cfg.fixtures.height, 32u);
  EXPECT_EQ(cfg.count, 10u);
  EXPECT_EQ(cfg.decoder.rounds, 2u);
  EXPECT_EQ(cfg.nsc.r_c, 0.5);
  EXPECT_TRUE(cfg.inference.use_pnr);
  EXPECT_EQ(feature_dims(cfg).mask_height(), 8u);
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.decoder.points = 2;
  cfg.nsc.max_attempts = 7;
  const RunConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json(Json::parse(R"({"decoder": {"round": 2}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"extra": 1})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"decoder": {"rounds": "three"}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"inference": {"t_ref": 1.0}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"fixtures": {"height": 30}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"decoder": {"width": 30}})")), ConfigError);
}

TEST(Config, SeedPrecedence) {
  RunConfig cfg;
  ::unsetenv("DERIS_SEED");
  EXPECT_EQ(resolve_seed(std::nullopt, cfg), 0u);
  ::setenv("DERIS_SEED", "17", 1);
  EXPECT_EQ(resolve_seed(std::nullopt, cfg), 17u);
  cfg.seed = 8;
  EXPECT_EQ(resolve_seed(std::nullopt, cfg), 8u);
  EXPECT_EQ(resolve_seed(3, cfg), 3u);
  cfg.seed.reset();
  ::setenv("DERIS_SEED", "-4", 1);
  EXPECT_THROW(resolve_seed(std::nullopt, cfg), ConfigError);
  ::setenv("DERIS_SEED", "12abc", 1);
  EXPECT_THROW(resolve_seed(std::nullopt, cfg), ConfigError);
  ::unsetenv("DERIS_SEED");
}

TEST(Config, StageSeedsAreDistinct) {
  EXPECT_NE(stage_seed(1, "nsc"), stage_seed(1, "decoder"));
  EXPECT_NE(stage_seed(1, "nsc"), stage_seed(2, "nsc"));
  EXPECT_EQ(stage_seed(1, "nsc"), stage_seed(1, "nsc"));
}
