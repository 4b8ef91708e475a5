#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "deris/annotations.hpp"
#include "deris/decoder.hpp"
#include "deris/fixtures.hpp"
#include "deris/losses.hpp"
#include "deris/nsc.hpp"

namespace deris {

/// Bad configuration or command-line input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InferenceConfig {
  double t_ref = kDefaultReferentThreshold;
  bool use_pnr = false;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  FixtureConfig fixtures;
  std::size_t count = 200;
  std::vector<std::size_t> level_strides = {32, 16, 8};
  std::size_t mask_stride = 4;
  std::size_t visual_stride = 16;
  DecoderConfig decoder;
  LossWeights loss;
  NscConfig nsc;
  InferenceConfig inference;
};

/// Feature sizes implied by the fixture grid and decoder width.
FeatureDims feature_dims(const RunConfig& cfg);

/// Throws ConfigError on any inconsistent field.
void validate(const RunConfig& cfg);

/// Sections "fixtures", "features", "decoder", "loss", "nsc", "inference"
/// and a top-level "seed"; every field is optional and unknown keys are
/// rejected.
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Explicit seed, else the config's, else DERIS_SEED, else 0.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& cfg);

/// Independent stream of `seed` for one pipeline stage.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

}  // namespace deris
