#include "deris/config.hpp"

#include <cstdlib>
#include <set>
#include <string>

namespace deris {

namespace {

void reject_unknown(const Json& section, std::string_view name,
                    const std::set<std::string, std::less<>>& allowed) {
  if (!section.is_object()) throw ConfigError("config: \"" + std::string(name) + "\" must be an object");
  for (const auto& [key, value] : section.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("config: unknown key \"" + key + "\" in " + std::string(name));
    }
  }
}

template <typename T>
void read(const Json& section, const char* key, T& out) {
  if (const auto it = section.find(key); it != section.end()) out = it->template get<T>();
}

}  // namespace

FeatureDims feature_dims(const RunConfig& cfg) {
  FeatureDims dims;
  dims.channels = cfg.decoder.width;
  dims.height = cfg.fixtures.height;
  dims.width = cfg.fixtures.width;
  dims.level_strides = cfg.level_strides;
  dims.mask_stride = cfg.mask_stride;
  dims.visual_stride = cfg.visual_stride;
  return dims;
}

void validate(const RunConfig& cfg) {
  try {
    validate(cfg.fixtures);
    validate(cfg.decoder);
    validate(feature_dims(cfg));
    validate(cfg.nsc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.decoder.levels != cfg.level_strides.size()) {
    throw ConfigError("config: decoder levels must equal the number of level strides");
  }
  if (cfg.count < 1) throw ConfigError("config: count must be >= 1");
  if (!(cfg.inference.t_ref > 0.0 && cfg.inference.t_ref < 1.0)) {
    throw ConfigError("config: t_ref must lie in (0, 1)");
  }
  for (double w : {cfg.loss.mask, cfg.loss.referent, cfg.loss.nonref, cfg.loss.aux}) {
    if (!(w >= 0.0)) throw ConfigError("config: loss weights must be non-negative");
  }
}

RunConfig config_from_json(const Json& j) {
  RunConfig cfg;
  try {
    reject_unknown(j, "config",
                   {"seed", "fixtures", "features", "decoder", "loss", "nsc", "inference"});
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (const auto it = j.find("fixtures"); it != j.end()) {
      const Json& s = *it;
      reject_unknown(s, "fixtures",
                     {"height", "width", "count", "max_instances", "vocab_size", "sentence_len",
                      "p_nonreferent", "samples_per_image"});
      read(s, "height", cfg.fixtures.height);
      read(s, "width", cfg.fixtures.width);
      read(s, "count", cfg.count);
      read(s, "max_instances", cfg.fixtures.max_instances);
      read(s, "vocab_size", cfg.fixtures.vocab_size);
      read(s, "sentence_len", cfg.fixtures.sentence_len);
      read(s, "p_nonreferent", cfg.fixtures.p_nonreferent);
      read(s, "samples_per_image", cfg.fixtures.samples_per_image);
    }
    if (const auto it = j.find("features"); it != j.end()) {
      reject_unknown(*it, "features", {"level_strides", "mask_stride", "visual_stride"});
      read(*it, "level_strides", cfg.level_strides);
      read(*it, "mask_stride", cfg.mask_stride);
      read(*it, "visual_stride", cfg.visual_stride);
      cfg.decoder.levels = cfg.level_strides.size();
    }
    if (const auto it = j.find("decoder"); it != j.end()) {
      reject_unknown(*it, "decoder", {"queries", "rounds", "width", "heads", "points"});
      read(*it, "queries", cfg.decoder.queries);
      read(*it, "rounds", cfg.decoder.rounds);
      read(*it, "width", cfg.decoder.width);
      read(*it, "heads", cfg.decoder.heads);
      read(*it, "points", cfg.decoder.points);
    }
    if (const auto it = j.find("loss"); it != j.end()) {
      reject_unknown(*it, "loss", {"mask", "referent", "nonref", "aux"});
      read(*it, "mask", cfg.loss.mask);
      read(*it, "referent", cfg.loss.referent);
      read(*it, "nonref", cfg.loss.nonref);
      read(*it, "aux", cfg.loss.aux);
    }
    if (const auto it = j.find("nsc"); it != j.end()) {
      reject_unknown(*it, "nsc", {"r_c", "n_w", "t_s", "max_attempts"});
      read(*it, "r_c", cfg.nsc.r_c);
      read(*it, "n_w", cfg.nsc.n_w);
      read(*it, "t_s", cfg.nsc.t_s);
      read(*it, "max_attempts", cfg.nsc.max_attempts);
    }
    if (const auto it = j.find("inference"); it != j.end()) {
      reject_unknown(*it, "inference", {"t_ref", "use_pnr"});
      read(*it, "t_ref", cfg.inference.t_ref);
      read(*it, "use_pnr", cfg.inference.use_pnr);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

Json config_to_json(const RunConfig& cfg) {
  Json j;
  if (cfg.seed) j["seed"] = *cfg.seed;
  j["fixtures"] = {{"height", cfg.fixtures.height},
                   {"width", cfg.fixtures.width},
                   {"count", cfg.count},
                   {"max_instances", cfg.fixtures.max_instances},
                   {"vocab_size", cfg.fixtures.vocab_size},
                   {"sentence_len", cfg.fixtures.sentence_len},
                   {"p_nonreferent", cfg.fixtures.p_nonreferent},
                   {"samples_per_image", cfg.fixtures.samples_per_image}};
  j["features"] = {{"level_strides", cfg.level_strides},
                   {"mask_stride", cfg.mask_stride},
                   {"visual_stride", cfg.visual_stride}};
  j["decoder"] = {{"queries", cfg.decoder.queries},
                  {"rounds", cfg.decoder.rounds},
                  {"width", cfg.decoder.width},
                  {"heads", cfg.decoder.heads},
                  {"points", cfg.decoder.points}};
  j["loss"] = {{"mask", cfg.loss.mask},
               {"referent", cfg.loss.referent},
               {"nonref", cfg.loss.nonref},
               {"aux", cfg.loss.aux}};
  j["nsc"] = {{"r_c", cfg.nsc.r_c},
              {"n_w", cfg.nsc.n_w},
              {"t_s", cfg.nsc.t_s},
              {"max_attempts", cfg.nsc.max_attempts}};
  j["inference"] = {{"t_ref", cfg.inference.t_ref}, {"use_pnr", cfg.inference.use_pnr}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: " + path.string() + " is not valid JSON");
  return config_from_json(j);
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& cfg) {
  if (flag) return *flag;
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("DERIS_SEED"); env && *env) {
    try {
      if (*env < '0' || *env > '9') throw ConfigError("");
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used, 10);
      if (used == std::string_view(env).size()) return v;
    } catch (const std::exception&) {  // reported below
    }
    throw ConfigError(std::string("DERIS_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  return derive_seed(seed, fnv1a(stage));
}

}  // namespace deris
