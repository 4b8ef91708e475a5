#include "deris/commands.hpp"

#include <cstdio>
#include <set>
#include <string>

#include "deris/decoder.hpp"
#include "deris/metrics.hpp"
#include "deris/ops.hpp"

namespace deris {

namespace {

/// Map key for a Pr@X threshold, e.g. "0.9".
std::string threshold_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json mask_json(const BinaryMask& m) {
  return m.empty() ? Json(nullptr) : rle_to_json(encode_rle(m));
}

Sample parse_sample_line(const std::string& line, const std::filesystem::path& path,
                         std::size_t number) {
  try {
    return sample_from_json(Json::parse(line));
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(number) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ":" + std::to_string(number) + ": " + e.what());
  }
}

void check_sample_size(const Sample& s, const RunConfig& cfg, std::size_t index) {
  for (const auto& m : s.gt_masks) {
    if (m.height != cfg.fixtures.height || m.width != cfg.fixtures.width) {
      throw FormatError("sample " + std::to_string(index) + " has a " + std::to_string(m.height) +
                        "x" + std::to_string(m.width) + " mask; the configured grid is " +
                        std::to_string(cfg.fixtures.height) + "x" +
                        std::to_string(cfg.fixtures.width));
    }
  }
}

}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (begin < text.size()) {
    const std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) {
      lines.push_back(text.substr(begin));
      break;
    }
    lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return lines;
}

Json cmd_gen(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out) {
  validate(cfg);
  const std::vector<Sample> samples = gen_dataset(seed, cfg.fixtures, cfg.count);
  write_annotations(out, samples);

  std::size_t nonref = 0, instances = 0;
  std::set<ImageId> images;
  for (const auto& s : samples) {
    nonref += s.is_nonreferent;
    instances += s.gt_masks.size();
    images.insert(s.image_id);
  }
  return {{"command", "gen"},
          {"seed", seed},
          {"samples", samples.size()},
          {"images", images.size()},
          {"instances", instances},
          {"nonreferent", nonref},
          {"nonreferent_fraction",
           static_cast<double>(nonref) / static_cast<double>(samples.size())},
          {"height", cfg.fixtures.height},
          {"width", cfg.fixtures.width}};
}

Json cmd_augment(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& in,
                 const std::filesystem::path& out) {
  validate(cfg);
  const std::vector<std::string> lines = read_lines(in);
  std::vector<Sample> samples;
  std::vector<std::size_t> line_of_sample;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    samples.push_back(parse_sample_line(lines[i], in, i + 1));
    line_of_sample.push_back(i);
  }

  const SentencePool pool = SentencePool::from_samples(samples);
  if (pool.empty()) throw FormatError(in.string() + ": no sentences to draw replacements from");
  const ConversionResult result =
      convert_dataset(samples, pool, cfg.nsc, Rng(stage_seed(seed, "nsc")));
  const std::vector<AuditViolation> violations =
      audit_conversions(samples, result.samples, pool, cfg.nsc);

  std::string text;
  std::size_t next = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (next < line_of_sample.size() && line_of_sample[next] == i && result.converted[next]) {
      text += sample_to_json(result.samples[next]).dump();
    } else {
      text += lines[i];
    }
    if (next < line_of_sample.size() && line_of_sample[next] == i) ++next;
    text += '\n';
  }
  write_text(out, text);

  Json audit = Json::array();
  for (const auto& v : violations) audit.push_back({{"index", v.index}, {"reason", v.reason}});
  const double rate = result.referent_count == 0
                          ? 0.0
                          : static_cast<double>(result.converted_count) /
                                static_cast<double>(result.referent_count);
  Json report = {{"command", "augment"},
                 {"seed", seed},
                 {"samples", samples.size()},
                 {"referent", result.referent_count},
                 {"selected", result.selected_count},
                 {"converted", result.converted_count},
                 {"exhausted", result.exhausted_count},
                 {"conversion_rate", rate},
                 {"violations", violations.size()},
                 {"audit", audit},
                 {"nsc", {{"r_c", cfg.nsc.r_c},
                          {"n_w", cfg.nsc.n_w},
                          {"t_s", cfg.nsc.t_s},
                          {"max_attempts", cfg.nsc.max_attempts}}}};
  if (!violations.empty()) {
    throw AuditError("augment audit found " + std::to_string(violations.size()) +
                     " violations: " + report.dump());
  }
  return report;
}

Json cmd_forward(const RunConfig& cfg, std::uint64_t seed, const ForwardPaths& paths,
                 bool gt_oracle) {
  validate(cfg);
  const std::vector<Sample> samples = read_annotations(paths.annotations);
  const FeatureDims dims = feature_dims(cfg);
  const std::size_t h = cfg.fixtures.height, w = cfg.fixtures.width;
  Rng weight_rng(stage_seed(seed, "decoder"));
  const DecoderParams params = DecoderParams::init(cfg.decoder, weight_rng);
  const std::uint64_t feature_seed = stage_seed(seed, "features");

  std::vector<PredictionRecord> records;
  Json dump_samples = Json::array();
  std::size_t empty_predictions = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& sample = samples[i];
    check_sample_size(sample, cfg, i);
    PredictionRecord rec{sample.image_id, i, BinaryMask(h, w)};
    if (gt_oracle) {
      rec.mask = sample.gt_union(h, w);
    } else {
      const FeatureBundle features = pseudo_features(sample, dims, feature_seed);
      const std::vector<RoundOutput> rounds = loopback_forward(features, params);
      const RoundOutput& last = rounds.back();
      const double p_nr = existence_probability(rounds);
      const Tensor logits = upsample_mask_logits(last.m_p, h, w);
      const Prediction pred =
          predict(last.s_r, logits, p_nr, cfg.inference.t_ref, cfg.inference.use_pnr);
      rec.mask = pred.mask;

      const LossReport loss = compute_loss_report(rounds, sample, cfg.loss);
      Json per_round = Json::array();
      for (const auto& round : rounds) {
        std::vector<double> probs(round.s_r.size());
        for (std::size_t q = 0; q < probs.size(); ++q) probs[q] = sigmoid(round.s_r[q]);
        per_round.push_back({{"s_r", probs}});
      }
      Json loss_rounds = Json::array();
      for (const auto& t : loss.rounds) {
        loss_rounds.push_back(
            {{"l_mask", t.l_mask}, {"l_r", t.l_r}, {"l_nr", t.l_nr}, {"total", t.total}});
      }
      dump_samples.push_back({{"image_id", sample.image_id},
                              {"sentence_id", i},
                              {"rounds", per_round},
                              {"nonref_logit", *last.nonref_logit},
                              {"p_nr", p_nr},
                              {"scores", pred.scores},
                              {"selected", pred.selected},
                              {"mask", mask_json(pred.mask)},
                              {"loss", {{"per_round", loss_rounds}, {"total", loss.total}}}});
    }
    empty_predictions += rec.mask.empty();
    records.push_back(std::move(rec));
  }
  write_predictions(paths.predictions, records);
  if (paths.dump) {
    const Json dump = {{"config", config_to_json(cfg)},
                       {"seed", seed},
                       {"rounds", cfg.decoder.rounds},
                       {"gt_oracle", gt_oracle},
                       {"samples", dump_samples}};
    write_text(*paths.dump, dump.dump() + "\n");
  }
  return {{"command", "forward"},
          {"seed", seed},
          {"samples", samples.size()},
          {"rounds", cfg.decoder.rounds},
          {"queries", cfg.decoder.queries},
          {"use_pnr", cfg.inference.use_pnr},
          {"t_ref", cfg.inference.t_ref},
          {"gt_oracle", gt_oracle},
          {"empty_predictions", empty_predictions}};
}

Json cmd_eval(const RunConfig& cfg, const std::filesystem::path& predictions,
              const std::filesystem::path& annotations) {
  const std::size_t h = cfg.fixtures.height, w = cfg.fixtures.width;
  const std::vector<Sample> samples = read_annotations(annotations);
  for (std::size_t i = 0; i < samples.size(); ++i) check_sample_size(samples[i], cfg, i);
  const std::vector<SampleEval> evals =
      score_predictions(read_predictions(predictions, h, w), samples, h, w);
  if (evals.empty()) throw FormatError(annotations.string() + ": no samples to evaluate");
  const MetricsReport r = evaluate(evals);

  Json pr = Json::object();
  for (const auto& [t, v] : r.pr_at) pr[threshold_key(t)] = optional_json(v);
  return {{"command", "eval"},
          {"samples", r.samples},
          {"nonreferent_samples", r.nonreferent_samples},
          {"giou", r.giou},
          {"ciou", r.ciou},
          {"ciou_intersection", r.total_intersection},
          {"ciou_union", r.total_union},
          {"n_acc", optional_json(r.n_acc)},
          {"miou", optional_json(r.miou)},
          {"pr_at", pr}};
}

VerifyReport cmd_verify(const VerifyOptions& options) {
  VerifyReport report = run_verify(options);
  report.json["command"] = "verify";
  return report;
}

}  // namespace deris
