#include "deris/metrics.hpp"

#include <stdexcept>
#include <string>

#include "deris/annotations.hpp"
#include "deris/tensor.hpp"

namespace deris {

SampleEval eval_from_tallies(std::uint64_t intersection, std::uint64_t union_, bool gt_empty,
                             bool pred_empty) {
  if (intersection > union_) throw std::invalid_argument("intersection exceeds union");
  SampleEval e{intersection, union_, gt_empty, pred_empty, 0.0};
  if (gt_empty && pred_empty) {
    e.iou = 1.0;
  } else if (gt_empty || pred_empty) {
    e.iou = 0.0;
  } else {
    e.iou = static_cast<double>(intersection) / static_cast<double>(union_);
  }
  return e;
}

SampleEval sample_iou(const BinaryMask& pred, const BinaryMask& gt_union) {
  if (pred.height != gt_union.height || pred.width != gt_union.width) {
    throw DimensionError("sample_iou: prediction " + std::to_string(pred.height) + "x" +
                         std::to_string(pred.width) + " vs GT " + std::to_string(gt_union.height) +
                         "x" + std::to_string(gt_union.width));
  }
  std::uint64_t inter = 0, uni = 0, p_area = 0, g_area = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0, g = gt_union.bits[i] != 0;
    inter += p && g;
    uni += p || g;
    p_area += p;
    g_area += g;
  }
  return eval_from_tallies(inter, uni, g_area == 0, p_area == 0);
}

double giou(const std::vector<SampleEval>& evals) {
  if (evals.empty()) throw std::invalid_argument("giou: no samples");
  double sum = 0.0;
  for (const auto& e : evals) sum += e.iou;
  return sum / static_cast<double>(evals.size());
}

double ciou(const std::vector<SampleEval>& evals) {
  std::uint64_t inter = 0, uni = 0;
  for (const auto& e : evals) {
    inter += e.intersection;
    uni += e.union_;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> n_acc(const std::vector<SampleEval>& evals) {
  std::size_t total = 0, hit = 0;
  for (const auto& e : evals) {
    if (!e.gt_empty) continue;
    ++total;
    hit += e.pred_empty;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::optional<double> pr_at(const std::vector<SampleEval>& evals, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("pr_at: threshold must lie in (0, 1)");
  }
  std::size_t total = 0, hit = 0;
  for (const auto& e : evals) {
    if (e.gt_empty) continue;
    ++total;
    hit += e.iou > threshold;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

std::optional<double> miou(const std::vector<SampleEval>& evals) {
  std::size_t total = 0;
  double sum = 0.0;
  for (const auto& e : evals) {
    if (e.gt_empty) continue;
    ++total;
    sum += e.iou;
  }
  if (total == 0) return std::nullopt;
  return sum / static_cast<double>(total);
}

MetricsReport evaluate(const std::vector<SampleEval>& evals, const std::vector<double>& thresholds) {
  MetricsReport r;
  r.samples = evals.size();
  for (const auto& e : evals) {
    r.nonreferent_samples += e.gt_empty;
    r.total_intersection += e.intersection;
    r.total_union += e.union_;
  }
  r.giou = giou(evals);
  r.ciou = ciou(evals);
  r.n_acc = n_acc(evals);
  r.miou = miou(evals);
  for (double t : thresholds) r.pr_at[t] = pr_at(evals, t);
  return r;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               std::size_t height, std::size_t width) {
  std::vector<PredictionRecord> out;
  std::size_t line = 0;
  for (const Json& j : read_json_lines(path)) {
    ++line;
    try {
      PredictionRecord rec;
      rec.image_id = j.at("image_id").get<ImageId>();
      rec.sentence_id = j.at("sentence_id").get<std::size_t>();
      const Json& m = j.at("mask");
      rec.mask = m.is_null() ? BinaryMask(height, width) : decode_rle(rle_from_json(m));
      if (rec.mask.height != height || rec.mask.width != width) {
        throw FormatError("mask size " + std::to_string(rec.mask.height) + "x" +
                          std::to_string(rec.mask.width));
      }
      out.push_back(std::move(rec));
    } catch (const Json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const auto& rec : records) {
    Json j;
    j["image_id"] = rec.image_id;
    j["sentence_id"] = rec.sentence_id;
    j["mask"] = rec.mask.empty() ? Json(nullptr) : rle_to_json(encode_rle(rec.mask));
    lines.push_back(std::move(j));
  }
  write_json_lines(path, lines);
}

std::vector<SampleEval> score_predictions(const std::vector<PredictionRecord>& predictions,
                                          const std::vector<Sample>& annotations,
                                          std::size_t height, std::size_t width) {
  std::vector<const PredictionRecord*> by_sentence(annotations.size(), nullptr);
  for (const auto& rec : predictions) {
    if (rec.sentence_id >= annotations.size()) {
      throw FormatError("prediction for unknown sentence_id " + std::to_string(rec.sentence_id));
    }
    if (by_sentence[rec.sentence_id]) {
      throw FormatError("duplicate prediction for sentence_id " + std::to_string(rec.sentence_id));
    }
    if (rec.image_id != annotations[rec.sentence_id].image_id) {
      throw FormatError("sentence_id " + std::to_string(rec.sentence_id) + " has image_id " +
                        std::to_string(annotations[rec.sentence_id].image_id) + ", prediction says " +
                        std::to_string(rec.image_id));
    }
    by_sentence[rec.sentence_id] = &rec;
  }
  std::vector<SampleEval> evals;
  evals.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!by_sentence[i]) throw FormatError("no prediction for sentence_id " + std::to_string(i));
    evals.push_back(sample_iou(by_sentence[i]->mask, annotations[i].gt_union(height, width)));
  }
  return evals;
}

}  // namespace deris
