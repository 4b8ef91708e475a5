#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "deris/fixtures.hpp"
#include "deris/mask.hpp"

namespace deris {

struct SampleEval {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  bool gt_empty = true;
  bool pred_empty = true;
  double iou = 1.0;
  friend bool operator==(const SampleEval&, const SampleEval&) = default;
};

/// Empty-empty scores 1, exactly one empty scores 0, otherwise I / U.
/// Throws DimensionError on a size mismatch.
SampleEval sample_iou(const BinaryMask& pred, const BinaryMask& gt_union);

/// Builds an eval from raw tallies, applying the same iou rule.
SampleEval eval_from_tallies(std::uint64_t intersection, std::uint64_t union_, bool gt_empty,
                             bool pred_empty);

/// Mean per-sample iou, empty-target samples included. Throws on no samples.
double giou(const std::vector<SampleEval>& evals);
/// Summed intersections over summed unions; 1 when both sums are 0.
double ciou(const std::vector<SampleEval>& evals);
/// Fraction of empty-GT samples predicted empty; nullopt without any.
std::optional<double> n_acc(const std::vector<SampleEval>& evals);
/// Fraction of nonempty-GT samples with iou strictly above `threshold`;
/// nullopt without any. Threshold must lie in (0, 1).
std::optional<double> pr_at(const std::vector<SampleEval>& evals, double threshold);
/// Mean iou over nonempty-GT samples; nullopt without any.
std::optional<double> miou(const std::vector<SampleEval>& evals);

inline const std::vector<double> kDefaultPrThresholds = {0.5, 0.6, 0.7, 0.8, 0.9};

struct MetricsReport {
  std::size_t samples = 0;
  std::size_t nonreferent_samples = 0;
  double giou = 0.0;
  double ciou = 0.0;
  std::uint64_t total_intersection = 0;
  std::uint64_t total_union = 0;
  std::optional<double> n_acc;
  std::optional<double> miou;
  std::map<double, std::optional<double>> pr_at;
};

MetricsReport evaluate(const std::vector<SampleEval>& evals,
                       const std::vector<double>& thresholds = kDefaultPrThresholds);

struct PredictionRecord {
  ImageId image_id = 0;
  std::size_t sentence_id = 0;
  BinaryMask mask;  // all-zero when the file holds null
};

/// One JSON line per prediction: {"image_id", "sentence_id", "mask"} with an
/// RLE mask or null for an empty prediction of the given size.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               std::size_t height, std::size_t width);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRecord>& records);

/// Pairs every annotation (by line index) with exactly one prediction.
/// Throws FormatError on missing, duplicate or mismatched predictions.
std::vector<SampleEval> score_predictions(const std::vector<PredictionRecord>& predictions,
                                          const std::vector<Sample>& annotations,
                                          std::size_t height, std::size_t width);

}  // namespace deris
