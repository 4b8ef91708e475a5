#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deris/fixtures.hpp"
#include "deris/rng.hpp"
#include "deris/text.hpp"

namespace deris {

using Words = std::vector<std::string>;

/// |A n B| / |A u B| over word sets; 0 when both are empty.
double jaccard(const Words& a, const Words& b);

/// Cosine of term-frequency vectors; 0 when either sentence has no words.
double cosine_tf(const Words& a, const Words& b);

/// Mean of jaccard() and cosine_tf() on tokenized sentences.
double similarity(const Words& a, const Words& b);
double similarity(std::string_view a, std::string_view b);

struct PoolEntry {
  ImageId image_id = 0;
  std::string sentence;
};

/// Replacement sentences available to the conversion, indexed by image.
class SentencePool {
 public:
  /// Throws std::invalid_argument on an entry without words.
  explicit SentencePool(std::vector<PoolEntry> entries);
  /// Every sample's sentence that tokenizes to at least one word.
  static SentencePool from_samples(const std::vector<Sample>& samples);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const PoolEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<std::size_t>& indices_for(ImageId image_id) const;
  bool contains(ImageId image_id, std::string_view sentence) const;

 private:
  std::vector<PoolEntry> entries_;
  std::map<ImageId, std::vector<std::size_t>> by_image_;
};

struct NscConfig {
  double r_c = 0.15;
  std::size_t n_w = 2;
  double t_s = 0.6;
  std::size_t max_attempts = 50;
};

void validate(const NscConfig& cfg);

/// A candidate passes when it comes from another image, has more than n_w
/// words and is less than t_s similar to the sample's sentence.
bool passes_filters(const PoolEntry& candidate, const Sample& sample, const NscConfig& cfg);

struct ConversionResult {
  std::vector<Sample> samples;
  std::vector<bool> converted;
  std::size_t referent_count = 0;
  std::size_t selected_count = 0;   // referent samples that drew a conversion
  std::size_t converted_count = 0;
  std::size_t exhausted_count = 0;  // selected but no candidate passed
};

/// Each referent sample i draws from rng.child(i): with probability r_c it
/// samples pool entries uniformly, up to max_attempts, and the first entry
/// passing the filters replaces its sentence, clears its masks and marks it
/// non-referent. Non-referent inputs are never touched. Throws
/// std::invalid_argument on an empty pool.
ConversionResult convert_dataset(const std::vector<Sample>& samples, const SentencePool& pool,
                                 const NscConfig& cfg, const Rng& rng);

struct AuditViolation {
  std::size_t index = 0;
  std::string reason;
};

/// Checks every sample that differs between `original` and `augmented`
/// against the conversion postconditions.
std::vector<AuditViolation> audit_conversions(const std::vector<Sample>& original,
                                              const std::vector<Sample>& augmented,
                                              const SentencePool& pool, const NscConfig& cfg);

}  // namespace deris
