#include "deris/nsc.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace deris {

double jaccard(const Words& a, const Words& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t common = 0;
  for (const auto& w : sa) common += sb.count(w);
  const std::size_t total = sa.size() + sb.size() - common;
  return total == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(total);
}

double cosine_tf(const Words& a, const Words& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string, long long> ta, tb;
  for (const auto& w : a) ++ta[w];
  for (const auto& w : b) ++tb[w];
  long long dot = 0, na = 0, nb = 0;
  for (const auto& [w, c] : ta) {
    na += c * c;
    if (auto it = tb.find(w); it != tb.end()) dot += c * it->second;
  }
  for (const auto& [w, c] : tb) nb += c * c;
  // sqrt of the integer product keeps self-similarity exactly 1.
  const double cos = static_cast<double>(dot) /
                     std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
  return std::min(cos, 1.0);
}

double similarity(const Words& a, const Words& b) { return (jaccard(a, b) + cosine_tf(a, b)) / 2.0; }

double similarity(std::string_view a, std::string_view b) {
  return similarity(tokenize(a), tokenize(b));
}

SentencePool::SentencePool(std::vector<PoolEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (tokenize(entries_[i].sentence).empty()) {
      throw std::invalid_argument("sentence pool entry " + std::to_string(i) + " has no words");
    }
    by_image_[entries_[i].image_id].push_back(i);
  }
}

SentencePool SentencePool::from_samples(const std::vector<Sample>& samples) {
  std::vector<PoolEntry> entries;
  for (const auto& s : samples) {
    if (!tokenize(s.sentence).empty()) entries.push_back({s.image_id, s.sentence});
  }
  return SentencePool(std::move(entries));
}

const std::vector<std::size_t>& SentencePool::indices_for(ImageId image_id) const {
  static const std::vector<std::size_t> none;
  const auto it = by_image_.find(image_id);
  return it == by_image_.end() ? none : it->second;
}

bool SentencePool::contains(ImageId image_id, std::string_view sentence) const {
  return std::ranges::any_of(indices_for(image_id),
                             [&](std::size_t i) { return entries_[i].sentence == sentence; });
}

void validate(const NscConfig& cfg) {
  if (!(cfg.r_c >= 0.0 && cfg.r_c <= 1.0)) throw std::invalid_argument("r_c must lie in [0, 1]");
  if (cfg.n_w < 1) throw std::invalid_argument("n_w must be >= 1");
  if (!(cfg.t_s >= 0.0 && cfg.t_s <= 1.0)) throw std::invalid_argument("t_s must lie in [0, 1]");
  if (cfg.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

bool passes_filters(const PoolEntry& candidate, const Sample& sample, const NscConfig& cfg) {
  if (candidate.image_id == sample.image_id) return false;
  const Words words = tokenize(candidate.sentence);
  if (words.size() <= cfg.n_w) return false;
  return similarity(words, tokenize(sample.sentence)) < cfg.t_s;
}

ConversionResult convert_dataset(const std::vector<Sample>& samples, const SentencePool& pool,
                                 const NscConfig& cfg, const Rng& rng) {
  validate(cfg);
  if (pool.empty()) throw std::invalid_argument("convert_dataset: sentence pool is empty");

  ConversionResult result;
  result.samples = samples;
  result.converted.assign(samples.size(), false);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& sample = samples[i];
    if (sample.is_nonreferent) continue;
    ++result.referent_count;
    Rng local = rng.child(i);
    if (!local.bernoulli(cfg.r_c)) continue;
    ++result.selected_count;

    bool done = false;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      const PoolEntry& candidate = pool[local.below(pool.size())];
      if (!passes_filters(candidate, sample, cfg)) continue;
      Sample& out = result.samples[i];
      out.sentence = candidate.sentence;
      out.gt_masks.clear();
      out.is_nonreferent = true;
      out.source_image_id = candidate.image_id;
      result.converted[i] = true;
      ++result.converted_count;
      done = true;
    }
    if (!done) ++result.exhausted_count;
  }
  return result;
}

std::vector<AuditViolation> audit_conversions(const std::vector<Sample>& original,
                                              const std::vector<Sample>& augmented,
                                              const SentencePool& pool, const NscConfig& cfg) {
  std::vector<AuditViolation> violations;
  if (original.size() != augmented.size()) {
    violations.push_back({0, "sample count changed from " + std::to_string(original.size()) +
                                 " to " + std::to_string(augmented.size())});
    return violations;
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    const Sample& before = original[i];
    const Sample& after = augmented[i];
    if (before == after) continue;
    const auto flag = [&](std::string reason) { violations.push_back({i, std::move(reason)}); };
    if (before.is_nonreferent) flag("non-referent input was modified");
    if (after.image_id != before.image_id) flag("image id changed");
    if (!after.is_nonreferent || !after.gt_masks.empty()) flag("converted sample still has GT");
    if (!after.source_image_id) {
      flag("converted sample lacks source_image_id");
      continue;
    }
    if (*after.source_image_id == after.image_id) flag("replacement sentence from the same image");
    if (!pool.contains(*after.source_image_id, after.sentence)) {
      flag("replacement sentence not found in the pool");
    }
    const Words words = tokenize(after.sentence);
    if (words.size() <= cfg.n_w) flag("replacement sentence too short");
    if (!(similarity(words, tokenize(before.sentence)) < cfg.t_s)) {
      flag("replacement sentence too similar");
    }
  }
  return violations;
}

}  // namespace deris
