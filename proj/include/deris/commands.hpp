#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "deris/annotations.hpp"
#include "deris/config.hpp"
#include "deris/verify.hpp"

namespace deris {

/// A postcondition check over produced data failed.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Writes config.count fixture samples; the report carries dataset statistics.
Json cmd_gen(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out);

/// Non-referent conversion of an annotation file. Unconverted lines are copied
/// byte for byte. Throws AuditError if any converted line breaks a filter.
Json cmd_augment(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& in,
                 const std::filesystem::path& out);

struct ForwardPaths {
  std::filesystem::path annotations;
  std::filesystem::path predictions;
  std::optional<std::filesystem::path> dump;
};

/// Runs the decoder on pseudo-features of every annotation and writes one
/// prediction per line plus an optional per-round dump. With `gt_oracle` the
/// predictions are the GT unions instead, which exercises the file plumbing.
Json cmd_forward(const RunConfig& cfg, std::uint64_t seed, const ForwardPaths& paths,
                 bool gt_oracle = false);

Json cmd_eval(const RunConfig& cfg, const std::filesystem::path& predictions,
              const std::filesystem::path& annotations);

/// Runs the oracle suites; the report's "passed" decides the exit code.
VerifyReport cmd_verify(const VerifyOptions& options);

/// Raw '\n'-separated lines of a text file, without the terminators. A final
/// line without a terminator is kept.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace deris
