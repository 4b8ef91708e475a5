#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace deris {

/// Raised on malformed serialized data (RLE runs, annotation lines).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major binary mask; every cell is 0 or 1.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), bits(h * w, 0) {}

  std::uint8_t& at(std::size_t i, std::size_t j) { return bits[i * width + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return bits[i * width + j]; }
  std::size_t area() const;
  bool empty() const { return area() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Alternating run lengths of 0s and 1s in row-major order, starting with
/// the count of leading zeros. Only the first run may be zero.
struct RleMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask encode_rle(const BinaryMask& mask);
/// Throws FormatError if runs do not sum to height * width or a run after
/// the first is zero.
BinaryMask decode_rle(const RleMask& rle);

/// Pixelwise OR. An empty list yields an all-zero mask of the given size.
BinaryMask mask_union(const std::vector<BinaryMask>& masks, std::size_t height,
                      std::size_t width);

/// Block downsampling: an output cell is on iff at least half of the input
/// block it covers is on. Input extents must be multiples of the output's.
BinaryMask downsample_majority(const BinaryMask& mask, std::size_t height, std::size_t width);

}  // namespace deris
