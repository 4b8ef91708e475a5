#include "deris/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace deris {

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

RleMask encode_rle(const BinaryMask& mask) {
  RleMask rle{mask.height, mask.width, {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t b : mask.bits) {
    if (b > 1) throw FormatError("encode_rle: mask value " + std::to_string(b) + " is not binary");
    if (b != current) {
      rle.runs.push_back(run);
      current = b;
      run = 0;
    }
    ++run;
  }
  rle.runs.push_back(run);
  return rle;
}

BinaryMask decode_rle(const RleMask& rle) {
  const std::uint64_t total =
      std::accumulate(rle.runs.begin(), rle.runs.end(), std::uint64_t{0});
  if (total != static_cast<std::uint64_t>(rle.height) * rle.width) {
    throw FormatError("decode_rle: runs sum to " + std::to_string(total) + ", expected " +
                      std::to_string(rle.height * rle.width));
  }
  BinaryMask mask(rle.height, rle.width);
  std::size_t pos = 0;
  for (std::size_t r = 0; r < rle.runs.size(); ++r) {
    if (r > 0 && rle.runs[r] == 0) {
      throw FormatError("decode_rle: run " + std::to_string(r) + " is zero");
    }
    const std::uint8_t value = r % 2 == 0 ? 0 : 1;
    std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), rle.runs[r], value);
    pos += rle.runs[r];
  }
  return mask;
}

BinaryMask mask_union(const std::vector<BinaryMask>& masks, std::size_t height,
                      std::size_t width) {
  BinaryMask out(height, width);
  for (const auto& m : masks) {
    if (m.height != height || m.width != width) {
      throw std::invalid_argument("mask_union: mask size mismatch");
    }
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= m.bits[i];
  }
  return out;
}

BinaryMask downsample_majority(const BinaryMask& mask, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || mask.height % height != 0 || mask.width % width != 0) {
    throw std::invalid_argument("downsample_majority: " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " is not a multiple of " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t bh = mask.height / height, bw = mask.width / width;
  BinaryMask out(height, width);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      std::size_t on = 0;
      for (std::size_t y = i * bh; y < (i + 1) * bh; ++y) {
        for (std::size_t x = j * bw; x < (j + 1) * bw; ++x) on += mask.at(y, x);
      }
      out.at(i, j) = 2 * on >= bh * bw ? 1 : 0;
    }
  }
  return out;
}

}  // namespace deris
