#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "deris/fixtures.hpp"
#include "deris/mask.hpp"

namespace deris {

using Json = nlohmann::json;

Json rle_to_json(const RleMask& rle);
RleMask rle_from_json(const Json& j);

/// {"image_id": int, "sentence": str, "masks": [rle...], "nonreferent": bool}
/// plus "source_image_id" on converted samples. "sentence" may also be read
/// as an array of integer token ids, which become space-separated words.
Json sample_to_json(const Sample& sample);
Sample sample_from_json(const Json& j);

/// JSON Lines: one compact object per line, '\n' terminated.
std::vector<Sample> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<Sample>& samples);

std::vector<Json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& lines);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace deris
