#include "deris/annotations.hpp"

#include <fstream>
#include <sstream>

namespace deris {

Json rle_to_json(const RleMask& rle) {
  return Json{{"height", rle.height}, {"width", rle.width}, {"runs", rle.runs}};
}

RleMask rle_from_json(const Json& j) {
  try {
    RleMask rle;
    rle.height = j.at("height").get<std::size_t>();
    rle.width = j.at("width").get<std::size_t>();
    rle.runs = j.at("runs").get<std::vector<std::uint32_t>>();
    return rle;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad RLE mask: ") + e.what());
  }
}

Json sample_to_json(const Sample& sample) {
  Json masks = Json::array();
  for (const auto& m : sample.gt_masks) masks.push_back(rle_to_json(encode_rle(m)));
  Json j{{"image_id", sample.image_id},
         {"sentence", sample.sentence},
         {"masks", std::move(masks)},
         {"nonreferent", sample.is_nonreferent}};
  if (sample.source_image_id) j["source_image_id"] = *sample.source_image_id;
  return j;
}

Sample sample_from_json(const Json& j) {
  Sample sample;
  try {
    sample.image_id = j.at("image_id").get<ImageId>();
    const Json& sentence = j.at("sentence");
    if (sentence.is_array()) {
      for (std::size_t i = 0; i < sentence.size(); ++i) {
        if (i > 0) sample.sentence += ' ';
        sample.sentence += std::to_string(sentence[i].get<std::int64_t>());
      }
    } else {
      sample.sentence = sentence.get<std::string>();
    }
    for (const auto& m : j.at("masks")) sample.gt_masks.push_back(decode_rle(rle_from_json(m)));
    sample.is_nonreferent = j.at("nonreferent").get<bool>();
    if (j.contains("source_image_id")) sample.source_image_id = j["source_image_id"].get<ImageId>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad annotation: ") + e.what());
  }
  try {
    validate_sample(sample);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return sample;
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Json> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return lines;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& lines) {
  std::string text;
  for (const auto& j : lines) {
    text += j.dump();
    text += '\n';
  }
  write_text(path, text);
}

std::vector<Sample> read_annotations(const std::filesystem::path& path) {
  std::vector<Sample> samples;
  for (const auto& j : read_json_lines(path)) samples.push_back(sample_from_json(j));
  return samples;
}

void write_annotations(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::vector<Json> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) lines.push_back(sample_to_json(s));
  write_json_lines(path, lines);
}

}  // namespace deris
