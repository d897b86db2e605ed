#include "pilar/detection.h"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

bool IsFixtureId(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

FrameDetections ParseFrame(const nlohmann::json& f, const Vocabulary& vocab) {
  FrameDetections frame;
  frame.frame_id = f.at("frame_id").get<std::string>();
  for (const auto& d : f.at("detections")) {
    DetectedIngredient det;
    det.raw_label = d.at("label").get<std::string>();
    NameLookup lookup = NormalizeIngredientName(det.raw_label, vocab);
    det.label = lookup.token;
    det.known = lookup.known;
    det.confidence = d.at("confidence").get<double>();
    const auto& b = d.at("bbox");
    if (!b.is_array() || b.size() != 4) {
      throw Error(ErrorCode::kDataFile, "bbox must be [x, y, w, h]");
    }
    det.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      throw Error(ErrorCode::kDataFile,
                  fmt::format("confidence {} outside [0,1] in frame {}", det.confidence,
                              frame.frame_id));
    }
    const auto& bb = det.bbox;
    if (!(bb.w > 0 && bb.h > 0 && bb.x >= 0 && bb.y >= 0 && bb.x + bb.w <= 1.0 &&
          bb.y + bb.h <= 1.0)) {
      throw Error(ErrorCode::kDataFile,
                  fmt::format("bbox outside the unit square in frame {}", frame.frame_id));
    }
    frame.detections.push_back(std::move(det));
  }
  return frame;
}

}  // namespace

std::vector<FrameDetections> ParseFrames(const nlohmann::json& j, const Vocabulary& vocab) {
  std::vector<FrameDetections> frames;
  try {
    if (j.is_array()) {
      for (const auto& f : j) frames.push_back(ParseFrame(f, vocab));
    } else {
      frames.push_back(ParseFrame(j, vocab));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("malformed detection payload: {}", e.what()));
  }
  std::set<std::string> ids;
  for (const auto& f : frames) {
    if (!ids.insert(f.frame_id).second) {
      throw Error(ErrorCode::kDataFile, fmt::format("duplicate frame_id {}", f.frame_id));
    }
  }
  return frames;
}

void to_json(nlohmann::json& j, const DetectedIngredient& d) {
  j = {{"label", d.label},
       {"raw_label", d.raw_label},
       {"confidence", d.confidence},
       {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
       {"known", d.known}};
}

nlohmann::json FramesToJson(std::span<const FrameDetections> frames) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : frames) {
    out.push_back({{"frame_id", f.frame_id}, {"detections", f.detections}});
  }
  return out;
}

std::vector<DetectedIngredient> FilterByThreshold(std::span<const DetectedIngredient> detections,
                                                  double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("threshold {} outside [0,1]", threshold));
  }
  std::vector<DetectedIngredient> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [&](const DetectedIngredient& d) { return d.confidence >= threshold; });
  return out;
}

FixtureDetector::FixtureDetector(std::filesystem::path dir,
                                 std::shared_ptr<const Vocabulary> vocab)
    : dir_(std::move(dir)), vocab_(std::move(vocab)) {}

std::vector<FrameDetections> FixtureDetector::Load(std::string_view fixture_id) const {
  if (!IsFixtureId(fixture_id)) {
    throw Error(ErrorCode::kFixtureNotFound, fmt::format("invalid fixture id '{}'", fixture_id),
                {{"fixture_id", fixture_id}});
  }
  auto path = dir_ / (std::string(fixture_id) + ".json");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kFixtureNotFound, fmt::format("fixture {} not found", fixture_id),
                {{"fixture_id", fixture_id}});
  }
  return ParseFrames(ReadJsonFile(path), *vocab_);
}

std::vector<DetectedIngredient> FixtureDetector::Detect(const DetectionFrame& frame,
                                                        double threshold) {
  auto frames = Load(frame.source);
  if (frames.empty()) return {};
  if (frame.frame_id.empty()) return FilterByThreshold(frames.front().detections, threshold);
  for (const auto& f : frames) {
    if (f.frame_id == frame.frame_id) return FilterByThreshold(f.detections, threshold);
  }
  throw Error(ErrorCode::kFixtureNotFound,
              fmt::format("frame {} not in fixture {}", frame.frame_id, frame.source),
              {{"fixture_id", frame.source}, {"frame_id", frame.frame_id}});
}

std::vector<FrameDetections> FixtureDetector::DetectAll(std::string_view fixture_id,
                                                        double threshold) const {
  auto frames = Load(fixture_id);
  for (auto& f : frames) f.detections = FilterByThreshold(f.detections, threshold);
  return frames;
}

std::vector<std::string> FixtureDetector::ListFixtures() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::set<std::string> Consolidate(std::span<const FrameDetections> frames, std::size_t window,
                                  double threshold) {
  if (window == 0) throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  const std::size_t used = std::min(window, frames.size());
  const std::size_t quorum = (used + 1) / 2;
  std::map<std::string, std::size_t> seen_in;
  for (std::size_t i = frames.size() - used; i < frames.size(); ++i) {
    std::set<std::string> in_frame;
    for (const auto& d : frames[i].detections) {
      if (d.confidence >= threshold) in_frame.insert(d.label);
    }
    for (const auto& label : in_frame) ++seen_in[label];
  }
  std::set<std::string> out;
  for (const auto& [label, count] : seen_in) {
    if (count >= quorum) out.insert(label);
  }
  return out;
}

}  // namespace pilar
