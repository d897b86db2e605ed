#ifndef PILAR_DETECTION_H_
#define PILAR_DETECTION_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pilar/domain.h"

namespace pilar {

// Normalized image coordinates, origin top-left.
struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;

  bool operator==(const BoundingBox&) const = default;
};

struct DetectionFrame {
  std::string frame_id;
  // Fixture id, or an image path for the remote detector.
  std::string source;
  std::int64_t timestamp_ms = 0;
};

struct DetectedIngredient {
  // Ingredient id when `known`, else the canonical token of the raw label.
  std::string label;
  std::string raw_label;
  double confidence = 0;
  BoundingBox bbox;
  bool known = false;

  bool operator==(const DetectedIngredient&) const = default;
};

struct FrameDetections {
  std::string frame_id;
  std::vector<DetectedIngredient> detections;

  bool operator==(const FrameDetections&) const = default;
};

inline constexpr double kDefaultDetectionThreshold = 0.5;
inline constexpr std::size_t kDefaultConsolidationWindow = 3;

class Detector {
 public:
  virtual ~Detector() = default;
  // Every returned detection has confidence >= threshold.
  virtual std::vector<DetectedIngredient> Detect(const DetectionFrame& frame,
                                                 double threshold) = 0;
};

// Parses the shared fixture/remote wire shape: either one frame object or an
// array of frames, each `{frame_id, detections: [{label, confidence, bbox}]}`.
// Labels are normalized through the vocabulary; unknown labels are kept.
std::vector<FrameDetections> ParseFrames(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json FramesToJson(std::span<const FrameDetections> frames);
void to_json(nlohmann::json& j, const DetectedIngredient& d);

// Reads `<dir>/<fixture_id>.json`. Pure given the file contents.
class FixtureDetector : public Detector {
 public:
  FixtureDetector(std::filesystem::path dir, std::shared_ptr<const Vocabulary> vocab);

  // `frame.source` is the fixture id; an empty `frame.frame_id` selects the
  // fixture's first frame.
  std::vector<DetectedIngredient> Detect(const DetectionFrame& frame, double threshold) override;

  // All frames of a fixture, each filtered by threshold.
  std::vector<FrameDetections> DetectAll(std::string_view fixture_id, double threshold) const;

  std::vector<std::string> ListFixtures() const;

 private:
  std::vector<FrameDetections> Load(std::string_view fixture_id) const;

  std::filesystem::path dir_;
  std::shared_ptr<const Vocabulary> vocab_;
};

// Client for a live model server: POST <endpoint>/detect with the image bytes,
// JSON response in the fixture shape. Safe for concurrent use.
class RemoteDetector : public Detector {
 public:
  RemoteDetector(std::string endpoint, std::shared_ptr<const Vocabulary> vocab,
                 std::chrono::milliseconds timeout = std::chrono::seconds(10));

  // Reads the image at `frame.source` and forwards it.
  std::vector<DetectedIngredient> Detect(const DetectionFrame& frame, double threshold) override;

  std::vector<DetectedIngredient> DetectImage(std::string_view image_bytes,
                                              const DetectionFrame& frame, double threshold);

 private:
  std::string endpoint_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::chrono::milliseconds timeout_;
};

std::vector<DetectedIngredient> FilterByThreshold(std::span<const DetectedIngredient> detections,
                                                  double threshold);

// Majority vote over the last `window` frames: a label survives when it is
// seen at or above `threshold` in at least ceil(w/2) of them, where w is
// min(window, frames.size()).
std::set<std::string> Consolidate(std::span<const FrameDetections> frames, std::size_t window,
                                  double threshold = kDefaultDetectionThreshold);

}  // namespace pilar

#endif  // PILAR_DETECTION_H_
