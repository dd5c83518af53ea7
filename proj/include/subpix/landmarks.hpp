#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace subpix {

/// One annotated instance from a landmark file. bbox is (x, y, w, h) in
/// pixels; an empty visibility vector means all landmarks visible.
struct LandmarkRecord {
  std::string image_id;
  std::vector<Eigen::Vector2d> landmarks;
  std::optional<Eigen::Vector4d> bbox;
  std::vector<bool> visibility;
};

enum class LandmarkFormat { Csv, Json };

class LandmarkParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads and validates a landmark file. CSV expects a header
/// `image_id,x0,y0,x1,y1,...`; JSON expects an array of record objects.
/// Rejects empty files, non-finite or negative coordinates, and records
/// whose landmark count differs from the first record, naming the row.
std::vector<LandmarkRecord> ingest_landmarks(const std::filesystem::path& path,
                                             LandmarkFormat format);

/// Format from the file extension (.csv or .json).
LandmarkFormat landmark_format_for(const std::filesystem::path& path);

}  // namespace subpix
