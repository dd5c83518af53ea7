#include <subpix/landmarks.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace subpix {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t row,
                       const std::string& what) {
  throw LandmarkParseError(path.string() + ": row " + std::to_string(row) +
                           ": " + what);
}

double parse_number(const std::string& token, const std::filesystem::path& path,
                    std::size_t row) {
  double value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    fail(path, row, "cannot parse coordinate '" + token + "'");
  }
  return value;
}

void check_coordinate(double v, const std::filesystem::path& path,
                      std::size_t row) {
  if (!std::isfinite(v)) {
    fail(path, row, "non-finite coordinate");
  }
  if (v < 0) {
    fail(path, row, "negative coordinate");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

std::vector<LandmarkRecord> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LandmarkParseError("cannot open landmark file " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw LandmarkParseError("empty landmark file " + path.string());
  }
  if (!header.empty() && header.back() == '\r') {
    header.pop_back();
  }
  const auto columns = split_csv_line(header);
  if (columns.size() < 3 || columns[0] != "image_id" ||
      (columns.size() - 1) % 2 != 0) {
    throw LandmarkParseError(path.string() +
                             ": expected header image_id,x0,y0,x1,y1,...");
  }
  const std::size_t landmark_count = (columns.size() - 1) / 2;

  std::vector<LandmarkRecord> records;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != columns.size()) {
      fail(path, row,
           "expected " + std::to_string(columns.size()) + " fields, got " +
               std::to_string(fields.size()));
    }
    LandmarkRecord record;
    record.image_id = fields[0];
    record.landmarks.reserve(landmark_count);
    for (std::size_t i = 0; i < landmark_count; ++i) {
      const double x = parse_number(fields[1 + 2 * i], path, row);
      const double y = parse_number(fields[2 + 2 * i], path, row);
      check_coordinate(x, path, row);
      check_coordinate(y, path, row);
      record.landmarks.emplace_back(x, y);
    }
    records.push_back(std::move(record));
  }
  if (records.empty()) {
    throw LandmarkParseError("no landmark records in " + path.string());
  }
  return records;
}

std::vector<LandmarkRecord> ingest_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LandmarkParseError("cannot open landmark file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw LandmarkParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_array() || doc.empty()) {
    throw LandmarkParseError(path.string() +
                             ": expected a nonempty array of records");
  }

  std::vector<LandmarkRecord> records;
  std::size_t landmark_count = 0;
  for (std::size_t idx = 0; idx < doc.size(); ++idx) {
    const std::size_t row = idx + 1;
    const auto& item = doc[idx];
    if (!item.is_object() || !item.contains("image_id") ||
        !item.contains("landmarks")) {
      fail(path, row, "record must carry image_id and landmarks");
    }
    LandmarkRecord record;
    record.image_id = item.at("image_id").get<std::string>();
    const auto& points = item.at("landmarks");
    if (!points.is_array() || points.empty()) {
      fail(path, row, "landmarks must be a nonempty array of [x, y] pairs");
    }
    for (const auto& p : points) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
          !p[1].is_number()) {
        fail(path, row, "landmark entries must be [x, y] numbers");
      }
      const double x = p[0].get<double>();
      const double y = p[1].get<double>();
      check_coordinate(x, path, row);
      check_coordinate(y, path, row);
      record.landmarks.emplace_back(x, y);
    }
    if (item.contains("bbox")) {
      const auto& b = item.at("bbox");
      if (!b.is_array() || b.size() != 4) {
        fail(path, row, "bbox must be [x, y, w, h]");
      }
      record.bbox = Eigen::Vector4d(b[0].get<double>(), b[1].get<double>(),
                                    b[2].get<double>(), b[3].get<double>());
    }
    if (item.contains("visibility")) {
      const auto& vis = item.at("visibility");
      if (!vis.is_array() || vis.size() != record.landmarks.size()) {
        fail(path, row, "visibility length must match landmark count");
      }
      for (const auto& flag : vis) {
        record.visibility.push_back(flag.get<bool>());
      }
    }
    if (landmark_count == 0) {
      landmark_count = record.landmarks.size();
    } else if (record.landmarks.size() != landmark_count) {
      fail(path, row,
           "landmark count " + std::to_string(record.landmarks.size()) +
               " differs from first record's " +
               std::to_string(landmark_count));
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

LandmarkFormat landmark_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") {
    return LandmarkFormat::Csv;
  }
  if (ext == ".json") {
    return LandmarkFormat::Json;
  }
  throw LandmarkParseError("cannot infer landmark format from " +
                           path.string());
}

std::vector<LandmarkRecord> ingest_landmarks(const std::filesystem::path& path,
                                             LandmarkFormat format) {
  return format == LandmarkFormat::Csv ? ingest_csv(path) : ingest_json(path);
}

}  // namespace subpix
