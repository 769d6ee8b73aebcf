#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vendor_json.hpp"

namespace synthdet {

// One labeled object instance. bbox is [x_min, y_min, width, height] in
// pixels, origin at the image's top-left corner.
struct AnnotationRecord {
  int image_id = 0;
  std::string file_name;
  int category_id = 0;
  std::array<double, 4> bbox{};
  std::optional<std::string> mask_file;
  std::array<double, 9> rotation{};  // row-major
  std::array<double, 3> translation{};
};

struct CategoryInfo {
  int id = 0;
  std::string name;
};

struct ImageInfo {
  int id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct ClassCount {
  int category_id = 0;
  long count = 0;
};

inline constexpr int kAnnotationSchemaVersion = 1;

struct DatasetManifest {
  int schema_version = kAnnotationSchemaVersion;
  std::string generator;
  uint64_t master_seed = 0;
  long total_images = 0;
  std::vector<ClassCount> per_class_counts;  // ordered by category id
  nlohmann::ordered_json config_echo;        // resolved generation config
};

struct DatasetAnnotations {
  DatasetManifest manifest;
  std::vector<CategoryInfo> categories;
  std::vector<ImageInfo> images;
  std::vector<AnnotationRecord> annotations;
};

// Single JSON document with top-level keys manifest / categories / images /
// annotations, 2-space indent, keys in insertion order, newline-terminated.
// Written to a temp file and atomically renamed into place.
void write_annotations(const DatasetAnnotations& data, const std::string& path);

// Exact inverse of write_annotations on its own output. Throws ParseError
// on malformed documents and SchemaVersionMismatch on a version bump.
DatasetAnnotations read_annotations(const std::string& path);

}  // namespace synthdet
