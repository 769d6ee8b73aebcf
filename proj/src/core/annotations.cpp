#include "core/annotations.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"

namespace synthdet {

using nlohmann::ordered_json;

namespace {

ordered_json record_to_json(const AnnotationRecord& r) {
  ordered_json j;
  j["image_id"] = r.image_id;
  j["file_name"] = r.file_name;
  j["category_id"] = r.category_id;
  j["bbox"] = r.bbox;
  if (r.mask_file) j["mask_file"] = *r.mask_file;
  j["rotation"] = r.rotation;
  j["translation"] = r.translation;
  return j;
}

template <typename T, size_t N>
std::array<T, N> to_array(const ordered_json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw Error(ErrorCode::kParseError,
                std::string("expected array of ") + std::to_string(N) +
                    " for " + what);
  std::array<T, N> out{};
  for (size_t i = 0; i < N; ++i) out[i] = j[i].get<T>();
  return out;
}

}  // namespace

void write_annotations(const DatasetAnnotations& data,
                       const std::string& path) {
  ordered_json root;
  ordered_json manifest;
  manifest["schema_version"] = data.manifest.schema_version;
  manifest["generator"] = data.manifest.generator;
  manifest["master_seed"] = data.manifest.master_seed;
  manifest["total_images"] = data.manifest.total_images;
  ordered_json counts = ordered_json::array();
  for (const auto& c : data.manifest.per_class_counts)
    counts.push_back({{"category_id", c.category_id}, {"count", c.count}});
  manifest["per_class_counts"] = counts;
  manifest["config"] = data.manifest.config_echo;
  root["manifest"] = manifest;

  ordered_json cats = ordered_json::array();
  for (const auto& c : data.categories)
    cats.push_back({{"id", c.id}, {"name", c.name}});
  root["categories"] = cats;

  ordered_json images = ordered_json::array();
  for (const auto& im : data.images)
    images.push_back({{"id", im.id},
                      {"file_name", im.file_name},
                      {"width", im.width},
                      {"height", im.height}});
  root["images"] = images;

  ordered_json anns = ordered_json::array();
  for (const auto& r : data.annotations) anns.push_back(record_to_json(r));
  root["annotations"] = anns;

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw Error(ErrorCode::kIoError, "cannot open for write: " + tmp);
    out << root.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw Error(ErrorCode::kIoError,
                "rename " + tmp + " -> " + path + ": " + ec.message());
}

DatasetAnnotations read_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "no such file: " + path);
  ordered_json root;
  try {
    root = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  try {
    DatasetAnnotations data;
    const auto& manifest = root.at("manifest");
    data.manifest.schema_version = manifest.at("schema_version").get<int>();
    if (data.manifest.schema_version != kAnnotationSchemaVersion)
      throw Error(ErrorCode::kSchemaVersionMismatch,
                  path + ": schema_version " +
                      std::to_string(data.manifest.schema_version) +
                      " (expected " +
                      std::to_string(kAnnotationSchemaVersion) + ")");
    data.manifest.generator = manifest.at("generator").get<std::string>();
    data.manifest.master_seed = manifest.at("master_seed").get<uint64_t>();
    data.manifest.total_images = manifest.at("total_images").get<long>();
    for (const auto& c : manifest.at("per_class_counts"))
      data.manifest.per_class_counts.push_back(
          {c.at("category_id").get<int>(), c.at("count").get<long>()});
    data.manifest.config_echo = manifest.at("config");

    for (const auto& c : root.at("categories"))
      data.categories.push_back(
          {c.at("id").get<int>(), c.at("name").get<std::string>()});
    for (const auto& im : root.at("images"))
      data.images.push_back({im.at("id").get<int>(),
                             im.at("file_name").get<std::string>(),
                             im.at("width").get<int>(),
                             im.at("height").get<int>()});
    for (const auto& a : root.at("annotations")) {
      AnnotationRecord r;
      r.image_id = a.at("image_id").get<int>();
      r.file_name = a.at("file_name").get<std::string>();
      r.category_id = a.at("category_id").get<int>();
      r.bbox = to_array<double, 4>(a.at("bbox"), "bbox");
      if (a.contains("mask_file"))
        r.mask_file = a.at("mask_file").get<std::string>();
      r.rotation = to_array<double, 9>(a.at("rotation"), "rotation");
      r.translation = to_array<double, 3>(a.at("translation"), "translation");
      data.annotations.push_back(std::move(r));
    }
    return data;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

}  // namespace synthdet
