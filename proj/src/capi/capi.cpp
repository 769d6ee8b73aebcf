#include "synthdet/synthdet.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "core/config.hpp"
#include "core/datagen.hpp"
#include "core/error.hpp"
#include "core/evalmetrics.hpp"
#include "core/transferlab.hpp"

using namespace synthdet;

struct synthdet_config {
  Config config;
};

struct synthdet_report {
  std::string text;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

synthdet_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kFileNotFound:
      return SYNTHDET_ERR_IO;
    case ErrorCode::kParseError:
    case ErrorCode::kSchemaVersionMismatch:
      return SYNTHDET_ERR_PARSE;
    case ErrorCode::kConfigError:
      return SYNTHDET_ERR_CONFIG;
    case ErrorCode::kEmptyMesh:
    case ErrorCode::kInvalidParam:
    case ErrorCode::kInvalidRange:
    case ErrorCode::kNonUnitDirection:
    case ErrorCode::kLevelTooLarge:
    case ErrorCode::kUnknownCategory:
    case ErrorCode::kShapeMismatch:
      return SYNTHDET_ERR_INVALID_ARGUMENT;
    default:
      return SYNTHDET_ERR_RUNTIME;
  }
}

template <typename Fn>
synthdet_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SYNTHDET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SYNTHDET_ERR_RUNTIME;
  }
}

synthdet_status require(bool ok, const char* what) {
  if (ok) return SYNTHDET_OK;
  g_last_error = what;
  return SYNTHDET_ERR_INVALID_ARGUMENT;
}

synthdet_report* make_report(std::string text, std::string json) {
  auto* r = new synthdet_report;
  r->text = std::move(text);
  r->json = std::move(json);
  return r;
}

// Transfer experiment with the schedules replaced by {frozen, finetuned},
// which is all the distance histograms need.
ExperimentReport distance_experiment(const ExperimentConfig& base, int jobs) {
  ExperimentConfig config = base;
  config.schedules.clear();
  FreezeSchedule frozen;
  frozen.frozen_prefix_layers = 4;
  config.schedules.push_back(frozen);
  config.schedules.push_back(FreezeSchedule{});  // fully finetuned
  return run_transfer_experiment(config, jobs);
}

nlohmann::ordered_json inspect_json(const Config& cfg) {
  const GenerationConfig& gen = cfg.generation();
  nlohmann::ordered_json j;
  j["config"] = cfg.raw();
  ViewSphere sphere = subdivide_icosahedron(gen.pose_grid.subdivision_level);
  size_t kept = 0;
  for (const auto& d : sphere.directions)
    if (!gen.pose_grid.hemisphere_only || d.z >= 0) ++kept;
  std::vector<double> distances =
      log_distances(gen.pose_grid.distance_min, gen.pose_grid.distance_max,
                    gen.pose_grid.scale_levels);
  nlohmann::ordered_json grid;
  grid["view_directions"] = kept;
  grid["in_plane_count"] = gen.pose_grid.in_plane_count;
  grid["distances"] = distances;
  grid["total_poses"] = kept * gen.pose_grid.in_plane_count *
                        distances.size();
  j["pose_grid"] = grid;

  // Projected pixel coverage per scale level, per object: diameter of the
  // bounding sphere under the pinhole model, and the level-to-level ratio,
  // so either reading of "scale" can be checked against real numbers.
  auto coverage = nlohmann::ordered_json::array();
  for (const auto& obj : gen.objects) {
    Mesh mesh = obj.build_mesh();
    double radius = mesh.bounding_radius();
    nlohmann::ordered_json entry;
    entry["class_id"] = obj.class_id;
    entry["class_name"] = obj.class_name;
    entry["bounding_radius_m"] = radius;
    auto diameters = nlohmann::ordered_json::array();
    for (double d : distances)
      diameters.push_back(2.0 * radius * gen.camera.fx / d);
    entry["projected_diameter_px"] = diameters;
    if (distances.size() > 1)
      entry["scale_step_ratio"] = distances[0] / distances[1];
    coverage.push_back(entry);
  }
  j["pixel_coverage"] = coverage;
  return j;
}

std::string inspect_text(const nlohmann::ordered_json& j) {
  std::string out;
  char buf[256];
  const auto& grid = j["pose_grid"];
  std::snprintf(buf, sizeof(buf),
                "pose grid: %lld directions x %lld in-plane x %zu distances "
                "= %lld poses\n",
                grid["view_directions"].get<long long>(),
                grid["in_plane_count"].get<long long>(),
                grid["distances"].size(),
                grid["total_poses"].get<long long>());
  out += buf;
  out += "projected object diameters per scale level (px):\n";
  for (const auto& entry : j["pixel_coverage"]) {
    std::snprintf(buf, sizeof(buf), "  %-16s",
                  entry["class_name"].get<std::string>().c_str());
    out += buf;
    for (const auto& d : entry["projected_diameter_px"]) {
      std::snprintf(buf, sizeof(buf), " %7.1f", d.get<double>());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace

extern "C" {

const char* synthdet_version(void) { return "0.1.0"; }

const char* synthdet_status_name(synthdet_status status) {
  switch (status) {
    case SYNTHDET_OK: return "ok";
    case SYNTHDET_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SYNTHDET_ERR_IO: return "io_error";
    case SYNTHDET_ERR_PARSE: return "parse_error";
    case SYNTHDET_ERR_CONFIG: return "config_error";
    case SYNTHDET_ERR_RUNTIME: return "runtime_error";
  }
  return "unknown";
}

const char* synthdet_last_error(void) { return g_last_error.c_str(); }

synthdet_status synthdet_config_load(const char* path, synthdet_config** out) {
  if (auto s = require(path && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    auto* handle = new synthdet_config{Config::load(path)};
    *out = handle;
  });
}

synthdet_status synthdet_config_override(synthdet_config* config,
                                         const char* dotted_key,
                                         const char* json_value) {
  if (auto s = require(config && dotted_key && json_value, "null argument"))
    return s;
  return guarded([&] { config->config.override_value(dotted_key, json_value); });
}

synthdet_status synthdet_config_set_seed(synthdet_config* config,
                                         uint64_t seed) {
  if (auto s = require(config != nullptr, "null config")) return s;
  return guarded([&] { config->config.set_master_seed(seed); });
}

synthdet_status synthdet_config_set_output_dir(synthdet_config* config,
                                               const char* dir) {
  if (auto s = require(config && dir, "null argument")) return s;
  return guarded([&] { config->config.set_output_dir(dir); });
}

void synthdet_config_free(synthdet_config* config) { delete config; }

synthdet_status synthdet_generate(const synthdet_config* config, int jobs,
                                  synthdet_report** out) {
  if (auto s = require(config && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    DatasetManifest manifest = generate_dataset(
        config->config.generation(), jobs < 1 ? 1 : jobs, config->config.raw());
    nlohmann::ordered_json j;
    j["total_images"] = manifest.total_images;
    j["master_seed"] = manifest.master_seed;
    j["output_dir"] = config->config.generation().output_dir;
    auto counts = nlohmann::ordered_json::array();
    for (const auto& c : manifest.per_class_counts)
      counts.push_back({{"category_id", c.category_id}, {"count", c.count}});
    j["per_class_counts"] = counts;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "generated %ld images (seed %llu) into %s\n",
                  manifest.total_images,
                  static_cast<unsigned long long>(manifest.master_seed),
                  config->config.generation().output_dir.c_str());
    *out = make_report(buf, j.dump(2) + "\n");
  });
}

synthdet_status synthdet_evaluate(const char* gt_path,
                                  const char* detections_path,
                                  synthdet_report** out) {
  if (auto s = require(gt_path && detections_path && out, "null argument"))
    return s;
  *out = nullptr;
  return guarded([&] {
    DatasetAnnotations gt = read_annotations(gt_path);
    std::vector<Detection> dets = read_detections(detections_path);
    MetricsReport report =
        evaluate(dets, ground_truth_from_annotations(gt), gt.categories);
    *out = make_report(report.to_text(), report.to_json().dump(2) + "\n");
  });
}

synthdet_status synthdet_experiment_freeze(const synthdet_config* config,
                                           int jobs, synthdet_report** out) {
  if (auto s = require(config && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    ExperimentReport report = run_transfer_experiment(
        config->config.experiment(), jobs < 1 ? 1 : jobs);
    *out = make_report(report.to_text(), report.to_json().dump(2) + "\n");
  });
}

synthdet_status synthdet_experiment_distance(const synthdet_config* config,
                                             int jobs, synthdet_report** out) {
  if (auto s = require(config && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    ExperimentReport report =
        distance_experiment(config->config.experiment(), jobs < 1 ? 1 : jobs);
    *out = make_report(report.to_text(), report.to_json().dump(2) + "\n");
  });
}

synthdet_status synthdet_ablate(const synthdet_config* config, int jobs,
                                synthdet_report** out) {
  if (auto s = require(config && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    AblationReport report =
        run_ablation(config->config.experiment(), jobs < 1 ? 1 : jobs);
    *out = make_report(report.to_text(), report.to_json().dump(2) + "\n");
  });
}

synthdet_status synthdet_inspect(const synthdet_config* config,
                                 synthdet_report** out) {
  if (auto s = require(config && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    nlohmann::ordered_json j = inspect_json(config->config);
    *out = make_report(inspect_text(j), j.dump(2) + "\n");
  });
}

const char* synthdet_report_text(const synthdet_report* report) {
  return report ? report->text.c_str() : "";
}

const char* synthdet_report_json(const synthdet_report* report) {
  return report ? report->json.c_str() : "";
}

synthdet_status synthdet_report_write_json(const synthdet_report* report,
                                           const char* path) {
  if (auto s = require(report && path, "null argument")) return s;
  return guarded([&] {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIoError,
                        std::string("cannot open for write: ") + path);
    f << report->json;
    if (!f) throw Error(ErrorCode::kIoError,
                        std::string("write failed: ") + path);
  });
}

void synthdet_report_free(synthdet_report* report) { delete report; }

}  // extern "C"
