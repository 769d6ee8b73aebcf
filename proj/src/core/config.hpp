#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/background.hpp"
#include "core/compositor.hpp"
#include "core/geometry.hpp"
#include "core/renderer.hpp"
#include "core/viewsampler.hpp"
#include "vendor_json.hpp"

namespace synthdet {

inline constexpr int kConfigSchemaVersion = 1;

struct ObjectSpec {
  int class_id = 0;
  std::string class_name;
  std::string mesh_path;  // exactly one of mesh_path / primitive is set
  std::optional<PrimitiveKind> primitive;
  PrimitiveParams primitive_params;
  std::optional<Vec3> color;  // overrides the mesh's vertex colors

  Mesh build_mesh() const;
};

enum class BackgroundMode { kDirectory, kProcedural, kConstantColor };

struct BackgroundsConfig {
  BackgroundMode mode = BackgroundMode::kProcedural;
  std::string directory;
  ProceduralBackgroundSpec procedural;
};

struct GenerationConfig {
  std::vector<ObjectSpec> objects;
  CameraIntrinsics camera;
  PoseGridSpec pose_grid;
  PhongMaterial material;
  LightSpec light;
  JitterSpec jitter;
  ComposeSpec compose;
  BackgroundsConfig backgrounds;
  long sample_count = 1;
  uint64_t master_seed = 0;
  std::string output_dir;
  bool emit_masks = true;
  // Walk the pose grid in order instead of drawing poses uniformly;
  // sample i of class c uses pose (i / class_count) mod grid_size.
  bool exhaustive = false;

  void validate() const;
};

struct FreezeSchedule {
  int frozen_prefix_layers = 0;
  std::optional<int> unfreeze_at_step;
  std::string label() const;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  int steps = 600;
  int batch_size = 16;

  void validate() const;
};

// Pipeline toggles distinguishing the two desk-scale domains.
struct DomainSpec {
  std::string name;
  bool light_jitter = true;
  double noise_sigma_lo = 0.0, noise_sigma_hi = 0.0;
  double blur_sigma_lo = 0.0, blur_sigma_hi = 0.0;
  BackgroundMode background = BackgroundMode::kProcedural;
  bool channel_swap = false;
};

struct NetSpec {
  int conv1_out = 8;
  int conv2_out = 16;
};

struct ExperimentConfig {
  // Scene/base settings shared by both domains (camera is crop-sized).
  GenerationConfig base;
  DomainSpec real_proxy;
  DomainSpec plain_synthetic;
  NetSpec net;
  TrainConfig train;
  std::vector<FreezeSchedule> schedules;
  std::vector<uint64_t> seeds;
  long train_crops_per_domain = 2000;
  long test_crops = 500;
  long pair_count = 300;

  void validate() const;
};

// Parsed-and-validated config document. Keeps the post-override JSON
// around so runs can echo exactly what they were configured with.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_json_text(const std::string& text,
                               const std::string& origin = "<string>");

  // Applies "dotted.path=json_value" then revalidates. Throws ConfigError
  // with the offending field path.
  void override_value(const std::string& dotted_key,
                      const std::string& json_value);
  void set_master_seed(uint64_t seed);
  void set_output_dir(const std::string& dir);

  const GenerationConfig& generation() const { return generation_; }
  // Throws ConfigError when the file has no experiment section.
  const ExperimentConfig& experiment() const;
  bool has_experiment() const { return experiment_.has_value(); }

  const nlohmann::ordered_json& raw() const { return raw_; }

 private:
  void parse_and_validate();

  nlohmann::ordered_json raw_;
  std::string origin_;
  GenerationConfig generation_;
  std::optional<ExperimentConfig> experiment_;
};

}  // namespace synthdet
