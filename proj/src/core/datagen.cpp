#include "core/datagen.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "core/error.hpp"

namespace synthdet {

namespace fs = std::filesystem;

std::string image_file_name(uint64_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "images/img_%06llu.ppm",
                static_cast<unsigned long long>(index));
  return buf;
}

std::string mask_file_name(uint64_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "masks/mask_%06llu.pgm",
                static_cast<unsigned long long>(index));
  return buf;
}

SampleSet prepare_sample_set(const GenerationConfig& config) {
  SampleSet set;
  for (const auto& obj : config.objects) set.meshes.push_back(obj.build_mesh());
  set.poses = enumerate_poses(config.pose_grid);
  switch (config.backgrounds.mode) {
    case BackgroundMode::kDirectory:
      set.backgrounds = BackgroundPool::from_directory(
          config.backgrounds.directory);
      break;
    case BackgroundMode::kProcedural:
      set.backgrounds = BackgroundPool::procedural(config.backgrounds.procedural);
      break;
    case BackgroundMode::kConstantColor:
      break;  // backgrounds synthesized per sample
  }
  if (config.backgrounds.mode != BackgroundMode::kConstantColor)
    set.backgrounds.validate_for_target(config.camera.width,
                                        config.camera.height,
                                        !config.compose.rotations.empty());
  return set;
}

namespace {

// Constant-color mode: uniform random color per sample, three draws.
Image8 constant_background(int width, int height, Rng& rng) {
  uint8_t col[3];
  for (auto& c : col) c = static_cast<uint8_t>(rng.uniform_int(256));
  Image8 img(width, height, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
  return img;
}

CompositeSample compose_onto_constant(const RenderLayer& layer,
                                      const ComposeSpec& spec, int class_id,
                                      Rng& rng) {
  Image8 background =
      constant_background(layer.width, layer.height, rng);
  Placement placement = place_object(layer, background, spec, rng);
  CompositeSample sample;
  sample.class_id = class_id;
  sample.image = std::move(background);
  sample.mask = Image8(layer.width, layer.height, 1, 0);
  for (int y = 0; y < layer.height; ++y) {
    for (int x = 0; x < layer.width; ++x) {
      if (layer.alpha[layer.pixel_index(x, y)] == 0) continue;
      int bx = x + placement.dx, by = y + placement.dy;
      if (bx < 0 || bx >= sample.image.width || by < 0 ||
          by >= sample.image.height)
        continue;
      sample.mask.at(bx, by, 0) = 255;
      for (int c = 0; c < 3; ++c)
        sample.image.at(bx, by, c) = layer.rgb[layer.pixel_index(x, y) * 3 + c];
    }
  }
  double noise_sigma =
      rng.uniform_real(spec.noise_sigma_lo, spec.noise_sigma_hi);
  add_object_noise(sample.image, sample.mask, noise_sigma, rng);
  double blur_sigma = rng.uniform_real(spec.blur_sigma_lo, spec.blur_sigma_hi);
  blur_object_boundary(sample.image, sample.mask, blur_sigma);
  sample.bbox = mask_tight_bbox(sample.mask);
  return sample;
}

}  // namespace

CompositeSample produce_sample(const GenerationConfig& config,
                               const SampleSet& set, uint64_t index) {
  size_t object_index = index % config.objects.size();
  const ObjectSpec& obj = config.objects[object_index];
  const Mesh& mesh = set.meshes[object_index];
  Rng rng = Rng::substream(config.master_seed, index);

  constexpr int kMaxAttempts = 32;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    size_t pose_index;
    if (config.exhaustive) {
      pose_index = (index / config.objects.size() + attempt) % set.poses.size();
    } else {
      pose_index = rng.uniform_int(set.poses.size());
    }
    const Pose& pose = set.poses[pose_index];
    auto [material, light] =
        perturb_params(config.material, config.light, config.jitter, rng);
    RenderLayer layer = render(mesh, pose, config.camera, material, light);
    try {
      CompositeSample sample =
          config.backgrounds.mode == BackgroundMode::kConstantColor
              ? compose_onto_constant(layer, config.compose, obj.class_id, rng)
              : compose_sample(layer, set.backgrounds, config.compose,
                               obj.class_id, rng);
      sample.pose = pose;
      sample.provenance = {config.master_seed, index};
      return sample;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoValidPlacement) throw;
      // Retry with a fresh pose from the same stream.
    }
  }
  throw Error(ErrorCode::kGenerationFailed,
              "sample " + std::to_string(index) +
                  ": no valid placement after 32 pose draws");
}

DatasetManifest generate_dataset(const GenerationConfig& config, int jobs,
                                 const nlohmann::ordered_json& config_echo) {
  config.validate();
  if (config.output_dir.empty())
    throw Error(ErrorCode::kConfigError, "generation.output_dir is not set");
  if (jobs < 1) jobs = 1;

  SampleSet set = prepare_sample_set(config);

  fs::path out_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (config.emit_masks) fs::create_directories(out_dir / "masks", ec);
  if (!fs::is_directory(out_dir / "images"))
    throw Error(ErrorCode::kIoError,
                "cannot create output directory: " + config.output_dir);

  const long n = config.sample_count;
  std::vector<AnnotationRecord> records(n);
  std::atomic<long> next_index{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      long i = next_index.fetch_add(1);
      if (i >= n || failed.load()) break;
      try {
        CompositeSample sample =
            produce_sample(config, set, static_cast<uint64_t>(i));
        std::string img_rel = image_file_name(static_cast<uint64_t>(i));
        write_image(sample.image, (out_dir / img_rel).string());
        AnnotationRecord rec;
        rec.image_id = static_cast<int>(i);
        rec.file_name = img_rel;
        rec.category_id = sample.class_id;
        rec.bbox = {sample.bbox.x_min, sample.bbox.y_min, sample.bbox.width(),
                    sample.bbox.height()};
        if (config.emit_masks) {
          std::string mask_rel = mask_file_name(static_cast<uint64_t>(i));
          write_image(sample.mask, (out_dir / mask_rel).string());
          rec.mask_file = mask_rel;
        }
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c)
            rec.rotation[r * 3 + c] = sample.pose.rotation(r, c);
        rec.translation = {sample.pose.translation.x,
                           sample.pose.translation.y,
                           sample.pose.translation.z};
        records[i] = std::move(rec);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        if (failure.empty()) failure = e.what();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failed.load())
    throw Error(ErrorCode::kGenerationFailed, failure);

  DatasetAnnotations data;
  std::map<int, long> counts;
  for (const auto& obj : config.objects) counts[obj.class_id] = 0;
  for (const auto& rec : records) ++counts[rec.category_id];

  data.manifest.generator = kGeneratorVersion;
  // The echo records what shaped the data. The output location does not,
  // and keeping it would break byte-identity of re-runs into fresh dirs.
  data.manifest.config_echo = config_echo;
  if (data.manifest.config_echo.contains("generation"))
    data.manifest.config_echo["generation"].erase("output_dir");
  data.manifest.master_seed = config.master_seed;
  data.manifest.total_images = n;
  for (const auto& [id, count] : counts)
    data.manifest.per_class_counts.push_back({id, count});
  for (const auto& obj : config.objects)
    data.categories.push_back({obj.class_id, obj.class_name});
  for (const auto& rec : records)
    data.images.push_back({rec.image_id, rec.file_name, config.camera.width,
                           config.camera.height});
  data.annotations = std::move(records);
  write_annotations(data, (out_dir / "annotations.json").string());
  return data.manifest;
}

}  // namespace synthdet
