#pragma once

#include <functional>
#include <string>

#include "core/annotations.hpp"
#include "core/config.hpp"

namespace synthdet {

inline constexpr const char* kGeneratorVersion = "synthdet 0.1.0";

// End-to-end sample production for one index: pose draw, parameter jitter,
// render, composite. Retries a fresh pose on NoValidPlacement up to 32
// times. Everything is driven by substream(master_seed, index), so results
// are independent of processing order.
struct SampleSet {
  std::vector<Mesh> meshes;          // one per object, same order as config
  std::vector<Pose> poses;           // enumerated grid
  BackgroundPool backgrounds;        // unused for constant-color mode
};

SampleSet prepare_sample_set(const GenerationConfig& config);

CompositeSample produce_sample(const GenerationConfig& config,
                               const SampleSet& set, uint64_t index);

// Generates sample_count images (+ masks when enabled) plus one
// annotations.json under config.output_dir, parallelized over sample
// indices with `jobs` workers. Output bytes are a pure function of the
// config; worker count never changes them. config_echo is embedded in the
// manifest verbatim.
DatasetManifest generate_dataset(
    const GenerationConfig& config, int jobs = 1,
    const nlohmann::ordered_json& config_echo = nlohmann::ordered_json());

std::string image_file_name(uint64_t index);
std::string mask_file_name(uint64_t index);

}  // namespace synthdet
