#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/tinynet.hpp"

namespace synthdet {

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<long> counts;
  double mean = 0.0;
  double median = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Euclidean distances between extractor features of each image pair,
// binned uniformly over [0, max distance].
Histogram feature_distance_histogram(
    const std::vector<std::pair<Image8, Image8>>& pairs, const TinyNet& net,
    int bins);

struct CropSet {
  std::vector<Image8> images;
  std::vector<int> labels;  // class indices 0..C-1
};

// Classification crops for one domain: the generation pipeline run at crop
// scale with the domain's toggles. Sample i uses substream(seed, i); label
// round-robins over objects.
CropSet generate_domain_crops(const ExperimentConfig& config,
                              const DomainSpec& domain, uint64_t seed,
                              long count);

// Matched image pairs: full-pipeline (real-proxy) image vs the same
// background, placement and pose with the object replaced by a plain
// unjittered render, no noise, no blur. Appearance is the only difference.
std::vector<std::pair<Image8, Image8>> generate_feature_pairs(
    const ExperimentConfig& config, uint64_t seed, long count);

// Deterministic training: batches drawn with replacement from rng.
double train(TinyNet& net, const CropSet& data, const FreezeSchedule& schedule,
             const TrainConfig& config, Rng& rng);

double accuracy(const TinyNet& net, const CropSet& data);

struct RunResult {
  FreezeSchedule schedule;
  uint64_t seed = 0;
  double stage1_accuracy = 0.0;  // real-proxy holdout after stage 1
  double stage2_accuracy = 0.0;  // real-proxy holdout after stage 2
  double stage2_final_loss = 0.0;
};

struct ExperimentReport {
  std::vector<RunResult> runs;
  Histogram frozen_histogram;     // stage-1 extractor, pooled over seeds
  Histogram finetuned_histogram;  // fully-finetuned extractor
  bool has_histograms = false;

  nlohmann::ordered_json to_json() const;
  std::string to_text() const;

  double mean_stage2_accuracy(const std::string& schedule_label) const;
};

// Two-stage protocol, per seed:
//   stage 1: train the full net on real-proxy crops, record holdout
//   accuracy; stage 2: per schedule, reinitialize the head and train on
//   plain-synthetic crops under the schedule, evaluate on the real-proxy
//   holdout. Feature-distance histograms use (a) the stage-1 extractor and
//   (b) the stage-2 net of the last schedule with frozen_prefix == 0.
// Seeds run in parallel when jobs > 1; outputs are independent of jobs.
ExperimentReport run_transfer_experiment(const ExperimentConfig& config,
                                         int jobs = 1);

struct AblationRow {
  bool blur = false;
  bool noise = false;
  bool light_jitter = false;
  bool cluttered_background = false;
  double accuracy = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // all 16 toggle combinations
  double baseline_accuracy = 0.0; // all toggles on

  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

// Toggle matrix over the synthetic training domain (blur, noise, light
// jitter, background clutter); each combination trains the fully-frozen
// schedule on that domain and evaluates on the real-proxy holdout. "On"
// values come from the real_proxy domain spec.
AblationReport run_ablation(const ExperimentConfig& config, int jobs = 1);

}  // namespace synthdet
