#include "core/transferlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "core/datagen.hpp"
#include "core/error.hpp"

namespace synthdet {

namespace {

// Stream tags keeping the per-purpose substreams of one experiment seed
// apart. Arbitrary fixed constants, part of the reproducibility contract.
constexpr uint64_t kTagRealTrain = 0x10;
constexpr uint64_t kTagRealTest = 0x11;
constexpr uint64_t kTagSynthTrain = 0x12;
constexpr uint64_t kTagPairs = 0x13;
constexpr uint64_t kTagStage1Init = 0x20;
constexpr uint64_t kTagStage1Batches = 0x21;
constexpr uint64_t kTagStage2Init = 0x30;   // + schedule index
constexpr uint64_t kTagStage2Batches = 0x50; // + schedule index

uint64_t tagged_seed(uint64_t seed, uint64_t tag) {
  return mix64(seed ^ (Rng::kGoldenGamma * tag));
}

// The generation config for one domain: crop-scale camera from the base
// config, pipeline toggles from the domain spec.
GenerationConfig domain_config(const ExperimentConfig& config,
                               const DomainSpec& domain, uint64_t seed) {
  GenerationConfig g = config.base;
  g.master_seed = seed;
  if (!domain.light_jitter) g.jitter = JitterSpec{};
  g.compose.noise_sigma_lo = domain.noise_sigma_lo;
  g.compose.noise_sigma_hi = domain.noise_sigma_hi;
  g.compose.blur_sigma_lo = domain.blur_sigma_lo;
  g.compose.blur_sigma_hi = domain.blur_sigma_hi;
  g.compose.channel_swap = domain.channel_swap;
  // Constant-color domains bypass the pool; cluttered ones use whatever
  // pool the base config provides.
  if (domain.background == BackgroundMode::kConstantColor)
    g.backgrounds.mode = BackgroundMode::kConstantColor;
  return g;
}

}  // namespace

CropSet generate_domain_crops(const ExperimentConfig& config,
                              const DomainSpec& domain, uint64_t seed,
                              long count) {
  GenerationConfig g = domain_config(config, domain, seed);
  SampleSet set = prepare_sample_set(g);
  CropSet crops;
  crops.images.reserve(count);
  crops.labels.reserve(count);
  for (long i = 0; i < count; ++i) {
    CompositeSample sample = produce_sample(g, set, static_cast<uint64_t>(i));
    crops.images.push_back(std::move(sample.image));
    crops.labels.push_back(static_cast<int>(i % config.base.objects.size()));
  }
  return crops;
}

std::vector<std::pair<Image8, Image8>> generate_feature_pairs(
    const ExperimentConfig& config, uint64_t seed, long count) {
  GenerationConfig real = domain_config(config, config.real_proxy, seed);
  SampleSet set = prepare_sample_set(real);
  std::vector<std::pair<Image8, Image8>> pairs;
  pairs.reserve(count);
  for (long i = 0; i < count; ++i) {
    size_t object_index = i % real.objects.size();
    const Mesh& mesh = set.meshes[object_index];
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(i));
    const Pose& pose = set.poses[rng.uniform_int(set.poses.size())];
    auto [material, light] =
        perturb_params(real.material, real.light, real.jitter, rng);
    RenderLayer real_layer = render(mesh, pose, real.camera, material, light);
    // Plain counterpart: same geometry, unjittered parameters.
    RenderLayer plain_layer =
        render(mesh, pose, real.camera, real.material, real.light);

    size_t bg_index = rng.uniform_int(set.backgrounds.size());
    Image8 background =
        augment_background(set.backgrounds.at(bg_index), real.camera.width,
                           real.camera.height, real.compose, rng);
    Placement placement =
        place_object(real_layer, background, real.compose, rng);

    Image8 real_img = background;
    Image8 plain_img = background;
    Image8 mask(real.camera.width, real.camera.height, 1, 0);
    for (int y = 0; y < real_layer.height; ++y) {
      for (int x = 0; x < real_layer.width; ++x) {
        if (real_layer.alpha[real_layer.pixel_index(x, y)] == 0) continue;
        int bx = x + placement.dx, by = y + placement.dy;
        if (bx < 0 || bx >= real_img.width || by < 0 || by >= real_img.height)
          continue;
        mask.at(bx, by, 0) = 255;
        for (int c = 0; c < 3; ++c) {
          real_img.at(bx, by, c) =
              real_layer.rgb[real_layer.pixel_index(x, y) * 3 + c];
          plain_img.at(bx, by, c) =
              plain_layer.rgb[plain_layer.pixel_index(x, y) * 3 + c];
        }
      }
    }
    double noise_sigma = rng.uniform_real(real.compose.noise_sigma_lo,
                                          real.compose.noise_sigma_hi);
    add_object_noise(real_img, mask, noise_sigma, rng);
    double blur_sigma = rng.uniform_real(real.compose.blur_sigma_lo,
                                         real.compose.blur_sigma_hi);
    blur_object_boundary(real_img, mask, blur_sigma);
    pairs.emplace_back(std::move(real_img), std::move(plain_img));
  }
  return pairs;
}

Histogram feature_distance_histogram(
    const std::vector<std::pair<Image8, Image8>>& pairs, const TinyNet& net,
    int bins) {
  if (pairs.empty())
    throw Error(ErrorCode::kInvalidParam, "no pairs to histogram");
  if (bins < 1) throw Error(ErrorCode::kInvalidParam, "bins must be >= 1");
  std::vector<double> distances;
  distances.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a.width != b.width || a.height != b.height)
      throw Error(ErrorCode::kShapeMismatch, "pair images differ in shape");
    Tensor3 fa = forward(net, image_to_tensor(a), net.feature_cut);
    Tensor3 fb = forward(net, image_to_tensor(b), net.feature_cut);
    double d2 = 0.0;
    for (size_t i = 0; i < fa.data.size(); ++i) {
      double diff = fa.data[i] - fb.data[i];
      d2 += diff * diff;
    }
    distances.push_back(std::sqrt(d2));
  }
  Histogram h;
  double max_d = *std::max_element(distances.begin(), distances.end());
  double hi = max_d > 0.0 ? max_d : 1.0;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = hi * i / bins;
  h.counts.assign(bins, 0);
  double sum = 0.0;
  for (double d : distances) {
    int bin = std::min(bins - 1, static_cast<int>(d / hi * bins));
    ++h.counts[bin];
    sum += d;
  }
  h.mean = sum / distances.size();
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  size_t n = sorted.size();
  h.median = n % 2 == 1 ? sorted[n / 2]
                        : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return h;
}

double train(TinyNet& net, const CropSet& data, const FreezeSchedule& schedule,
             const TrainConfig& config, Rng& rng) {
  config.validate();
  if (data.images.empty())
    throw Error(ErrorCode::kInvalidParam, "empty training set");
  std::vector<Tensor3> tensors;
  tensors.reserve(data.images.size());
  for (const auto& img : data.images) tensors.push_back(image_to_tensor(img));
  double loss = 0.0;
  for (int step = 0; step < config.steps; ++step) {
    Batch batch;
    batch.inputs.reserve(config.batch_size);
    for (int b = 0; b < config.batch_size; ++b) {
      size_t idx = rng.uniform_int(tensors.size());
      batch.inputs.push_back(tensors[idx]);
      batch.labels.push_back(data.labels[idx]);
    }
    loss = backward_and_step(net, batch, schedule, config, step);
  }
  return loss;
}

double accuracy(const TinyNet& net, const CropSet& data) {
  if (data.images.empty())
    throw Error(ErrorCode::kInvalidParam, "empty evaluation set");
  long correct = 0;
  for (size_t i = 0; i < data.images.size(); ++i) {
    Tensor3 logits = forward(net, image_to_tensor(data.images[i]));
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.data.size()); ++c)
      if (logits.data[c] > logits.data[best]) best = c;
    if (best == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.images.size();
}

namespace {

struct SeedOutcome {
  std::vector<RunResult> runs;
  Histogram frozen_hist;
  Histogram finetuned_hist;
  bool has_hist = false;
};

constexpr int kHistogramBins = 24;

SeedOutcome run_seed(const ExperimentConfig& config, uint64_t seed) {
  int num_classes = static_cast<int>(config.base.objects.size());
  int input_size = config.base.camera.width;

  CropSet real_train = generate_domain_crops(
      config, config.real_proxy, tagged_seed(seed, kTagRealTrain),
      config.train_crops_per_domain);
  CropSet real_test =
      generate_domain_crops(config, config.real_proxy,
                            tagged_seed(seed, kTagRealTest), config.test_crops);
  CropSet synth_train = generate_domain_crops(
      config, config.plain_synthetic, tagged_seed(seed, kTagSynthTrain),
      config.train_crops_per_domain);
  auto pairs = generate_feature_pairs(config, tagged_seed(seed, kTagPairs),
                                      config.pair_count);

  // Stage 1: full training on the real-proxy domain.
  Rng init_rng(tagged_seed(seed, kTagStage1Init));
  TinyNet stage1 =
      TinyNet::make_default(num_classes, config.net, input_size, init_rng);
  Rng batch_rng(tagged_seed(seed, kTagStage1Batches));
  FreezeSchedule nothing_frozen;
  train(stage1, real_train, nothing_frozen, config.train, batch_rng);
  double stage1_acc = accuracy(stage1, real_test);

  SeedOutcome outcome;
  const TinyNet* finetuned_net = nullptr;
  std::vector<TinyNet> stage2_nets;
  stage2_nets.reserve(config.schedules.size());

  for (size_t si = 0; si < config.schedules.size(); ++si) {
    const FreezeSchedule& schedule = config.schedules[si];
    TinyNet net = stage1;
    Rng head_rng(tagged_seed(seed, kTagStage2Init + si));
    net.reinit_layers(net.feature_cut, head_rng);
    Rng rng2(tagged_seed(seed, kTagStage2Batches + si));
    double final_loss = train(net, synth_train, schedule, config.train, rng2);

    RunResult run;
    run.schedule = schedule;
    run.seed = seed;
    run.stage1_accuracy = stage1_acc;
    run.stage2_accuracy = accuracy(net, real_test);
    run.stage2_final_loss = final_loss;
    outcome.runs.push_back(run);
    stage2_nets.push_back(std::move(net));
    if (schedule.frozen_prefix_layers == 0 && !schedule.unfreeze_at_step)
      finetuned_net = &stage2_nets.back();
  }

  outcome.frozen_hist = feature_distance_histogram(pairs, stage1,
                                                   kHistogramBins);
  if (finetuned_net) {
    outcome.finetuned_hist =
        feature_distance_histogram(pairs, *finetuned_net, kHistogramBins);
    outcome.has_hist = true;
  }
  return outcome;
}

Histogram merge_histograms(const std::vector<Histogram>& parts) {
  // Medians/means of pooled distances cannot be recovered from binned
  // counts alone, so the merge is over per-seed summaries: counts are
  // re-binned onto the widest range, mean is count-weighted, median is the
  // median of per-seed medians.
  Histogram out;
  if (parts.empty()) return out;
  double hi = 0.0;
  for (const auto& h : parts) hi = std::max(hi, h.edges.back());
  int bins = static_cast<int>(parts[0].counts.size());
  out.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) out.edges[i] = hi * i / bins;
  out.counts.assign(bins, 0);
  long total = 0;
  double mean_acc = 0.0;
  std::vector<double> medians;
  for (const auto& h : parts) {
    long part_total = 0;
    for (size_t b = 0; b < h.counts.size(); ++b) {
      double center = 0.5 * (h.edges[b] + h.edges[b + 1]);
      int bin = std::min(bins - 1, static_cast<int>(center / hi * bins));
      out.counts[bin] += h.counts[b];
      part_total += h.counts[b];
    }
    mean_acc += h.mean * part_total;
    total += part_total;
    medians.push_back(h.median);
  }
  out.mean = total > 0 ? mean_acc / total : 0.0;
  std::sort(medians.begin(), medians.end());
  size_t n = medians.size();
  out.median = n % 2 == 1 ? medians[n / 2]
                          : 0.5 * (medians[n / 2 - 1] + medians[n / 2]);
  return out;
}

}  // namespace

ExperimentReport run_transfer_experiment(const ExperimentConfig& config,
                                         int jobs) {
  config.validate();
  if (jobs < 1) jobs = 1;
  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::string error;
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= config.seeds.size()) break;
      try {
        outcomes[i] = run_seed(config, config.seeds[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error.empty()) error = e.what();
      }
    }
  };
  if (jobs == 1 || config.seeds.size() == 1) {
    worker();
  } else {
    int nthreads = std::min(jobs, static_cast<int>(config.seeds.size()));
    std::vector<std::thread> threads;
    for (int t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (!error.empty()) throw Error(ErrorCode::kGenerationFailed, error);

  ExperimentReport report;
  std::vector<Histogram> frozen_parts, finetuned_parts;
  for (const auto& o : outcomes) {
    report.runs.insert(report.runs.end(), o.runs.begin(), o.runs.end());
    frozen_parts.push_back(o.frozen_hist);
    if (o.has_hist) finetuned_parts.push_back(o.finetuned_hist);
  }
  report.frozen_histogram = merge_histograms(frozen_parts);
  if (!finetuned_parts.empty()) {
    report.finetuned_histogram = merge_histograms(finetuned_parts);
    report.has_histograms = true;
  }
  return report;
}

double ExperimentReport::mean_stage2_accuracy(
    const std::string& schedule_label) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : runs) {
    if (r.schedule.label() != schedule_label) continue;
    sum += r.stage2_accuracy;
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

nlohmann::ordered_json Histogram::to_json() const {
  return {{"edges", edges},
          {"counts", counts},
          {"mean", mean},
          {"median", median}};
}

nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  auto runs_json = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json s;
    s["frozen_prefix_layers"] = r.schedule.frozen_prefix_layers;
    if (r.schedule.unfreeze_at_step)
      s["unfreeze_at_step"] = *r.schedule.unfreeze_at_step;
    runs_json.push_back({{"schedule", s},
                         {"label", r.schedule.label()},
                         {"seed", r.seed},
                         {"stage1_accuracy", r.stage1_accuracy},
                         {"stage2_accuracy", r.stage2_accuracy},
                         {"stage2_final_loss", r.stage2_final_loss}});
  }
  j["runs"] = runs_json;

  // Per-schedule aggregate in first-appearance order.
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    std::string l = r.schedule.label();
    if (std::find(labels.begin(), labels.end(), l) == labels.end())
      labels.push_back(l);
  }
  auto summary = nlohmann::ordered_json::array();
  for (const auto& l : labels) {
    std::vector<double> accs;
    for (const auto& r : runs)
      if (r.schedule.label() == l) accs.push_back(r.stage2_accuracy);
    summary.push_back({{"label", l},
                       {"mean_accuracy", mean_stage2_accuracy(l)},
                       {"accuracies", accs}});
  }
  j["schedule_summary"] = summary;
  if (has_histograms) {
    j["distance_histograms"] = {{"frozen", frozen_histogram.to_json()},
                                {"finetuned", finetuned_histogram.to_json()}};
  } else {
    j["distance_histograms"] = {{"frozen", frozen_histogram.to_json()}};
  }
  return j;
}

std::string ExperimentReport::to_text() const {
  std::string out;
  char buf[256];
  out += "schedule                         mean_acc  per-seed accuracies\n";
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    std::string l = r.schedule.label();
    if (std::find(labels.begin(), labels.end(), l) == labels.end())
      labels.push_back(l);
  }
  for (const auto& l : labels) {
    std::string accs;
    for (const auto& r : runs) {
      if (r.schedule.label() != l) continue;
      std::snprintf(buf, sizeof(buf), " %.3f", r.stage2_accuracy);
      accs += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-32s %.3f    %s\n", l.c_str(),
                  mean_stage2_accuracy(l), accs.c_str());
    out += buf;
  }
  if (!runs.empty()) {
    std::snprintf(buf, sizeof(buf), "stage-1 real-proxy accuracy: %.3f\n",
                  runs.front().stage1_accuracy);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "feature distance median (frozen extractor):    %.4f\n",
                frozen_histogram.median);
  out += buf;
  if (has_histograms) {
    std::snprintf(buf, sizeof(buf),
                  "feature distance median (finetuned extractor): %.4f\n",
                  finetuned_histogram.median);
    out += buf;
  }
  return out;
}

AblationReport run_ablation(const ExperimentConfig& config, int jobs) {
  config.validate();
  if (jobs < 1) jobs = 1;
  uint64_t seed = config.seeds.front();
  int num_classes = static_cast<int>(config.base.objects.size());
  int input_size = config.base.camera.width;

  CropSet real_train = generate_domain_crops(
      config, config.real_proxy, tagged_seed(seed, kTagRealTrain),
      config.train_crops_per_domain);
  CropSet real_test =
      generate_domain_crops(config, config.real_proxy,
                            tagged_seed(seed, kTagRealTest), config.test_crops);

  Rng init_rng(tagged_seed(seed, kTagStage1Init));
  TinyNet stage1 =
      TinyNet::make_default(num_classes, config.net, input_size, init_rng);
  Rng batch_rng(tagged_seed(seed, kTagStage1Batches));
  train(stage1, real_train, FreezeSchedule{}, config.train, batch_rng);

  FreezeSchedule frozen;
  frozen.frozen_prefix_layers = stage1.feature_cut;

  AblationReport report;
  report.rows.resize(16);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string error;
  auto worker = [&]() {
    for (;;) {
      int combo = next.fetch_add(1);
      if (combo >= 16) break;
      try {
        AblationRow row;
        row.blur = combo & 1;
        row.noise = combo & 2;
        row.light_jitter = combo & 4;
        row.cluttered_background = combo & 8;
        DomainSpec domain = config.plain_synthetic;
        domain.name = "ablate";
        domain.light_jitter = row.light_jitter;
        domain.noise_sigma_lo = row.noise ? config.real_proxy.noise_sigma_lo : 0;
        domain.noise_sigma_hi = row.noise ? config.real_proxy.noise_sigma_hi : 0;
        domain.blur_sigma_lo = row.blur ? config.real_proxy.blur_sigma_lo : 0;
        domain.blur_sigma_hi = row.blur ? config.real_proxy.blur_sigma_hi : 0;
        domain.background = row.cluttered_background
                                ? BackgroundMode::kProcedural
                                : BackgroundMode::kConstantColor;
        domain.channel_swap =
            row.cluttered_background && config.real_proxy.channel_swap;
        CropSet synth_train = generate_domain_crops(
            config, domain,
            tagged_seed(seed, kTagSynthTrain + 0x100 + combo),
            config.train_crops_per_domain);
        TinyNet net = stage1;
        Rng head_rng(tagged_seed(seed, kTagStage2Init + 0x100 + combo));
        net.reinit_layers(net.feature_cut, head_rng);
        Rng rng2(tagged_seed(seed, kTagStage2Batches + 0x100 + combo));
        train(net, synth_train, frozen, config.train, rng2);
        row.accuracy = accuracy(net, real_test);
        report.rows[combo] = row;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error.empty()) error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < std::min(jobs, 16); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (!error.empty()) throw Error(ErrorCode::kGenerationFailed, error);

  for (const auto& row : report.rows)
    if (row.blur && row.noise && row.light_jitter && row.cluttered_background)
      report.baseline_accuracy = row.accuracy;
  return report;
}

nlohmann::ordered_json AblationReport::to_json() const {
  nlohmann::ordered_json j;
  auto rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"blur", r.blur},
                         {"noise", r.noise},
                         {"light_jitter", r.light_jitter},
                         {"cluttered_background", r.cluttered_background},
                         {"accuracy", r.accuracy},
                         {"delta_vs_baseline", r.accuracy - baseline_accuracy}});
  j["rows"] = rows_json;
  j["baseline_accuracy"] = baseline_accuracy;
  return j;
}

std::string AblationReport::to_text() const {
  std::string out =
      "blur  noise  light_jitter  cluttered_bg  accuracy  delta\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-5s %-6s %-13s %-13s %.3f    %+.3f\n",
                  r.blur ? "on" : "off", r.noise ? "on" : "off",
                  r.light_jitter ? "on" : "off",
                  r.cluttered_background ? "on" : "off", r.accuracy,
                  r.accuracy - baseline_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace synthdet
