#include "core/transferlab.hpp"

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "doctest.h"

using namespace synthdet;

namespace {

// Small experiment configuration: 3 classes, 32x32 crops, short training.
// Sized for test speed, not for the directional result (that lives in the
// acceptance suite with the shipped config).
ExperimentConfig tiny_experiment() {
  ExperimentConfig x;
  GenerationConfig& g = x.base;
  for (int c = 0; c < 3; ++c) {
    ObjectSpec obj;
    obj.class_id = c + 1;
    obj.class_name = "obj" + std::to_string(c);
    obj.primitive = c == 0   ? PrimitiveKind::kCube
                    : c == 1 ? PrimitiveKind::kCone
                             : PrimitiveKind::kTorus;
    obj.primitive_params.size = 0.1;
    obj.primitive_params.radius = c == 2 ? 0.03 : 0.06;
    obj.primitive_params.height = 0.12;
    obj.primitive_params.major_radius = 0.07;
    obj.primitive_params.segments = 12;
    obj.primitive_params.rings = 8;
    obj.color = Vec3{0.3 + 0.3 * c, 0.8 - 0.3 * c, 0.4};
    g.objects.push_back(obj);
  }
  g.camera.fx = g.camera.fy = 40;
  g.camera.cx = g.camera.cy = 16;
  g.camera.width = g.camera.height = 32;
  g.pose_grid.subdivision_level = 0;
  g.pose_grid.in_plane_count = 4;
  g.pose_grid.distance_min = 0.35;
  g.pose_grid.distance_max = 0.6;
  g.pose_grid.scale_levels = 2;
  g.jitter.material_jitter = 0.1;
  g.jitter.light_color_jitter = 0.1;
  g.jitter.light_cone_angle_deg = 20;
  g.compose.noise_sigma_hi = 6;
  g.compose.blur_sigma_lo = 0.5;
  g.compose.blur_sigma_hi = 1.5;
  g.compose.channel_swap = true;
  g.backgrounds.procedural.count = 4;
  g.backgrounds.procedural.width = 48;
  g.backgrounds.procedural.height = 48;
  g.sample_count = 1;
  g.output_dir = "unused";

  x.real_proxy.name = "real_proxy";
  x.real_proxy.light_jitter = true;
  x.real_proxy.noise_sigma_hi = 6;
  x.real_proxy.blur_sigma_lo = 0.5;
  x.real_proxy.blur_sigma_hi = 1.5;
  x.real_proxy.background = BackgroundMode::kProcedural;
  x.real_proxy.channel_swap = true;

  x.plain_synthetic.name = "plain_synthetic";
  x.plain_synthetic.light_jitter = false;
  x.plain_synthetic.background = BackgroundMode::kConstantColor;

  x.net.conv1_out = 6;
  x.net.conv2_out = 8;
  x.train.steps = 40;
  x.train.batch_size = 8;
  x.train.learning_rate = 0.05;
  FreezeSchedule frozen;
  frozen.frozen_prefix_layers = 4;
  x.schedules = {frozen, FreezeSchedule{}};
  x.seeds = {1};
  x.train_crops_per_domain = 60;
  x.test_crops = 30;
  x.pair_count = 20;
  return x;
}

}  // namespace

TEST_SUITE("transferlab") {

TEST_CASE("generate_domain_crops: labels round-robin and crops differ") {
  ExperimentConfig x = tiny_experiment();
  CropSet crops = generate_domain_crops(x, x.real_proxy, 5, 9);
  REQUIRE(crops.images.size() == 9);
  for (int i = 0; i < 9; ++i) CHECK(crops.labels[i] == i % 3);
  CHECK(!(crops.images[0] == crops.images[3]));
  // Deterministic regeneration.
  CropSet again = generate_domain_crops(x, x.real_proxy, 5, 9);
  for (int i = 0; i < 9; ++i) CHECK(crops.images[i] == again.images[i]);
}

TEST_CASE("constant background domain uses one flat color per crop") {
  ExperimentConfig x = tiny_experiment();
  CropSet crops = generate_domain_crops(x, x.plain_synthetic, 6, 3);
  // Background pixels (outside the object) share a single color per crop.
  const Image8& img = crops.images[0];
  uint8_t r = img.at(0, 0, 0), g = img.at(0, 0, 1), b = img.at(0, 0, 2);
  int border_matches = 0, border_total = 0;
  for (int xx = 0; xx < img.width; ++xx) {
    for (int yy : {0, img.height - 1}) {
      ++border_total;
      if (img.at(xx, yy, 0) == r && img.at(xx, yy, 1) == g &&
          img.at(xx, yy, 2) == b)
        ++border_matches;
    }
  }
  // The object sits fully inside, so the border is pure background.
  CHECK(border_matches == border_total);
}

TEST_CASE("feature pairs share background, placement and pose") {
  // With every appearance toggle off the two sides collapse to the same
  // bytes; that is only possible if background, offset and pose agree.
  ExperimentConfig x = tiny_experiment();
  x.base.jitter = JitterSpec{};
  x.real_proxy.noise_sigma_lo = x.real_proxy.noise_sigma_hi = 0;
  x.real_proxy.blur_sigma_lo = x.real_proxy.blur_sigma_hi = 0;
  auto pairs = generate_feature_pairs(x, 7, 6);
  REQUIRE(pairs.size() == 6);
  for (const auto& [real_img, plain_img] : pairs)
    CHECK(real_img == plain_img);

  // With the full pipeline the object appearance differs.
  ExperimentConfig y = tiny_experiment();
  auto noisy_pairs = generate_feature_pairs(y, 7, 6);
  for (const auto& [real_img, plain_img] : noisy_pairs) {
    long diff = 0;
    for (size_t i = 0; i < real_img.data.size(); ++i)
      if (real_img.data[i] != plain_img.data[i]) ++diff;
    CHECK(diff > 0);
  }
}

TEST_CASE("feature_distance_histogram: identical pairs collapse to zero") {
  ExperimentConfig x = tiny_experiment();
  CropSet crops = generate_domain_crops(x, x.real_proxy, 8, 4);
  std::vector<std::pair<Image8, Image8>> pairs;
  for (const auto& img : crops.images) pairs.emplace_back(img, img);
  Rng rng(1);
  TinyNet net = TinyNet::make_default(3, x.net, 32, rng);
  Histogram h = feature_distance_histogram(pairs, net, 8);
  CHECK(h.mean == 0.0);
  CHECK(h.median == 0.0);
  CHECK(h.counts[0] == 4);
  long total = 0;
  for (long c : h.counts) total += c;
  CHECK(total == 4);
}

TEST_CASE("feature_distance_histogram: distances are norm-homogeneous") {
  // Scaling every extractor activation by lambda scales distances by
  // exactly lambda; realized by scaling the last extractor conv weights
  // (relu is positively homogeneous).
  ExperimentConfig x = tiny_experiment();
  auto pairs = generate_feature_pairs(x, 9, 5);
  Rng rng(2);
  TinyNet net = TinyNet::make_default(3, x.net, 32, rng);
  Histogram h1 = feature_distance_histogram(pairs, net, 4);
  const double lambda = 3.0;
  for (auto& w : net.layers[2].weights) w *= lambda;
  for (auto& b : net.layers[2].bias) b *= lambda;
  Histogram h2 = feature_distance_histogram(pairs, net, 4);
  CHECK(h2.mean == doctest::Approx(lambda * h1.mean).epsilon(1e-9));
  CHECK(h2.median == doctest::Approx(lambda * h1.median).epsilon(1e-9));
}

TEST_CASE("histogram counts equal the pair count and distances are >= 0") {
  ExperimentConfig x = tiny_experiment();
  auto pairs = generate_feature_pairs(x, 10, 12);
  Rng rng(3);
  TinyNet net = TinyNet::make_default(3, x.net, 32, rng);
  Histogram h = feature_distance_histogram(pairs, net, 6);
  long total = 0;
  for (long c : h.counts) total += c;
  CHECK(total == 12);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.mean >= 0.0);
}

TEST_CASE("run_transfer_experiment: report schema and degenerate domains") {
  // With plain_synthetic == real_proxy there is no domain gap; the frozen
  // schedule's stage-2 accuracy lands near stage-1 accuracy.
  ExperimentConfig x = tiny_experiment();
  x.plain_synthetic = x.real_proxy;
  x.plain_synthetic.name = "plain_synthetic";
  ExperimentReport report = run_transfer_experiment(x, 1);
  REQUIRE(report.runs.size() == 2);  // 2 schedules x 1 seed
  for (const auto& run : report.runs) {
    CHECK(run.stage2_accuracy >= 0.0);
    CHECK(run.stage2_accuracy <= 1.0);
    CHECK(run.stage1_accuracy >= 0.0);
    CHECK(run.stage1_accuracy <= 1.0);
  }
  CHECK(report.has_histograms);
  // JSON rendering carries one row per run plus both histograms.
  auto j = report.to_json();
  CHECK(j["runs"].size() == 2);
  CHECK(j["distance_histograms"].contains("frozen"));
  CHECK(j["distance_histograms"].contains("finetuned"));
  CHECK(!report.to_text().empty());
}

TEST_CASE("run_transfer_experiment: jobs fan-out is output-invariant") {
  ExperimentConfig x = tiny_experiment();
  x.seeds = {1, 2};
  x.train_crops_per_domain = 30;
  x.test_crops = 15;
  x.pair_count = 8;
  x.train.steps = 15;
  ExperimentReport a = run_transfer_experiment(x, 1);
  ExperimentReport b = run_transfer_experiment(x, 2);
  REQUIRE(a.runs.size() == b.runs.size());
  for (size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].seed == b.runs[i].seed);
    CHECK(a.runs[i].stage2_accuracy == b.runs[i].stage2_accuracy);
    CHECK(a.runs[i].stage1_accuracy == b.runs[i].stage1_accuracy);
  }
  CHECK(a.frozen_histogram.median == b.frozen_histogram.median);
}

TEST_CASE("ablation: 16 rows, every toggle combination present") {
  ExperimentConfig x = tiny_experiment();
  x.train_crops_per_domain = 24;
  x.test_crops = 12;
  x.train.steps = 10;
  AblationReport report = run_ablation(x, 2);
  REQUIRE(report.rows.size() == 16);
  std::set<int> combos;
  bool blur_off_present = false;
  for (const auto& r : report.rows) {
    combos.insert((r.blur ? 1 : 0) | (r.noise ? 2 : 0) |
                  (r.light_jitter ? 4 : 0) |
                  (r.cluttered_background ? 8 : 0));
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    if (!r.blur) blur_off_present = true;
  }
  CHECK(combos.size() == 16);
  CHECK(blur_off_present);
  auto j = report.to_json();
  CHECK(j["rows"].size() == 16);
  CHECK(!report.to_text().empty());
}

}  // TEST_SUITE
