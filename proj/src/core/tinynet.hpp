#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"

namespace synthdet {

// Dense H x W x C activation block; vectors are 1 x 1 x C.
struct Tensor3 {
  int h = 0, w = 0, c = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_),
        data(static_cast<size_t>(h_) * w_ * c_, 0.0) {}

  double& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  size_t size() const { return data.size(); }
};

enum class LayerKind { kConv, kRelu, kGlobalAvgPool, kLinear };

struct Layer {
  LayerKind kind;
  // Convolution geometry (kind == kConv); valid padding.
  int kernel_h = 0, kernel_w = 0, in_ch = 0, out_ch = 0, stride = 1;
  // Linear geometry (kind == kLinear).
  int in_features = 0, out_features = 0;
  // Parameters: conv weights [out][in][kh][kw], linear weights [out][in].
  std::vector<double> weights;
  std::vector<double> bias;
  // Momentum state, same shapes. Untouched while the layer is frozen.
  std::vector<double> weight_velocity;
  std::vector<double> bias_velocity;

  bool has_params() const {
    return kind == LayerKind::kConv || kind == LayerKind::kLinear;
  }
};

// Small from-scratch convnet:
//   conv(5x5, 3->c1, s2) - relu - conv(3x3, c1->c2, s2) - relu - gap -
//   linear(c2 -> classes)
// Layers before feature_cut (default 4) form the "feature extractor",
// the rest the head. All math in 64-bit.
struct TinyNet {
  std::vector<Layer> layers;
  int input_h = 64, input_w = 64, input_c = 3;
  int feature_cut = 4;

  static TinyNet make_default(int num_classes, const NetSpec& spec,
                              int input_size, Rng& rng);

  int layer_count() const { return static_cast<int>(layers.size()); }
  size_t param_count() const;
  // Reinitialize layers [from_layer, end) in place (fresh head between
  // training stages).
  void reinit_layers(int from_layer, Rng& rng);
};

void init_layer_params(Layer& layer, Rng& rng);

// Layer-by-layer evaluation of layers [0, upto); upto == layer count (the
// default) yields logits, upto == feature_cut the extractor features.
Tensor3 forward(const TinyNet& net, const Tensor3& input,
                std::optional<int> upto = std::nullopt);

Tensor3 image_to_tensor(const Image8& img);  // scaled to [0,1]

// Softmax cross-entropy via log-sum-exp (uniform logits give exactly
// ln(num_classes)).
double cross_entropy(const Tensor3& logits, int label);
std::vector<double> softmax(const Tensor3& logits);

struct Batch {
  std::vector<Tensor3> inputs;
  std::vector<int> labels;
};

// One SGD-with-momentum step on the mean cross-entropy of the batch.
// Layers below schedule.frozen_prefix_layers receive no update (and no
// velocity update) until step_index >= unfreeze_at_step, when set. Returns
// the batch loss; throws NumericalOverflow when it is not finite.
double backward_and_step(TinyNet& net, const Batch& batch,
                         const FreezeSchedule& schedule,
                         const TrainConfig& config, int step_index);

// Analytic-vs-central-difference check over a random subset of at least
// min_weights parameters. Returns max |g_a - g_fd| / max(|g_a|,|g_fd|,1e-8).
double grad_check(TinyNet& net, const Tensor3& input, int label,
                  double epsilon, Rng& rng, int min_weights = 200);

// Smallest |pre-activation| entering any relu for this input; grad-check
// harnesses use it to keep finite differences away from relu kinks.
double min_abs_relu_preactivation(const TinyNet& net, const Tensor3& input);

// Flat views over every parameter of the net, used by snapshot tests.
std::vector<double> flatten_params(const TinyNet& net);
std::vector<double> flatten_params_prefix(const TinyNet& net, int layer_end);

}  // namespace synthdet
