#include "core/tinynet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace synthdet {

namespace {

Layer make_conv(int kh, int kw, int in_ch, int out_ch, int stride) {
  Layer l;
  l.kind = LayerKind::kConv;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.stride = stride;
  l.weights.assign(static_cast<size_t>(out_ch) * in_ch * kh * kw, 0.0);
  l.bias.assign(out_ch, 0.0);
  l.weight_velocity.assign(l.weights.size(), 0.0);
  l.bias_velocity.assign(l.bias.size(), 0.0);
  return l;
}

Layer make_linear(int in_features, int out_features) {
  Layer l;
  l.kind = LayerKind::kLinear;
  l.in_features = in_features;
  l.out_features = out_features;
  l.weights.assign(static_cast<size_t>(out_features) * in_features, 0.0);
  l.bias.assign(out_features, 0.0);
  l.weight_velocity.assign(l.weights.size(), 0.0);
  l.bias_velocity.assign(l.bias.size(), 0.0);
  return l;
}

int conv_out_dim(int in, int kernel, int stride) {
  return (in - kernel) / stride + 1;
}

}  // namespace

void init_layer_params(Layer& layer, Rng& rng) {
  if (!layer.has_params()) return;
  int fan_in = layer.kind == LayerKind::kConv
                   ? layer.in_ch * layer.kernel_h * layer.kernel_w
                   : layer.in_features;
  double stddev = std::sqrt(2.0 / fan_in);
  for (auto& w : layer.weights) w = stddev * rng.gaussian();
  for (auto& b : layer.bias) b = 0.0;
  std::fill(layer.weight_velocity.begin(), layer.weight_velocity.end(), 0.0);
  std::fill(layer.bias_velocity.begin(), layer.bias_velocity.end(), 0.0);
}

TinyNet TinyNet::make_default(int num_classes, const NetSpec& spec,
                              int input_size, Rng& rng) {
  if (num_classes < 2)
    throw Error(ErrorCode::kInvalidParam, "need at least 2 classes");
  TinyNet net;
  net.input_h = net.input_w = input_size;
  net.input_c = 3;
  net.layers.push_back(make_conv(5, 5, 3, spec.conv1_out, 2));
  Layer relu;
  relu.kind = LayerKind::kRelu;
  net.layers.push_back(relu);
  net.layers.push_back(make_conv(3, 3, spec.conv1_out, spec.conv2_out, 2));
  net.layers.push_back(relu);
  Layer gap;
  gap.kind = LayerKind::kGlobalAvgPool;
  net.layers.push_back(gap);
  net.layers.push_back(make_linear(spec.conv2_out, num_classes));
  net.feature_cut = 4;
  for (auto& l : net.layers) init_layer_params(l, rng);

  int h = conv_out_dim(input_size, 5, 2);
  h = conv_out_dim(h, 3, 2);
  if (h < 1)
    throw Error(ErrorCode::kShapeMismatch, "input too small for the net");
  return net;
}

size_t TinyNet::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void TinyNet::reinit_layers(int from_layer, Rng& rng) {
  for (int i = std::max(0, from_layer); i < layer_count(); ++i)
    init_layer_params(layers[i], rng);
}

namespace {

Tensor3 conv_forward(const Layer& l, const Tensor3& in) {
  if (in.c != l.in_ch)
    throw Error(ErrorCode::kShapeMismatch, "conv input channel mismatch");
  int oh = conv_out_dim(in.h, l.kernel_h, l.stride);
  int ow = conv_out_dim(in.w, l.kernel_w, l.stride);
  if (oh < 1 || ow < 1)
    throw Error(ErrorCode::kShapeMismatch, "conv input too small");
  Tensor3 out(oh, ow, l.out_ch);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int o = 0; o < l.out_ch; ++o) {
        double acc = l.bias[o];
        const double* wbase =
            &l.weights[static_cast<size_t>(o) * l.in_ch * l.kernel_h *
                       l.kernel_w];
        for (int i = 0; i < l.in_ch; ++i)
          for (int dy = 0; dy < l.kernel_h; ++dy)
            for (int dx = 0; dx < l.kernel_w; ++dx)
              acc += wbase[(static_cast<size_t>(i) * l.kernel_h + dy) *
                               l.kernel_w +
                           dx] *
                     in.at(y * l.stride + dy, x * l.stride + dx, i);
        out.at(y, x, o) = acc;
      }
    }
  }
  return out;
}

Tensor3 apply_layer(const Layer& l, const Tensor3& in) {
  switch (l.kind) {
    case LayerKind::kConv:
      return conv_forward(l, in);
    case LayerKind::kRelu: {
      Tensor3 out = in;
      for (auto& v : out.data) v = std::max(v, 0.0);
      return out;
    }
    case LayerKind::kGlobalAvgPool: {
      Tensor3 out(1, 1, in.c);
      double scale = 1.0 / (static_cast<double>(in.h) * in.w);
      for (int ch = 0; ch < in.c; ++ch) {
        double acc = 0.0;
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) acc += in.at(y, x, ch);
        out.at(0, 0, ch) = acc * scale;
      }
      return out;
    }
    case LayerKind::kLinear: {
      if (static_cast<int>(in.size()) != l.in_features)
        throw Error(ErrorCode::kShapeMismatch, "linear input size mismatch");
      Tensor3 out(1, 1, l.out_features);
      for (int o = 0; o < l.out_features; ++o) {
        double acc = l.bias[o];
        const double* wrow =
            &l.weights[static_cast<size_t>(o) * l.in_features];
        for (int i = 0; i < l.in_features; ++i) acc += wrow[i] * in.data[i];
        out.data[o] = acc;
      }
      return out;
    }
  }
  throw Error(ErrorCode::kInvalidParam, "unknown layer kind");
}

}  // namespace

Tensor3 forward(const TinyNet& net, const Tensor3& input,
                std::optional<int> upto) {
  if (input.h != net.input_h || input.w != net.input_w ||
      input.c != net.input_c)
    throw Error(ErrorCode::kShapeMismatch, "input tensor shape mismatch");
  int end = upto.value_or(net.layer_count());
  if (end < 0 || end > net.layer_count())
    throw Error(ErrorCode::kInvalidParam, "layer index out of range");
  Tensor3 act = input;
  for (int i = 0; i < end; ++i) act = apply_layer(net.layers[i], act);
  return act;
}

Tensor3 image_to_tensor(const Image8& img) {
  if (img.channels != 3)
    throw Error(ErrorCode::kShapeMismatch, "expected an RGB image");
  Tensor3 t(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) t.at(y, x, c) = img.at(x, y, c) / 255.0;
  return t;
}

std::vector<double> softmax(const Tensor3& logits) {
  double m = *std::max_element(logits.data.begin(), logits.data.end());
  std::vector<double> p(logits.data.size());
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits.data[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double cross_entropy(const Tensor3& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.data.size()))
    throw Error(ErrorCode::kInvalidParam, "label out of range");
  double m = *std::max_element(logits.data.begin(), logits.data.end());
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - m);
  return std::log(sum) + m - logits.data[label];
}

namespace {

struct LayerGrads {
  std::vector<double> weights;
  std::vector<double> bias;
};

// Backprop through one layer; returns dLoss/dInput and accumulates
// parameter gradients.
Tensor3 backward_layer(const Layer& l, const Tensor3& in, const Tensor3& dout,
                       LayerGrads* grads) {
  switch (l.kind) {
    case LayerKind::kConv: {
      Tensor3 din(in.h, in.w, in.c);
      for (int y = 0; y < dout.h; ++y) {
        for (int x = 0; x < dout.w; ++x) {
          for (int o = 0; o < l.out_ch; ++o) {
            double g = dout.at(y, x, o);
            if (g == 0.0) continue;
            grads->bias[o] += g;
            size_t wb = static_cast<size_t>(o) * l.in_ch * l.kernel_h *
                        l.kernel_w;
            for (int i = 0; i < l.in_ch; ++i) {
              for (int dy = 0; dy < l.kernel_h; ++dy) {
                for (int dx = 0; dx < l.kernel_w; ++dx) {
                  size_t wi = wb + (static_cast<size_t>(i) * l.kernel_h + dy) *
                                       l.kernel_w +
                              dx;
                  int iy = y * l.stride + dy, ix = x * l.stride + dx;
                  grads->weights[wi] += g * in.at(iy, ix, i);
                  din.at(iy, ix, i) += g * l.weights[wi];
                }
              }
            }
          }
        }
      }
      return din;
    }
    case LayerKind::kRelu: {
      Tensor3 din = dout;
      for (size_t i = 0; i < din.data.size(); ++i)
        if (in.data[i] <= 0.0) din.data[i] = 0.0;
      return din;
    }
    case LayerKind::kGlobalAvgPool: {
      Tensor3 din(in.h, in.w, in.c);
      double scale = 1.0 / (static_cast<double>(in.h) * in.w);
      for (int ch = 0; ch < in.c; ++ch) {
        double g = dout.at(0, 0, ch) * scale;
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) din.at(y, x, ch) = g;
      }
      return din;
    }
    case LayerKind::kLinear: {
      Tensor3 din(in.h, in.w, in.c);
      for (int o = 0; o < l.out_features; ++o) {
        double g = dout.data[o];
        grads->bias[o] += g;
        size_t wb = static_cast<size_t>(o) * l.in_features;
        for (int i = 0; i < l.in_features; ++i) {
          grads->weights[wb + i] += g * in.data[i];
          din.data[i] += g * l.weights[wb + i];
        }
      }
      return din;
    }
  }
  throw Error(ErrorCode::kInvalidParam, "unknown layer kind");
}

// Mean cross-entropy over the batch plus parameter gradients.
double loss_and_grads(const TinyNet& net, const Batch& batch,
                      std::vector<LayerGrads>* grads) {
  grads->resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    (*grads)[i].weights.assign(net.layers[i].weights.size(), 0.0);
    (*grads)[i].bias.assign(net.layers[i].bias.size(), 0.0);
  }
  double total_loss = 0.0;
  double inv_batch = 1.0 / batch.inputs.size();
  for (size_t s = 0; s < batch.inputs.size(); ++s) {
    // Forward pass keeping every activation.
    std::vector<Tensor3> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(batch.inputs[s]);
    for (const auto& l : net.layers) acts.push_back(apply_layer(l, acts.back()));
    const Tensor3& logits = acts.back();
    total_loss += cross_entropy(logits, batch.labels[s]) * inv_batch;

    // dLoss/dLogits of the mean loss: (softmax - onehot) / batch.
    std::vector<double> p = softmax(logits);
    Tensor3 dout(1, 1, static_cast<int>(p.size()));
    for (size_t i = 0; i < p.size(); ++i) dout.data[i] = p[i] * inv_batch;
    dout.data[batch.labels[s]] -= inv_batch;

    for (int li = net.layer_count() - 1; li >= 0; --li)
      dout = backward_layer(net.layers[li], acts[li], dout, &(*grads)[li]);
  }
  return total_loss;
}

}  // namespace

double backward_and_step(TinyNet& net, const Batch& batch,
                         const FreezeSchedule& schedule,
                         const TrainConfig& config, int step_index) {
  if (batch.inputs.empty())
    throw Error(ErrorCode::kInvalidParam, "empty batch");
  if (batch.inputs.size() != batch.labels.size())
    throw Error(ErrorCode::kShapeMismatch, "batch label count mismatch");
  if (schedule.frozen_prefix_layers < 0 ||
      schedule.frozen_prefix_layers > net.layer_count())
    throw Error(ErrorCode::kInvalidParam, "frozen prefix out of range");

  std::vector<LayerGrads> grads;
  double loss = loss_and_grads(net, batch, &grads);
  if (!std::isfinite(loss))
    throw Error(ErrorCode::kNumericalOverflow,
                "non-finite training loss (diverged?)");

  int frozen_prefix = schedule.frozen_prefix_layers;
  if (schedule.unfreeze_at_step && step_index >= *schedule.unfreeze_at_step)
    frozen_prefix = 0;

  for (int li = 0; li < net.layer_count(); ++li) {
    if (li < frozen_prefix) continue;  // frozen: bit-identical, no velocity
    Layer& l = net.layers[li];
    if (!l.has_params()) continue;
    for (size_t i = 0; i < l.weights.size(); ++i) {
      l.weight_velocity[i] =
          config.momentum * l.weight_velocity[i] + grads[li].weights[i];
      l.weights[i] -= config.learning_rate * l.weight_velocity[i];
    }
    for (size_t i = 0; i < l.bias.size(); ++i) {
      l.bias_velocity[i] =
          config.momentum * l.bias_velocity[i] + grads[li].bias[i];
      l.bias[i] -= config.learning_rate * l.bias_velocity[i];
    }
  }
  return loss;
}

double min_abs_relu_preactivation(const TinyNet& net, const Tensor3& input) {
  double min_abs = std::numeric_limits<double>::infinity();
  Tensor3 act = input;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::kRelu)
      for (double v : act.data) min_abs = std::min(min_abs, std::abs(v));
    act = apply_layer(l, act);
  }
  return min_abs;
}

std::vector<double> flatten_params(const TinyNet& net) {
  return flatten_params_prefix(net, net.layer_count());
}

std::vector<double> flatten_params_prefix(const TinyNet& net, int layer_end) {
  std::vector<double> out;
  for (int i = 0; i < std::min(layer_end, net.layer_count()); ++i) {
    const Layer& l = net.layers[i];
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

double grad_check(TinyNet& net, const Tensor3& input, int label,
                  double epsilon, Rng& rng, int min_weights) {
  if (epsilon < 1e-7 || epsilon > 1e-3)
    throw Error(ErrorCode::kInvalidParam, "epsilon out of [1e-7, 1e-3]");

  Batch batch;
  batch.inputs.push_back(input);
  batch.labels.push_back(label);
  std::vector<LayerGrads> grads;
  loss_and_grads(net, batch, &grads);

  // Gather (layer, is_bias, index) slots and sample without replacement.
  struct Slot {
    int layer;
    bool is_bias;
    size_t index;
  };
  std::vector<Slot> slots;
  for (int li = 0; li < net.layer_count(); ++li) {
    for (size_t i = 0; i < net.layers[li].weights.size(); ++i)
      slots.push_back({li, false, i});
    for (size_t i = 0; i < net.layers[li].bias.size(); ++i)
      slots.push_back({li, true, i});
  }
  size_t want = std::min(slots.size(), static_cast<size_t>(min_weights));
  for (size_t i = 0; i < want; ++i) {
    size_t j = i + rng.uniform_int(slots.size() - i);
    std::swap(slots[i], slots[j]);
  }

  auto loss_at = [&]() { return cross_entropy(forward(net, input), label); };
  double max_rel = 0.0;
  for (size_t k = 0; k < want; ++k) {
    const Slot& s = slots[k];
    double* param = s.is_bias ? &net.layers[s.layer].bias[s.index]
                              : &net.layers[s.layer].weights[s.index];
    double analytic = s.is_bias ? grads[s.layer].bias[s.index]
                                : grads[s.layer].weights[s.index];
    double saved = *param;
    *param = saved + epsilon;
    double lp = loss_at();
    *param = saved - epsilon;
    double lm = loss_at();
    *param = saved;
    double fd = (lp - lm) / (2.0 * epsilon);
    double rel = std::abs(analytic - fd) /
                 std::max({std::abs(analytic), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace synthdet
