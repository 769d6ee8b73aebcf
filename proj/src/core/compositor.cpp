#include "core/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace synthdet {

void ComposeSpec::validate() const {
  if (noise_sigma_lo < 0 || noise_sigma_hi < noise_sigma_lo)
    throw Error(ErrorCode::kInvalidRange, "noise sigma range invalid");
  if (blur_sigma_lo < 0 || blur_sigma_hi < blur_sigma_lo)
    throw Error(ErrorCode::kInvalidRange, "blur sigma range invalid");
  if (placement == PlacementMode::kMinVisibility &&
      !(min_visibility > 0 && min_visibility <= 1))
    throw Error(ErrorCode::kInvalidRange, "min_visibility must be in (0,1]");
  for (int r : rotations)
    if (r != 0 && r != 90 && r != 180 && r != 270)
      throw Error(ErrorCode::kInvalidParam,
                  "rotations must be from {0,90,180,270}");
}

Image8 rotate90(const Image8& img) {
  Image8 out(img.height, img.width, img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(img.width - 1 - y, x, c);
  return out;
}

Image8 rotate_multiple_of_90(const Image8& img, int degrees) {
  switch (degrees) {
    case 0: return img;
    case 90: return rotate90(img);
    case 180: return rotate90(rotate90(img));
    case 270: return rotate90(rotate90(rotate90(img)));
    default:
      throw Error(ErrorCode::kInvalidParam, "rotation must be multiple of 90");
  }
}

Image8 flip_horizontal(const Image8& img) {
  Image8 out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

namespace {

// The 6 channel permutations in lexicographic order; out[c] = in[perm[c]].
constexpr int kChannelPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                     {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

Image8 permute_channels(const Image8& img, const int perm[3]) {
  Image8 out(img.width, img.height, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, perm[c]);
  return out;
}

Image8 crop(const Image8& img, int x0, int y0, int w, int h) {
  Image8 out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

}  // namespace

Image8 augment_background(const Image8& img, int target_width,
                          int target_height, const ComposeSpec& spec,
                          Rng& rng) {
  spec.validate();
  int rotation = 0;
  if (!spec.rotations.empty())
    rotation = spec.rotations[rng.uniform_int(spec.rotations.size())];
  // The crop happens before the rotation, so its size is the rotated
  // target footprint.
  int crop_w = (rotation == 90 || rotation == 270) ? target_height
                                                   : target_width;
  int crop_h = (rotation == 90 || rotation == 270) ? target_width
                                                   : target_height;
  if (img.width < crop_w || img.height < crop_h)
    throw Error(ErrorCode::kBackgroundTooSmall,
                "background cannot contain the target crop");
  int x0 = static_cast<int>(rng.uniform_int(img.width - crop_w + 1));
  int y0 = static_cast<int>(rng.uniform_int(img.height - crop_h + 1));
  Image8 out = crop(img, x0, y0, crop_w, crop_h);
  out = rotate_multiple_of_90(out, rotation);
  if (spec.flips && rng.uniform_int(2) == 1) out = flip_horizontal(out);
  if (spec.channel_swap) {
    int pi = static_cast<int>(rng.uniform_int(6));
    out = permute_channels(out, kChannelPerms[pi]);
  }
  return out;
}

namespace {

struct MaskExtent {
  int x0, y0, x1, y1;  // inclusive pixel bounds of nonzero alpha
  long total;          // nonzero pixel count
};

MaskExtent alpha_extent(const RenderLayer& layer) {
  MaskExtent e{layer.width, layer.height, -1, -1, 0};
  for (int y = 0; y < layer.height; ++y) {
    for (int x = 0; x < layer.width; ++x) {
      if (layer.alpha[layer.pixel_index(x, y)] == 0) continue;
      ++e.total;
      e.x0 = std::min(e.x0, x);
      e.y0 = std::min(e.y0, y);
      e.x1 = std::max(e.x1, x);
      e.y1 = std::max(e.y1, y);
    }
  }
  return e;
}

// Summed-area table of the alpha coverage for O(1) visible-pixel counts.
class CoverageSums {
 public:
  explicit CoverageSums(const RenderLayer& layer)
      : w_(layer.width), h_(layer.height),
        sums_(static_cast<size_t>(w_ + 1) * (h_ + 1), 0) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x)
        at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) +
                           (layer.alpha[static_cast<size_t>(y) * w_ + x] != 0);
  }

  // Count of covered layer pixels in [x0,x1) x [y0,y1), clamped.
  long count(int x0, int y0, int x1, int y1) const {
    x0 = std::clamp(x0, 0, w_);
    x1 = std::clamp(x1, 0, w_);
    y0 = std::clamp(y0, 0, h_);
    y1 = std::clamp(y1, 0, h_);
    if (x0 >= x1 || y0 >= y1) return 0;
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }

 private:
  long& at(int x, int y) { return sums_[static_cast<size_t>(y) * (w_ + 1) + x]; }
  long at(int x, int y) const {
    return sums_[static_cast<size_t>(y) * (w_ + 1) + x];
  }
  int w_, h_;
  std::vector<long> sums_;
};

}  // namespace

Placement place_object(const RenderLayer& layer, const Image8& background,
                       const ComposeSpec& spec, Rng& rng) {
  MaskExtent e = alpha_extent(layer);
  if (e.total == 0)
    throw Error(ErrorCode::kInvalidParam, "layer has no covered pixels");
  int bw = background.width, bh = background.height;

  if (spec.placement == PlacementMode::kFullInside) {
    int lo_dx = -e.x0, hi_dx = bw - 1 - e.x1;
    int lo_dy = -e.y0, hi_dy = bh - 1 - e.y1;
    if (hi_dx < lo_dx || hi_dy < lo_dy)
      throw Error(ErrorCode::kNoValidPlacement,
                  "object does not fit fully inside the frame");
    Placement p;
    p.dx = lo_dx + static_cast<int>(rng.uniform_int(hi_dx - lo_dx + 1));
    p.dy = lo_dy + static_cast<int>(rng.uniform_int(hi_dy - lo_dy + 1));
    p.visible_fraction = 1.0;
    return p;
  }

  // min_visibility: enumerate candidate offsets where the mask bbox still
  // touches the frame, count the valid ones with a summed-area table, then
  // draw an index uniformly and walk to it. Exactly uniform and O(1) per
  // candidate.
  CoverageSums sums(layer);
  int lo_dx = -e.x1, hi_dx = bw - 1 - e.x0;
  int lo_dy = -e.y1, hi_dy = bh - 1 - e.y0;
  auto visible = [&](int dx, int dy) {
    return sums.count(-dx, -dy, bw - dx, bh - dy);
  };
  double need = spec.min_visibility * static_cast<double>(e.total);
  long valid = 0;
  for (int dy = lo_dy; dy <= hi_dy; ++dy)
    for (int dx = lo_dx; dx <= hi_dx; ++dx)
      if (static_cast<double>(visible(dx, dy)) >= need) ++valid;
  if (valid == 0)
    throw Error(ErrorCode::kNoValidPlacement,
                "no offset satisfies the visibility constraint");
  long pick = static_cast<long>(rng.uniform_int(static_cast<uint64_t>(valid)));
  for (int dy = lo_dy; dy <= hi_dy; ++dy) {
    for (int dx = lo_dx; dx <= hi_dx; ++dx) {
      long vis = visible(dx, dy);
      if (static_cast<double>(vis) < need) continue;
      if (pick-- == 0) {
        Placement p;
        p.dx = dx;
        p.dy = dy;
        p.visible_fraction = static_cast<double>(vis) / e.total;
        return p;
      }
    }
  }
  throw Error(ErrorCode::kNoValidPlacement, "placement enumeration mismatch");
}

void add_object_noise(Image8& image, const Image8& mask, double sigma,
                      Rng& rng) {
  if (sigma < 0)
    throw Error(ErrorCode::kInvalidParam, "noise sigma must be >= 0");
  if (sigma == 0.0) return;
  if (image.width != mask.width || image.height != mask.height)
    throw Error(ErrorCode::kShapeMismatch, "mask/image size mismatch");
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (mask.at(x, y, 0) == 0) continue;
      for (int c = 0; c < image.channels; ++c) {
        double v = image.at(x, y, c) + sigma * rng.gaussian();
        image.at(x, y, c) = clamp_to_byte(v);
      }
    }
  }
}

void blur_object_boundary(Image8& image, const Image8& mask, double sigma) {
  if (sigma < 0)
    throw Error(ErrorCode::kInvalidParam, "blur sigma must be >= 0");
  if (sigma == 0.0) return;
  if (image.width != mask.width || image.height != mask.height)
    throw Error(ErrorCode::kShapeMismatch, "mask/image size mismatch");
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  if (radius == 0) return;
  int w = image.width, h = image.height, ch = image.channels;

  std::vector<double> kernel(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d)
    kernel[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));

  // Square dilation of the mask by the kernel radius; only these pixels
  // get blurred output.
  std::vector<uint8_t> region(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y, 0) == 0) continue;
      int yy0 = std::max(0, y - radius), yy1 = std::min(h - 1, y + radius);
      int xx0 = std::max(0, x - radius), xx1 = std::min(w - 1, x + radius);
      for (int yy = yy0; yy <= yy1; ++yy)
        for (int xx = xx0; xx <= xx1; ++xx)
          region[static_cast<size_t>(yy) * w + xx] = 1;
    }
  }

  // Separable convolution in double precision over the whole image; the
  // per-pass renormalization at image borders equals a renormalized 2D
  // product kernel because border support stays a product set.
  std::vector<double> horiz(static_cast<size_t>(w) * h * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0, wsum = 0;
        for (int d = -radius; d <= radius; ++d) {
          int xx = x + d;
          if (xx < 0 || xx >= w) continue;
          double k = kernel[d + radius];
          acc += k * image.at(xx, y, c);
          wsum += k;
        }
        horiz[(static_cast<size_t>(y) * w + x) * ch + c] = acc / wsum;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!region[static_cast<size_t>(y) * w + x]) continue;
      for (int c = 0; c < ch; ++c) {
        double acc = 0, wsum = 0;
        for (int d = -radius; d <= radius; ++d) {
          int yy = y + d;
          if (yy < 0 || yy >= h) continue;
          double k = kernel[d + radius];
          acc += k * horiz[(static_cast<size_t>(yy) * w + x) * ch + c];
          wsum += k;
        }
        image.at(x, y, c) = clamp_to_byte(acc / wsum);
      }
    }
  }
}

BBox2D mask_tight_bbox(const Image8& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y, 0) == 0) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0)
    throw Error(ErrorCode::kInvalidParam, "mask has no nonzero pixels");
  BBox2D box;
  box.x_min = x0;
  box.y_min = y0;
  box.x_max = x1 + 1;
  box.y_max = y1 + 1;
  return box;
}

CompositeSample compose_sample(const RenderLayer& layer,
                               const BackgroundPool& pool,
                               const ComposeSpec& spec, int class_id,
                               Rng& rng) {
  spec.validate();
  if (pool.size() == 0)
    throw Error(ErrorCode::kInvalidParam, "background pool is empty");

  size_t bg_index = rng.uniform_int(pool.size());
  Image8 background = augment_background(pool.at(bg_index), layer.width,
                                         layer.height, spec, rng);
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

  double noise_sigma = rng.uniform_real(spec.noise_sigma_lo,
                                        spec.noise_sigma_hi);
  add_object_noise(sample.image, sample.mask, noise_sigma, rng);
  double blur_sigma = rng.uniform_real(spec.blur_sigma_lo, spec.blur_sigma_hi);
  blur_object_boundary(sample.image, sample.mask, blur_sigma);

  sample.bbox = mask_tight_bbox(sample.mask);
  return sample;
}

}  // namespace synthdet
