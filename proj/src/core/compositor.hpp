#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/background.hpp"
#include "core/geometry.hpp"
#include "core/image.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"

namespace synthdet {

enum class PlacementMode { kFullInside, kMinVisibility };

struct ComposeSpec {
  double noise_sigma_lo = 0.0, noise_sigma_hi = 0.0;  // 8-bit intensity units
  double blur_sigma_lo = 0.0, blur_sigma_hi = 0.0;    // pixels
  PlacementMode placement = PlacementMode::kFullInside;
  double min_visibility = 0.25;  // used in kMinVisibility mode
  bool channel_swap = false;
  bool flips = false;
  std::vector<int> rotations;  // subset of {0, 90, 180, 270}

  void validate() const;
};

struct SampleProvenance {
  uint64_t seed = 0;
  uint64_t index = 0;
};

struct CompositeSample {
  Image8 image;       // RGB
  Image8 mask;        // single channel, 255 = object
  BBox2D bbox;        // tight bounds of mask nonzero pixels
  int class_id = 0;
  Pose pose;
  SampleProvenance provenance;
};

// 90-degree rotation with the convention fixed by out(x,y) = in(W-1-y, x);
// with image y pointing down this rotates the coordinate frame clockwise.
// [[a,b]] becomes [[b],[a]].
Image8 rotate90(const Image8& img);
Image8 rotate_multiple_of_90(const Image8& img, int degrees);
Image8 flip_horizontal(const Image8& img);

// Crop + rotation + flip + channel permutation, in that pixel order. The
// rotation is drawn first so the crop can use the pre-rotation size.
// Draw order: rotation choice (if any enabled), crop x, crop y, flip coin
// (if enabled), permutation index (if enabled).
Image8 augment_background(const Image8& img, int target_width,
                          int target_height, const ComposeSpec& spec,
                          Rng& rng);

struct Placement {
  int dx = 0, dy = 0;
  double visible_fraction = 1.0;
};

// Uniform draw over all offsets satisfying the placement constraint.
// Offsets translate layer pixel (x,y) to background pixel (x+dx, y+dy).
Placement place_object(const RenderLayer& layer, const Image8& background,
                       const ComposeSpec& spec, Rng& rng);

// Gaussian noise (std sigma) added per channel to pixels where mask != 0;
// everything else is untouched. sigma == 0 consumes no randomness.
void add_object_noise(Image8& image, const Image8& mask, double sigma,
                      Rng& rng);

// Gaussian blur (kernel radius ceil(3*sigma), truncated, renormalized)
// written only into {mask dilated by the kernel radius}; sources may come
// from anywhere in the image, so the paste seam is smoothed into the
// background. sigma == 0 is the identity.
void blur_object_boundary(Image8& image, const Image8& mask, double sigma);

// Mask tight bounds as a pixel-aligned box ([x, x+1) per covered pixel).
// Throws InvalidParam when the mask is empty.
BBox2D mask_tight_bbox(const Image8& mask);

// Full pipeline: pick background uniformly -> augment -> place -> paste ->
// noise (sigma uniform in range) -> boundary blur (sigma uniform in range)
// -> mask and bbox from the placed alpha.
CompositeSample compose_sample(const RenderLayer& layer,
                               const BackgroundPool& pool,
                               const ComposeSpec& spec, int class_id,
                               Rng& rng);

}  // namespace synthdet
