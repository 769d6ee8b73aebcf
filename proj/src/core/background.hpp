#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"

namespace synthdet {

struct ProceduralBackgroundSpec {
  int count = 8;
  int width = 0;   // 0 means "derive from target" at load time
  int height = 0;
  int polygon_count = 40;
  int noise_cell = 16;       // value-noise lattice spacing, pixels
  double noise_amplitude = 24.0;  // intensity levels
  uint64_t seed = 1234;
};

// Read-only collection of RGB background images. Either loaded from a
// directory (sorted by filename for determinism) or generated procedurally
// so the repo needs no image assets. The procedural generator is plumbing,
// not part of the data-generation method: random colored polygons over a
// base color, plus bilinear value noise, give cheap clutter.
class BackgroundPool {
 public:
  static BackgroundPool from_directory(const std::string& dir);
  static BackgroundPool procedural(const ProceduralBackgroundSpec& spec);

  const std::vector<Image8>& images() const { return images_; }
  size_t size() const { return images_.size(); }
  const Image8& at(size_t i) const { return images_[i]; }

  // Every image must be croppable to target under every enabled rotation;
  // for 90/270 that means fitting a (target.h x target.w) crop.
  void validate_for_target(int target_width, int target_height,
                           bool rotations_enabled) const;

 private:
  std::vector<Image8> images_;
};

Image8 generate_procedural_background(int width, int height,
                                      const ProceduralBackgroundSpec& spec,
                                      Rng& rng);

}  // namespace synthdet
