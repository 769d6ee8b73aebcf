#pragma once

#include <limits>
#include <vector>

#include "core/geometry.hpp"
#include "core/rng.hpp"

namespace synthdet {

struct PhongMaterial {
  Vec3 k_ambient{0.3, 0.3, 0.3};
  Vec3 k_diffuse{0.7, 0.7, 0.7};
  Vec3 k_specular{0.25, 0.25, 0.25};
  double shininess = 16.0;

  void validate() const;
};

struct LightSpec {
  // Camera frame, pointing from the surface toward the light. The default
  // direction is arbitrary but documented and configurable.
  Vec3 direction = normalized(Vec3{-0.3, 0.5, 0.8});
  Vec3 color{1, 1, 1};
  Vec3 ambient_color{1, 1, 1};

  void validate() const;
};

struct JitterSpec {
  double material_jitter = 0.0;     // relative half-range for k_a/k_d/k_s
  double light_color_jitter = 0.0;  // absolute half-range per channel
  double light_cone_angle_deg = 0.0;

  void validate() const;
};

// Pre-composite object layer. alpha is 255 exactly on covered pixels;
// depth is +inf and rgb is 0 wherever alpha is 0.
struct RenderLayer {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;    // width*height*3
  std::vector<uint8_t> alpha;  // width*height
  std::vector<double> depth;   // width*height, meters

  RenderLayer() = default;
  RenderLayer(int w, int h)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0),
        alpha(static_cast<size_t>(w) * h, 0),
        depth(static_cast<size_t>(w) * h,
              std::numeric_limits<double>::infinity()) {}

  size_t pixel_index(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }
};

// Phong shading for one surface point, per channel:
//   I = k_a * ambient * base                          (always)
//     + k_d * (N.L) * light * base                    (when N.L > 0)
//     + k_s * max(R.V, 0)^shininess * light           (when N.L > 0)
// with R the reflection of -L about N. Gating diffuse AND specular on
// N.L > 0 matches fixed-function GL and keeps back-lit surfaces pure
// ambient for every view direction. Result clamped to [0,1].
Vec3 phong_shade(const Vec3& normal, const Vec3& view, const LightSpec& light,
                 const PhongMaterial& material, const Vec3& base_color);

// Randomized perturbation of material and light parameters. Every call
// consumes the same draws in the same order (9 material factors, 3 light
// color shifts, 2 cone-direction draws), so a fixed rng state always maps
// to the same output.
std::pair<PhongMaterial, LightSpec> perturb_params(const PhongMaterial& material,
                                                   const LightSpec& light,
                                                   const JitterSpec& jitter,
                                                   Rng& rng);

struct RenderOptions {
  bool backface_culling = false;
};

// Software rasterization with z-buffer. Perspective-correct interpolation
// of normals and vertex colors, pixel centers at (x+0.5, y+0.5), top-left
// fill rule. Two-sided by default: normals are flipped toward the viewer
// unless backface_culling discards screen-clockwise triangles.
RenderLayer render(const Mesh& mesh, const Pose& pose,
                   const CameraIntrinsics& K, const PhongMaterial& material,
                   const LightSpec& light, const RenderOptions& options = {});

}  // namespace synthdet
