#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/vecmath.hpp"

namespace synthdet {

// Triangle mesh with per-vertex normals and colors. Positions are in
// meters (model units). Immutable by convention once built.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;   // unit length, one per vertex
  std::vector<Vec3> colors;    // RGB in [0,1], one per vertex
  std::vector<std::array<int, 3>> triangles;

  size_t vertex_count() const { return vertices.size(); }
  size_t triangle_count() const { return triangles.size(); }

  // Max distance of any vertex from the origin.
  double bounding_radius() const;

  // Signed volume via the divergence theorem (sum of signed tetrahedra).
  double signed_volume() const;

  // Throws InvalidParam if any invariant is violated (index range, unit
  // normals within 1e-6, colors within [0,1]).
  void validate() const;
};

// Rigid transform, object frame -> camera frame: q = R p + t.
struct Pose {
  Mat3 rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;

  void validate() const;
};

struct BBox2D {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  BBox2D clipped(int image_width, int image_height) const;
  bool contains(const BBox2D& inner) const {
    return inner.x_min >= x_min && inner.y_min >= y_min &&
           inner.x_max <= x_max && inner.y_max <= y_max;
  }
};

struct ProjectedPoint {
  double u = 0, v = 0;  // pixels
  double z = 0;         // meters, camera frame depth
};

// Pinhole projection of a single point. Throws BehindCamera when the
// camera-frame depth is <= 1e-9.
ProjectedPoint project_point(const CameraIntrinsics& K, const Pose& pose,
                             const Vec3& p);

// Tight bounds of all projected mesh vertices, clipped to the image.
BBox2D vertex_bbox(const Mesh& mesh, const Pose& pose,
                   const CameraIntrinsics& K);

// OBJ-subset reader: v (optionally with the "v x y z r g b" vertex-color
// extension), vn, f. Faces may be "i", "i//k" or "i/j/k" (texture index
// ignored) and polygons are fan-triangulated. Missing normals are computed
// as area-weighted averages of adjacent face normals.
Mesh load_mesh(const std::string& path);

// Writes the same subset with positions at 9 significant digits.
// save -> load -> save is byte-stable.
void save_mesh(const Mesh& mesh, const std::string& path);

enum class PrimitiveKind { kCube, kCylinder, kCone, kTorus, kIcosphere };

struct PrimitiveParams {
  // Dimensions (meters); which ones apply depends on the kind.
  double size = 1.0;         // cube edge, icosphere radius
  double radius = 0.5;       // cylinder/cone base radius, torus tube radius
  double height = 1.0;       // cylinder/cone height
  double major_radius = 1.0; // torus center-line radius
  // Tessellation.
  int segments = 16;         // around the axis / torus major circle
  int rings = 8;             // torus minor circle
  int subdivisions = 2;      // icosphere
};

PrimitiveKind primitive_kind_from_string(const std::string& name);

// Watertight primitive centered at the origin, white vertex color.
Mesh make_primitive_mesh(PrimitiveKind kind, const PrimitiveParams& params);

void set_uniform_color(Mesh& mesh, const Vec3& rgb);

// Per-vertex normals as the normalized area-weighted sum of adjacent face
// normals (face normal scaled by face area).
std::vector<Vec3> compute_vertex_normals(
    const std::vector<Vec3>& vertices,
    const std::vector<std::array<int, 3>>& triangles);

}  // namespace synthdet
