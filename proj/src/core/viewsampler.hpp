#pragma once

#include <vector>

#include "core/geometry.hpp"

namespace synthdet {

// Out-of-plane viewing directions: vertices of a recursively subdivided
// icosahedron, projected onto the unit sphere.
struct ViewSphere {
  int level = 0;
  std::vector<Vec3> directions;
};

struct PoseGridSpec {
  int subdivision_level = 2;
  int in_plane_count = 1;
  double in_plane_lo_deg = 0.0;
  double in_plane_hi_deg = 360.0;
  double distance_min = 1.0;  // meters
  double distance_max = 1.0;
  int scale_levels = 1;
  bool hemisphere_only = false;

  void validate() const;
};

// Starts from the 12-vertex icosahedron (poles on +-Z); each pass splits
// every triangle at edge midpoints and reprojects to the sphere. Vertex
// count is 10*4^level + 2. Throws LevelTooLarge above level 6.
ViewSphere subdivide_icosahedron(int level);

// Geometric spacing d_i = d_min * (d_max/d_min)^(i/(n-1)).
std::vector<double> log_distances(double d_min, double d_max, int n);

// Pose with the object origin at (0,0,distance) in the camera frame and
// the camera viewing along `direction` (unit vector, object frame), then
// rotated by `in_plane` radians about the optical axis. R maps direction
// to camera +Z. Up convention: world +Z, fallback +X when |direction.z|
// exceeds 1 - 1e-6.
Pose look_at_pose(const Vec3& direction, double in_plane, double distance);

// Cartesian product viewsphere x in-plane x distance, in deterministic
// order: sphere-vertex index major, then in-plane index, then distance
// index. hemisphere_only keeps directions with z >= 0.
std::vector<Pose> enumerate_poses(const PoseGridSpec& spec);

// In-plane angles in radians for the spec's range/count. A full-turn range
// (hi - lo == 360) is sampled with an exclusive endpoint, anything else
// inclusively.
std::vector<double> in_plane_angles(const PoseGridSpec& spec);

}  // namespace synthdet
