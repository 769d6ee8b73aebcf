#include "core/viewsampler.hpp"

#include <cmath>
#include <map>

#include "core/error.hpp"

namespace synthdet {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void PoseGridSpec::validate() const {
  if (subdivision_level < 0 || subdivision_level > 6)
    throw Error(ErrorCode::kLevelTooLarge,
                "subdivision_level must be in [0,6]");
  if (in_plane_count < 1)
    throw Error(ErrorCode::kInvalidParam, "in_plane_count must be >= 1");
  if (!(distance_min > 0))
    throw Error(ErrorCode::kInvalidRange, "distance_min must be > 0");
  if (distance_max < distance_min)
    throw Error(ErrorCode::kInvalidRange, "distance_max < distance_min");
  if (scale_levels < 1)
    throw Error(ErrorCode::kInvalidParam, "scale_levels must be >= 1");
  if (scale_levels == 1 && distance_max != distance_min)
    throw Error(ErrorCode::kInvalidRange,
                "scale_levels == 1 requires distance_min == distance_max");
  if (in_plane_hi_deg < in_plane_lo_deg)
    throw Error(ErrorCode::kInvalidRange, "in-plane range is inverted");
}

ViewSphere subdivide_icosahedron(int level) {
  if (level < 0)
    throw Error(ErrorCode::kInvalidParam, "level must be >= 0");
  if (level > 6)
    throw Error(ErrorCode::kLevelTooLarge,
                "subdivision level > 6 would allocate too many vertices");

  // Pole-aligned icosahedron: +Z pole, upper/lower rings of 5 at
  // latitude atan(1/2), -Z pole.
  std::vector<Vec3> v;
  v.push_back({0, 0, 1});
  double lat = std::atan(0.5);
  double z = std::sin(lat), r = std::cos(lat);
  for (int i = 0; i < 5; ++i) {
    double a = 2.0 * kPi * i / 5.0;
    v.push_back({r * std::cos(a), r * std::sin(a), z});
  }
  for (int i = 0; i < 5; ++i) {
    double a = 2.0 * kPi * i / 5.0 + kPi / 5.0;
    v.push_back({r * std::cos(a), r * std::sin(a), -z});
  }
  v.push_back({0, 0, -1});

  std::vector<std::array<int, 3>> tris;
  for (int i = 0; i < 5; ++i) {
    int j = (i + 1) % 5;
    int u0 = 1 + i, u1 = 1 + j;
    int l0 = 6 + i, l1 = 6 + j;
    tris.push_back({0, u0, u1});
    tris.push_back({u0, l0, u1});
    tris.push_back({u1, l0, l1});
    tris.push_back({11, l1, l0});
  }

  for (int pass = 0; pass < level; ++pass) {
    // Midpoints are deduplicated per edge so shared edges introduce a
    // single new vertex; creation order is the deterministic output order.
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      int idx = static_cast<int>(v.size());
      v.push_back(normalized(v[a] + v[b]));
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      int m01 = mid(t[0], t[1]);
      int m12 = mid(t[1], t[2]);
      int m20 = mid(t[2], t[0]);
      next.push_back({t[0], m01, m20});
      next.push_back({t[1], m12, m01});
      next.push_back({t[2], m20, m12});
      next.push_back({m01, m12, m20});
    }
    tris = std::move(next);
  }

  ViewSphere sphere;
  sphere.level = level;
  sphere.directions = std::move(v);
  return sphere;
}

std::vector<double> log_distances(double d_min, double d_max, int n) {
  if (!(d_min > 0) || d_max < d_min)
    throw Error(ErrorCode::kInvalidRange, "need 0 < d_min <= d_max");
  if (n < 1) throw Error(ErrorCode::kInvalidRange, "n must be >= 1");
  if (n == 1) {
    if (d_min != d_max)
      throw Error(ErrorCode::kInvalidRange,
                  "n == 1 requires d_min == d_max");
    return {d_min};
  }
  std::vector<double> out(n);
  double ratio = d_max / d_min;
  for (int i = 0; i < n; ++i)
    out[i] = d_min * std::pow(ratio, static_cast<double>(i) / (n - 1));
  return out;
}

Pose look_at_pose(const Vec3& direction, double in_plane, double distance) {
  if (std::abs(norm(direction) - 1.0) > 1e-6)
    throw Error(ErrorCode::kNonUnitDirection,
                "direction must be unit length");
  if (!(distance > 0))
    throw Error(ErrorCode::kInvalidParam, "distance must be > 0");

  Vec3 up{0, 0, 1};
  if (std::abs(direction.z) > 1.0 - 1e-6) up = Vec3{1, 0, 0};
  // Camera axes in object frame; rows of R. Forward (+Z) is the viewing
  // direction, so R * direction = (0,0,1).
  Vec3 z_axis = normalized(direction);
  Vec3 x_axis = normalized(cross(z_axis, up));
  Vec3 y_axis = cross(z_axis, x_axis);
  Mat3 base = Mat3::from_rows(x_axis, y_axis, z_axis);
  Pose pose;
  pose.rotation = rotation_z(in_plane) * base;
  pose.translation = {0, 0, distance};
  return pose;
}

std::vector<double> in_plane_angles(const PoseGridSpec& spec) {
  double lo = spec.in_plane_lo_deg * kPi / 180.0;
  double hi = spec.in_plane_hi_deg * kPi / 180.0;
  int n = spec.in_plane_count;
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  bool full_turn = std::abs((spec.in_plane_hi_deg - spec.in_plane_lo_deg) -
                            360.0) < 1e-12;
  double denom = full_turn ? n : (n - 1);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / denom;
  return out;
}

std::vector<Pose> enumerate_poses(const PoseGridSpec& spec) {
  spec.validate();
  ViewSphere sphere = subdivide_icosahedron(spec.subdivision_level);
  std::vector<double> angles = in_plane_angles(spec);
  std::vector<double> distances =
      log_distances(spec.distance_min, spec.distance_max, spec.scale_levels);
  std::vector<Pose> out;
  out.reserve(sphere.directions.size() * angles.size() * distances.size());
  for (const auto& dir : sphere.directions) {
    if (spec.hemisphere_only && dir.z < 0) continue;
    for (double a : angles)
      for (double d : distances) out.push_back(look_at_pose(dir, a, d));
  }
  return out;
}

}  // namespace synthdet
