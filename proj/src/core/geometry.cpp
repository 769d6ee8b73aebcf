#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"

namespace synthdet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kMinDepth = 1e-9;
}  // namespace

double Mesh::bounding_radius() const {
  double r2 = 0.0;
  for (const auto& v : vertices) r2 = std::max(r2, dot(v, v));
  return std::sqrt(r2);
}

double Mesh::signed_volume() const {
  double vol = 0.0;
  for (const auto& t : triangles) {
    const Vec3& a = vertices[t[0]];
    const Vec3& b = vertices[t[1]];
    const Vec3& c = vertices[t[2]];
    vol += dot(a, cross(b, c));
  }
  return vol / 6.0;
}

void Mesh::validate() const {
  if (normals.size() != vertices.size() || colors.size() != vertices.size())
    throw Error(ErrorCode::kInvalidParam,
                "mesh attribute counts do not match vertex count");
  int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || i >= n)
        throw Error(ErrorCode::kInvalidParam,
                    "triangle index " + std::to_string(i) + " out of range");
  for (const auto& nv : normals)
    if (std::abs(norm(nv) - 1.0) > 1e-6)
      throw Error(ErrorCode::kInvalidParam, "non-unit vertex normal");
  for (const auto& c : colors)
    if (c.x < 0 || c.x > 1 || c.y < 0 || c.y > 1 || c.z < 0 || c.z > 1)
      throw Error(ErrorCode::kInvalidParam, "vertex color out of [0,1]");
}

void CameraIntrinsics::validate() const {
  if (fx <= 0 || fy <= 0)
    throw Error(ErrorCode::kInvalidParam, "focal lengths must be positive");
  if (width < 1 || height < 1)
    throw Error(ErrorCode::kZeroAreaImage, "image size must be >= 1x1");
}

BBox2D BBox2D::clipped(int image_width, int image_height) const {
  BBox2D out;
  out.x_min = std::clamp(x_min, 0.0, static_cast<double>(image_width));
  out.x_max = std::clamp(x_max, 0.0, static_cast<double>(image_width));
  out.y_min = std::clamp(y_min, 0.0, static_cast<double>(image_height));
  out.y_max = std::clamp(y_max, 0.0, static_cast<double>(image_height));
  return out;
}

ProjectedPoint project_point(const CameraIntrinsics& K, const Pose& pose,
                             const Vec3& p) {
  Vec3 q = pose.apply(p);
  if (q.z <= kMinDepth)
    throw Error(ErrorCode::kBehindCamera,
                "point projects behind the camera (z = " +
                    std::to_string(q.z) + ")");
  return {K.fx * q.x / q.z + K.cx, K.fy * q.y / q.z + K.cy, q.z};
}

BBox2D vertex_bbox(const Mesh& mesh, const Pose& pose,
                   const CameraIntrinsics& K) {
  if (mesh.vertices.empty())
    throw Error(ErrorCode::kEmptyMesh, "vertex_bbox on empty mesh");
  BBox2D box;
  box.x_min = box.y_min = std::numeric_limits<double>::infinity();
  box.x_max = box.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& v : mesh.vertices) {
    ProjectedPoint pp = project_point(K, pose, v);
    box.x_min = std::min(box.x_min, pp.u);
    box.x_max = std::max(box.x_max, pp.u);
    box.y_min = std::min(box.y_min, pp.v);
    box.y_max = std::max(box.y_max, pp.v);
  }
  return box.clipped(K.width, K.height);
}

std::vector<Vec3> compute_vertex_normals(
    const std::vector<Vec3>& vertices,
    const std::vector<std::array<int, 3>>& triangles) {
  std::vector<Vec3> acc(vertices.size());
  for (const auto& t : triangles) {
    const Vec3& a = vertices[t[0]];
    const Vec3& b = vertices[t[1]];
    const Vec3& c = vertices[t[2]];
    // cross(b-a, c-a) has length 2*area, so summing it directly is the
    // area weighting.
    Vec3 fn = cross(b - a, c - a);
    for (int i : t) acc[i] += fn;
  }
  std::vector<Vec3> out(vertices.size());
  for (size_t i = 0; i < acc.size(); ++i) {
    double n = norm(acc[i]);
    out[i] = n > 1e-20 ? acc[i] / n : Vec3{0, 0, 1};
  }
  return out;
}

// ---------------------------------------------------------------------------
// OBJ subset I/O

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  throw Error(ErrorCode::kParseError,
              path + ":" + std::to_string(line) + ": " + what);
}

// Face token: "i", "i//k", or "i/j/k" (1-based; j ignored).
void parse_face_token(const std::string& tok, const std::string& path,
                      int line, int& vi, int& ni) {
  vi = ni = 0;
  size_t s1 = tok.find('/');
  try {
    if (s1 == std::string::npos) {
      vi = std::stoi(tok);
      return;
    }
    vi = std::stoi(tok.substr(0, s1));
    size_t s2 = tok.find('/', s1 + 1);
    if (s2 == std::string::npos) return;  // "i/j" - texture only, ignored
    std::string nstr = tok.substr(s2 + 1);
    if (!nstr.empty()) ni = std::stoi(nstr);
  } catch (const std::exception&) {
    parse_fail(path, line, "malformed face token '" + tok + "'");
  }
}

}  // namespace

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "no such file: " + path);

  std::vector<Vec3> positions, file_normals, file_colors;
  bool any_color = false;
  // Per emitted vertex: (position index, normal index or -1).
  std::vector<std::pair<int, int>> corner_refs;
  std::vector<std::array<int, 3>> corner_tris;

  std::string linebuf;
  int lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    std::istringstream ls(linebuf);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) parse_fail(path, lineno, "bad vertex record");
      double r, g, b;
      if (ls >> r >> g >> b) {
        if (r < 0 || r > 1 || g < 0 || g > 1 || b < 0 || b > 1)
          parse_fail(path, lineno, "vertex color out of [0,1]");
        file_colors.push_back({r, g, b});
        any_color = true;
      } else {
        file_colors.push_back({1, 1, 1});
      }
      positions.push_back({x, y, z});
    } else if (kind == "vn") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) parse_fail(path, lineno, "bad normal record");
      file_normals.push_back({x, y, z});
    } else if (kind == "f") {
      std::vector<std::pair<int, int>> face;
      std::string tok;
      while (ls >> tok) {
        int vi, ni;
        parse_face_token(tok, path, lineno, vi, ni);
        if (vi < 1 || vi > static_cast<int>(positions.size()))
          parse_fail(path, lineno,
                     "vertex index " + std::to_string(vi) + " out of range");
        if (ni < 0 || ni > static_cast<int>(file_normals.size()))
          parse_fail(path, lineno,
                     "normal index " + std::to_string(ni) + " out of range");
        face.emplace_back(vi - 1, ni - 1);
      }
      if (face.size() < 3) parse_fail(path, lineno, "face with < 3 vertices");
      for (size_t i = 1; i + 1 < face.size(); ++i) {
        int base = static_cast<int>(corner_refs.size());
        corner_refs.push_back(face[0]);
        corner_refs.push_back(face[i]);
        corner_refs.push_back(face[i + 1]);
        corner_tris.push_back({base, base + 1, base + 2});
      }
    }
    // Unknown record kinds (o, g, usemtl, vt, ...) are skipped.
  }
  if (corner_tris.empty())
    throw Error(ErrorCode::kEmptyMesh, path + ": no triangles");

  // Normals that are unit to within text-format rounding are kept
  // bit-exact so save -> load -> save is byte-stable.
  auto cleaned_normal = [](const Vec3& n) {
    return std::abs(norm(n) - 1.0) <= 1e-8 ? n : normalized(n);
  };

  Mesh mesh;
  // When normal indices mirror vertex indices (the layout save_mesh
  // emits), or no normals are referenced at all, vertices keep their file
  // order. Mixed-index files fall back to per-corner deduplication.
  bool aligned = true;
  bool any_normal_ref = false;
  for (const auto& ref : corner_refs) {
    if (ref.second >= 0) {
      any_normal_ref = true;
      if (ref.second != ref.first) aligned = false;
    }
  }
  if (any_normal_ref && file_normals.size() != positions.size())
    aligned = false;

  if (aligned) {
    mesh.vertices = positions;
    mesh.colors = file_colors;
    if (any_normal_ref) {
      mesh.normals.reserve(file_normals.size());
      for (const auto& n : file_normals)
        mesh.normals.push_back(cleaned_normal(n));
    } else {
      mesh.normals = compute_vertex_normals(positions, {});
    }
    for (const auto& tri : corner_tris)
      mesh.triangles.push_back({corner_refs[tri[0]].first,
                                corner_refs[tri[1]].first,
                                corner_refs[tri[2]].first});
    if (!any_normal_ref)
      mesh.normals = compute_vertex_normals(mesh.vertices, mesh.triangles);
  } else {
    // Deduplicate (position, normal) pairs so shared corners share
    // vertices.
    std::map<std::pair<int, int>, int> remap;
    for (auto& tri : corner_tris) {
      std::array<int, 3> out_tri{};
      for (int k = 0; k < 3; ++k) {
        auto ref = corner_refs[tri[k]];
        auto it = remap.find(ref);
        if (it == remap.end()) {
          int idx = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(positions[ref.first]);
          mesh.colors.push_back(file_colors[ref.first]);
          mesh.normals.push_back(ref.second >= 0
                                     ? cleaned_normal(file_normals[ref.second])
                                     : Vec3{0, 0, 0});
          remap[ref] = idx;
          out_tri[k] = idx;
        } else {
          out_tri[k] = it->second;
        }
      }
      mesh.triangles.push_back(out_tri);
    }
    // Fill in normals for corners that had none.
    bool missing = false;
    for (const auto& n : mesh.normals)
      if (norm(n) < 0.5) missing = true;
    if (missing) {
      auto computed = compute_vertex_normals(mesh.vertices, mesh.triangles);
      for (size_t i = 0; i < mesh.normals.size(); ++i)
        if (norm(mesh.normals[i]) < 0.5) mesh.normals[i] = computed[i];
    }
  }
  (void)any_color;
  mesh.validate();
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  char buf[256];
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const Vec3& c = mesh.colors[i];
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g %.9g %.9g %.9g\n", v.x,
                  v.y, v.z, c.x, c.y, c.z);
    out << buf;
  }
  for (const auto& n : mesh.normals) {
    std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x, n.y, n.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "f %d//%d %d//%d %d//%d\n", t[0] + 1,
                  t[0] + 1, t[1] + 1, t[1] + 1, t[2] + 1, t[2] + 1);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0))
    throw Error(ErrorCode::kInvalidParam,
                std::string(name) + " must be positive");
}

void require_segments(int v, const char* name) {
  if (v < 3)
    throw Error(ErrorCode::kInvalidParam,
                std::string(name) + " must be >= 3");
}

Mesh finish(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> tris) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(tris);
  m.normals = compute_vertex_normals(m.vertices, m.triangles);
  m.colors.assign(m.vertices.size(), Vec3{1, 1, 1});
  m.validate();
  return m;
}

Mesh make_cube(double edge) {
  require_positive(edge, "size");
  double h = edge / 2.0;
  std::vector<Vec3> v = {{-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},
                         {-h, -h, h},  {h, -h, h},  {h, h, h},  {-h, h, h}};
  // Outward-facing (CCW seen from outside).
  std::vector<std::array<int, 3>> t = {
      {0, 2, 1}, {0, 3, 2},  // -z
      {4, 5, 6}, {4, 6, 7},  // +z
      {0, 1, 5}, {0, 5, 4},  // -y
      {3, 6, 2}, {3, 7, 6},  // +y
      {0, 4, 7}, {0, 7, 3},  // -x
      {1, 2, 6}, {1, 6, 5},  // +x
  };
  return finish(std::move(v), std::move(t));
}

Mesh make_cylinder(double radius, double height, int segments) {
  require_positive(radius, "radius");
  require_positive(height, "height");
  require_segments(segments, "segments");
  double h = height / 2.0;
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * kPi * i / segments;
    double x = radius * std::cos(a), y = radius * std::sin(a);
    v.push_back({x, y, -h});
    v.push_back({x, y, h});
  }
  int bottom_center = static_cast<int>(v.size());
  v.push_back({0, 0, -h});
  int top_center = static_cast<int>(v.size());
  v.push_back({0, 0, h});
  for (int i = 0; i < segments; ++i) {
    int j = (i + 1) % segments;
    int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    t.push_back({b0, b1, t1});
    t.push_back({b0, t1, t0});
    t.push_back({bottom_center, b1, b0});
    t.push_back({top_center, t0, t1});
  }
  return finish(std::move(v), std::move(t));
}

Mesh make_cone(double radius, double height, int segments) {
  require_positive(radius, "radius");
  require_positive(height, "height");
  require_segments(segments, "segments");
  double h = height / 2.0;
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * kPi * i / segments;
    v.push_back({radius * std::cos(a), radius * std::sin(a), -h});
  }
  int apex = static_cast<int>(v.size());
  v.push_back({0, 0, h});
  int base_center = static_cast<int>(v.size());
  v.push_back({0, 0, -h});
  for (int i = 0; i < segments; ++i) {
    int j = (i + 1) % segments;
    t.push_back({i, j, apex});
    t.push_back({base_center, j, i});
  }
  return finish(std::move(v), std::move(t));
}

Mesh make_torus(double major_radius, double tube_radius, int segments,
                int rings) {
  require_positive(major_radius, "major_radius");
  require_positive(tube_radius, "radius");
  require_segments(segments, "segments");
  require_segments(rings, "rings");
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * kPi * i / segments;
    double ca = std::cos(a), sa = std::sin(a);
    for (int j = 0; j < rings; ++j) {
      double b = 2.0 * kPi * j / rings;
      double r = major_radius + tube_radius * std::cos(b);
      v.push_back({r * ca, r * sa, tube_radius * std::sin(b)});
    }
  }
  auto idx = [&](int i, int j) {
    return (i % segments) * rings + (j % rings);
  };
  for (int i = 0; i < segments; ++i) {
    for (int j = 0; j < rings; ++j) {
      int a0 = idx(i, j), a1 = idx(i + 1, j);
      int b0 = idx(i, j + 1), b1 = idx(i + 1, j + 1);
      t.push_back({a0, a1, b1});
      t.push_back({a0, b1, b0});
    }
  }
  return finish(std::move(v), std::move(t));
}

Mesh make_icosphere(double radius, int subdivisions) {
  require_positive(radius, "size");
  if (subdivisions < 0 || subdivisions > 6)
    throw Error(ErrorCode::kInvalidParam, "subdivisions must be in [0,6]");
  // Pole-aligned icosahedron: poles on +-Z, two rings of 5 at z = +-1/sqrt(5).
  std::vector<Vec3> v;
  v.push_back({0, 0, 1});
  double lat = std::atan(0.5);  // ring latitude
  for (int ring = 0; ring < 2; ++ring) {
    double z = ring == 0 ? std::sin(lat) : -std::sin(lat);
    double r = std::cos(lat);
    double phase = ring == 0 ? 0.0 : kPi / 5.0;
    for (int i = 0; i < 5; ++i) {
      double a = 2.0 * kPi * i / 5.0 + phase;
      v.push_back({r * std::cos(a), r * std::sin(a), z});
    }
  }
  v.push_back({0, 0, -1});
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < 5; ++i) {
    int j = (i + 1) % 5;
    int u0 = 1 + i, u1 = 1 + j;        // upper ring
    int l0 = 6 + i, l1 = 6 + j;        // lower ring
    t.push_back({0, u0, u1});          // cap
    t.push_back({u0, l0, u1});         // upper band
    t.push_back({u1, l0, l1});         // lower band
    t.push_back({11, l1, l0});         // bottom cap
  }
  for (int level = 0; level < subdivisions; ++level) {
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
    next.reserve(t.size() * 4);
    for (const auto& tri : t) {
      int m01 = mid(tri[0], tri[1]);
      int m12 = mid(tri[1], tri[2]);
      int m20 = mid(tri[2], tri[0]);
      next.push_back({tri[0], m01, m20});
      next.push_back({tri[1], m12, m01});
      next.push_back({tri[2], m20, m12});
      next.push_back({m01, m12, m20});
    }
    t = std::move(next);
  }
  for (auto& p : v) p = p * radius;
  return finish(std::move(v), std::move(t));
}

}  // namespace

PrimitiveKind primitive_kind_from_string(const std::string& name) {
  if (name == "cube") return PrimitiveKind::kCube;
  if (name == "cylinder") return PrimitiveKind::kCylinder;
  if (name == "cone") return PrimitiveKind::kCone;
  if (name == "torus") return PrimitiveKind::kTorus;
  if (name == "icosphere") return PrimitiveKind::kIcosphere;
  throw Error(ErrorCode::kInvalidParam, "unknown primitive kind '" + name + "'");
}

Mesh make_primitive_mesh(PrimitiveKind kind, const PrimitiveParams& p) {
  switch (kind) {
    case PrimitiveKind::kCube:
      return make_cube(p.size);
    case PrimitiveKind::kCylinder:
      return make_cylinder(p.radius, p.height, p.segments);
    case PrimitiveKind::kCone:
      return make_cone(p.radius, p.height, p.segments);
    case PrimitiveKind::kTorus:
      return make_torus(p.major_radius, p.radius, p.segments, p.rings);
    case PrimitiveKind::kIcosphere:
      return make_icosphere(p.size, p.subdivisions);
  }
  throw Error(ErrorCode::kInvalidParam, "unknown primitive kind");
}

void set_uniform_color(Mesh& mesh, const Vec3& rgb) {
  for (auto& c : mesh.colors) c = rgb;
}

}  // namespace synthdet
