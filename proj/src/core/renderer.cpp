#include "core/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/image.hpp"

namespace synthdet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kMinDepth = 1e-6;

void check_unit_range(const Vec3& v, const char* name) {
  if (v.x < 0 || v.x > 1 || v.y < 0 || v.y > 1 || v.z < 0 || v.z > 1)
    throw Error(ErrorCode::kInvalidParam,
                std::string(name) + " channels must be in [0,1]");
}
}  // namespace

void PhongMaterial::validate() const {
  check_unit_range(k_ambient, "k_ambient");
  check_unit_range(k_diffuse, "k_diffuse");
  check_unit_range(k_specular, "k_specular");
  if (!(shininess > 0))
    throw Error(ErrorCode::kInvalidParam, "shininess must be > 0");
}

void LightSpec::validate() const {
  if (std::abs(norm(direction) - 1.0) > 1e-6)
    throw Error(ErrorCode::kNonUnitDirection,
                "light direction must be unit length");
  check_unit_range(color, "light color");
  check_unit_range(ambient_color, "ambient color");
}

void JitterSpec::validate() const {
  if (material_jitter < 0 || light_color_jitter < 0 || light_cone_angle_deg < 0)
    throw Error(ErrorCode::kInvalidParam, "jitter half-ranges must be >= 0");
}

Vec3 phong_shade(const Vec3& normal, const Vec3& view, const LightSpec& light,
                 const PhongMaterial& material, const Vec3& base_color) {
  Vec3 out;
  double ndotl = dot(normal, light.direction);
  double spec = 0.0;
  if (ndotl > 0.0) {
    // R = reflection of -L about N = 2 (N.L) N - L
    Vec3 r = 2.0 * ndotl * normal - light.direction;
    double rdotv = dot(r, view);
    if (rdotv > 0.0) spec = std::pow(rdotv, material.shininess);
  }
  double diffuse = std::max(ndotl, 0.0);
  auto channel = [&](double ka, double kd, double ks, double amb, double lc,
                     double base) {
    double c = ka * amb * base + kd * diffuse * lc * base + ks * spec * lc;
    return std::clamp(c, 0.0, 1.0);
  };
  out.x = channel(material.k_ambient.x, material.k_diffuse.x,
                  material.k_specular.x, light.ambient_color.x, light.color.x,
                  base_color.x);
  out.y = channel(material.k_ambient.y, material.k_diffuse.y,
                  material.k_specular.y, light.ambient_color.y, light.color.y,
                  base_color.y);
  out.z = channel(material.k_ambient.z, material.k_diffuse.z,
                  material.k_specular.z, light.ambient_color.z, light.color.z,
                  base_color.z);
  return out;
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Vec3 jitter_coeff(const Vec3& k, double j, Rng& rng) {
  // One multiplicative factor per channel; draws happen even when j == 0
  // (factor is then exactly 1) to keep the stream layout fixed.
  Vec3 out;
  out.x = clamp01(k.x * rng.uniform_real(1.0 - j, 1.0 + j));
  out.y = clamp01(k.y * rng.uniform_real(1.0 - j, 1.0 + j));
  out.z = clamp01(k.z * rng.uniform_real(1.0 - j, 1.0 + j));
  return out;
}

// Uniform direction within the spherical cap of half-angle `angle` around
// `axis`. Two draws: cos(theta) uniform in [cos(angle), 1], phi uniform.
Vec3 sample_cone(const Vec3& axis, double angle, Rng& rng) {
  double cos_t = rng.uniform_real(std::cos(angle), 1.0);
  double phi = rng.uniform_real(0.0, 2.0 * kPi);
  double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  Vec3 helper = std::abs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 u = normalized(cross(helper, axis));
  Vec3 w = cross(axis, u);
  return normalized(axis * cos_t +
                    (u * std::cos(phi) + w * std::sin(phi)) * sin_t);
}

}  // namespace

std::pair<PhongMaterial, LightSpec> perturb_params(const PhongMaterial& material,
                                                   const LightSpec& light,
                                                   const JitterSpec& jitter,
                                                   Rng& rng) {
  jitter.validate();
  PhongMaterial m = material;
  m.k_ambient = jitter_coeff(material.k_ambient, jitter.material_jitter, rng);
  m.k_diffuse = jitter_coeff(material.k_diffuse, jitter.material_jitter, rng);
  m.k_specular = jitter_coeff(material.k_specular, jitter.material_jitter, rng);
  LightSpec l = light;
  double j = jitter.light_color_jitter;
  l.color.x = clamp01(light.color.x + rng.uniform_real(-j, j));
  l.color.y = clamp01(light.color.y + rng.uniform_real(-j, j));
  l.color.z = clamp01(light.color.z + rng.uniform_real(-j, j));
  double angle = jitter.light_cone_angle_deg * kPi / 180.0;
  if (angle > 0.0) {
    l.direction = sample_cone(light.direction, angle, rng);
  } else {
    // Keep the direction bit-identical but still consume the two draws.
    rng.uniform_real(1.0, 1.0);
    rng.uniform_real(0.0, 0.0);
  }
  return {m, l};
}

namespace {

struct ScreenVertex {
  double u, v;      // pixel coordinates
  double inv_z;     // 1/depth
  Vec3 normal;      // camera frame, not normalized after interpolation
  Vec3 color;
};

double edge_function(double ax, double ay, double bx, double by, double px,
                     double py) {
  return (px - ax) * (by - ay) - (py - ay) * (bx - ax);
}

// Top-left rule: a pixel center exactly on an edge is covered only when
// that edge is a top edge (horizontal, interior below it) or a left edge
// (interior to its east). With the edge function used here (interior
// positive), that is dx < 0 for horizontal edges and dy > 0 otherwise.
bool is_top_left(double ax, double ay, double bx, double by) {
  double dy = by - ay;
  double dx = bx - ax;
  return (dy == 0.0 && dx < 0.0) || dy > 0.0;
}

}  // namespace

RenderLayer render(const Mesh& mesh, const Pose& pose,
                   const CameraIntrinsics& K, const PhongMaterial& material,
                   const LightSpec& light, const RenderOptions& options) {
  K.validate();
  material.validate();
  light.validate();
  RenderLayer layer(K.width, K.height);
  if (mesh.triangles.empty()) return layer;

  // Transform all vertices to camera frame and project.
  std::vector<ScreenVertex> verts(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    Vec3 q = pose.apply(mesh.vertices[i]);
    if (q.z <= kMinDepth)
      throw Error(ErrorCode::kBehindCamera,
                  "mesh vertex behind the camera during render");
    verts[i].u = K.fx * q.x / q.z + K.cx;
    verts[i].v = K.fy * q.y / q.z + K.cy;
    verts[i].inv_z = 1.0 / q.z;
    verts[i].normal = pose.rotation * mesh.normals[i];
    verts[i].color = mesh.colors[i];
  }

  for (const auto& tri : mesh.triangles) {
    const ScreenVertex& a = verts[tri[0]];
    const ScreenVertex& b = verts[tri[1]];
    const ScreenVertex& c = verts[tri[2]];

    double area = edge_function(a.u, a.v, b.u, b.v, c.u, c.v);
    if (area == 0.0) continue;
    if (options.backface_culling && area < 0.0) continue;

    // Work with a consistent counter-clockwise winding (screen space,
    // y down) so the coverage test is sign-stable.
    const ScreenVertex* v0 = &a;
    const ScreenVertex* v1 = &b;
    const ScreenVertex* v2 = &c;
    if (area < 0.0) {
      std::swap(v1, v2);
      area = -area;
    }

    int x0 = std::max(0, static_cast<int>(
                             std::floor(std::min({v0->u, v1->u, v2->u}) - 0.5)));
    int x1 = std::min(K.width - 1,
                      static_cast<int>(
                          std::ceil(std::max({v0->u, v1->u, v2->u}) + 0.5)));
    int y0 = std::max(0, static_cast<int>(
                             std::floor(std::min({v0->v, v1->v, v2->v}) - 0.5)));
    int y1 = std::min(K.height - 1,
                      static_cast<int>(
                          std::ceil(std::max({v0->v, v1->v, v2->v}) + 0.5)));

    bool tl0 = is_top_left(v1->u, v1->v, v2->u, v2->v);
    bool tl1 = is_top_left(v2->u, v2->v, v0->u, v0->v);
    bool tl2 = is_top_left(v0->u, v0->v, v1->u, v1->v);

    for (int py = y0; py <= y1; ++py) {
      double sy = py + 0.5;
      for (int px = x0; px <= x1; ++px) {
        double sx = px + 0.5;
        double e0 = edge_function(v1->u, v1->v, v2->u, v2->v, sx, sy);
        double e1 = edge_function(v2->u, v2->v, v0->u, v0->v, sx, sy);
        double e2 = edge_function(v0->u, v0->v, v1->u, v1->v, sx, sy);
        bool inside = (e0 > 0.0 || (e0 == 0.0 && tl0)) &&
                      (e1 > 0.0 || (e1 == 0.0 && tl1)) &&
                      (e2 > 0.0 || (e2 == 0.0 && tl2));
        if (!inside) continue;

        double l0 = e0 / area, l1 = e1 / area, l2 = e2 / area;
        double inv_z = l0 * v0->inv_z + l1 * v1->inv_z + l2 * v2->inv_z;
        double z = 1.0 / inv_z;
        size_t pi = layer.pixel_index(px, py);
        if (z >= layer.depth[pi]) continue;

        // Perspective-correct attribute weights.
        double w0 = l0 * v0->inv_z / inv_z;
        double w1 = l1 * v1->inv_z / inv_z;
        double w2 = l2 * v2->inv_z / inv_z;
        Vec3 normal = w0 * v0->normal + w1 * v1->normal + w2 * v2->normal;
        double nlen = norm(normal);
        Vec3 base = w0 * v0->color + w1 * v1->color + w2 * v2->color;
        base.x = clamp01(base.x);
        base.y = clamp01(base.y);
        base.z = clamp01(base.z);

        // Surface point from the pixel ray; view vector points back at
        // the camera.
        Vec3 p{(sx - K.cx) / K.fx * z, (sy - K.cy) / K.fy * z, z};
        Vec3 view = normalized(-p);
        Vec3 n = nlen > 1e-12 ? normal / nlen : view;
        if (dot(n, view) < 0.0) n = -n;  // two-sided shading

        Vec3 rgb = phong_shade(n, view, light, material, base);
        layer.depth[pi] = z;
        layer.alpha[pi] = 255;
        layer.rgb[pi * 3 + 0] = clamp_to_byte(rgb.x * 255.0);
        layer.rgb[pi * 3 + 1] = clamp_to_byte(rgb.y * 255.0);
        layer.rgb[pi * 3 + 2] = clamp_to_byte(rgb.z * 255.0);
      }
    }
  }
  return layer;
}

}  // namespace synthdet
