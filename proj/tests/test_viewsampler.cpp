#include "core/viewsampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace synthdet;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("viewsampler") {

TEST_CASE("subdivision counts follow 10*4^n + 2") {
  CHECK(subdivide_icosahedron(0).directions.size() == 12);
  CHECK(subdivide_icosahedron(1).directions.size() == 42);
  CHECK(subdivide_icosahedron(2).directions.size() == 162);
  CHECK(subdivide_icosahedron(3).directions.size() == 642);
}

TEST_CASE("directions are unit length and deduplicated") {
  ViewSphere s = subdivide_icosahedron(2);
  for (const auto& d : s.directions)
    CHECK(std::abs(norm(d) - 1.0) < 1e-9);
  for (size_t i = 0; i < s.directions.size(); ++i)
    for (size_t j = i + 1; j < s.directions.size(); ++j) {
      double cosang =
          std::clamp(dot(s.directions[i], s.directions[j]), -1.0, 1.0);
      CHECK(std::acos(cosang) > 1e-6);
    }
}

TEST_CASE("level 2 nearest-neighbor angles are nearly uniform") {
  // Exhaustive pairwise scan: min NN angle within 25% of the mean NN angle.
  ViewSphere s = subdivide_icosahedron(2);
  std::vector<double> nn(s.directions.size(),
                         std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < s.directions.size(); ++i)
    for (size_t j = 0; j < s.directions.size(); ++j) {
      if (i == j) continue;
      double ang = std::acos(
          std::clamp(dot(s.directions[i], s.directions[j]), -1.0, 1.0));
      nn[i] = std::min(nn[i], ang);
    }
  double mean = 0;
  double mn = nn[0];
  for (double a : nn) {
    mean += a;
    mn = std::min(mn, a);
  }
  mean /= nn.size();
  CHECK(mn > 0.75 * mean);
}

TEST_CASE("level guard") {
  CHECK_THROWS_AS(subdivide_icosahedron(7), Error);
  CHECK_THROWS_AS(subdivide_icosahedron(-1), Error);
}

TEST_CASE("log_distances geometric sequences") {
  auto d = log_distances(1, 4, 3);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(1).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(2).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(4).epsilon(1e-12));

  CHECK(log_distances(2, 2, 1) == std::vector<double>{2});

  auto e = log_distances(0.5, 8, 5);
  std::vector<double> expect{0.5, 1, 2, 4, 8};
  REQUIRE(e.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(e[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("log_distances ratio constant to 1e-12 relative") {
  auto d = log_distances(0.37, 5.21, 9);
  double r0 = d[1] / d[0];
  for (size_t i = 1; i + 1 < d.size(); ++i)
    CHECK(std::abs(d[i + 1] / d[i] - r0) / r0 < 1e-12);
}

TEST_CASE("log_distances invalid ranges") {
  CHECK_THROWS_AS(log_distances(0, 1, 2), Error);
  CHECK_THROWS_AS(log_distances(2, 1, 2), Error);
  CHECK_THROWS_AS(log_distances(1, 2, 1), Error);
  CHECK_THROWS_AS(log_distances(1, 2, 0), Error);
}

TEST_CASE("look_at_pose canonical frontal view") {
  Pose p = look_at_pose({0, 0, 1}, 0.0, 2.0);
  CHECK(p.translation.z == doctest::Approx(2).epsilon(1e-12));
  CHECK(orthonormality_error(p.rotation) < 1e-12);
  // Object origin lands on the optical axis.
  Vec3 q = p.apply({0, 0, 0});
  CHECK(q.x == doctest::Approx(0).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("look_at_pose in-plane rotation spins about the optical axis") {
  Vec3 dir = normalized(Vec3{0.3, -0.4, 0.85});
  Pose a = look_at_pose(dir, 0.0, 2.0);
  Pose b = look_at_pose(dir, kPi, 2.0);
  // A point off the optical axis maps to the mirrored position.
  Vec3 p{0.1, 0.05, 0.0};
  Vec3 qa = a.apply(p);
  Vec3 qb = b.apply(p);
  CHECK(qb.x == doctest::Approx(-qa.x).epsilon(1e-9));
  CHECK(qb.y == doctest::Approx(-qa.y).epsilon(1e-9));
  CHECK(qb.z == doctest::Approx(qa.z).epsilon(1e-9));
}

TEST_CASE("look_at_pose property: R maps direction to camera +Z") {
  // 1000 random samples: det(R) = +1 and R * (-direction) = -e_z.
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    Vec3 dir = normalized(Vec3{rng.gaussian(), rng.gaussian(), rng.gaussian()});
    double in_plane = rng.uniform_real(0, 2 * kPi);
    double dist = rng.uniform_real(0.1, 10);
    Pose p = look_at_pose(dir, in_plane, dist);
    CHECK(orthonormality_error(p.rotation) < 1e-9);
    CHECK(p.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    Vec3 mapped = p.rotation * (-dir);
    CHECK(mapped.x == doctest::Approx(0).epsilon(1e-9));
    CHECK(mapped.y == doctest::Approx(0).epsilon(1e-9));
    CHECK(mapped.z == doctest::Approx(-1).epsilon(1e-9));
  }
}

TEST_CASE("look_at_pose rejects non-unit directions") {
  CHECK_THROWS_AS(look_at_pose({0, 0, 2}, 0, 1), Error);
}

TEST_CASE("look_at_pose pole fallback axis") {
  // Directions within 1e-6 of +-Z use +X as the up reference.
  Pose p = look_at_pose({0, 0, 1}, 0, 1);
  CHECK(orthonormality_error(p.rotation) < 1e-12);
  Pose q = look_at_pose({0, 0, -1}, 0, 1);
  CHECK(orthonormality_error(q.rotation) < 1e-12);
}

TEST_CASE("enumerate_poses product sizes") {
  PoseGridSpec spec;
  spec.subdivision_level = 0;
  spec.in_plane_count = 1;
  spec.distance_min = spec.distance_max = 1;
  spec.scale_levels = 1;
  CHECK(enumerate_poses(spec).size() == 12);

  spec.subdivision_level = 1;
  spec.in_plane_count = 4;
  spec.distance_min = 1;
  spec.distance_max = 2;
  spec.scale_levels = 3;
  CHECK(enumerate_poses(spec).size() == 42 * 4 * 3);
}

TEST_CASE("hemisphere_only keeps z >= 0 directions") {
  PoseGridSpec spec;
  spec.subdivision_level = 0;
  spec.in_plane_count = 1;
  spec.distance_min = spec.distance_max = 1;
  spec.scale_levels = 1;
  spec.hemisphere_only = true;
  // Oracle: filter the vertex list directly.
  ViewSphere s = subdivide_icosahedron(0);
  size_t expect = 0;
  for (const auto& d : s.directions)
    if (d.z >= 0) ++expect;
  CHECK(expect == 6);  // pole-aligned icosahedron: pole + upper ring
  CHECK(enumerate_poses(spec).size() == expect);
}

TEST_CASE("enumerate_poses is deterministic and ordered") {
  PoseGridSpec spec;
  spec.subdivision_level = 1;
  spec.in_plane_count = 3;
  spec.distance_min = 0.5;
  spec.distance_max = 2;
  spec.scale_levels = 2;
  auto a = enumerate_poses(spec);
  auto b = enumerate_poses(spec);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].translation.z == b[i].translation.z);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        CHECK(a[i].rotation(r, c) == b[i].rotation(r, c));
  }
  // Distance is the fastest-changing axis.
  CHECK(a[0].translation.z == doctest::Approx(0.5));
  CHECK(a[1].translation.z == doctest::Approx(2.0));
}

}  // TEST_SUITE
