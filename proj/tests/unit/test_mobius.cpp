#include <cmath>
#include <random>

#include "doctest.h"
#include "geoflow/errors.hpp"
#include "geoflow/mobius.hpp"

using namespace geoflow;

namespace {

Complex random_in_disk(std::mt19937_64& rng, double rmax) {
  std::uniform_real_distribution<double> u(-rmax, rmax);
  for (;;) {
    Complex z(u(rng), u(rng));
    if (std::abs(z) < rmax) return z;
  }
}

MobiusMap random_word(const SurfaceAtlas& atlas, std::mt19937_64& rng, int len) {
  MobiusMap m = MobiusMap::identity();
  std::uniform_int_distribution<int> g(0, 7);
  for (int i = 0; i < len; ++i) m = compose(m, atlas.generators[g(rng)]);
  return m;
}

}  // namespace

TEST_CASE("disk points reject the boundary") {
  CHECK_NOTHROW(DiskPoint(0.3, 0.1));
  CHECK_THROWS_AS(DiskPoint(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(DiskPoint(0.6, 0.8), DomainError);
  CHECK_THROWS_AS(DiskPoint(1.0 - 1e-13, 0.0), DomainError);
  const MobiusMap far{Complex(2.0, 0.0), Complex(std::sqrt(3.0), 0.0)};
  CHECK_THROWS_AS(mobius_apply(far, DiskPoint(1.0 - 1e-11, 0.0)), DomainError);
}

TEST_CASE("identity and inverse") {
  const DiskPoint z(0.3, 0.1);
  CHECK(mobius_apply(MobiusMap::identity(), z) == z);

  const auto atlas = bolza_atlas();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const MobiusMap m = random_word(atlas, rng, 1);
    const Complex w = random_in_disk(rng, 0.9);
    const Complex back = compose(m.inverse(), m).apply(w);
    CHECK(std::abs(back - w) < 1e-12);
    CHECK(std::abs(m.inverse().apply(m.apply(w)) - w) < 1e-12);
  }
}

TEST_CASE("translation along the axis of a hyperbolic element") {
  // Real a, b: the axis is the real diameter, translation length 2 arccosh(a).
  const double a = 1.7;
  const MobiusMap m{Complex(a, 0.0), Complex(std::sqrt(a * a - 1.0), 0.0)};
  const DiskPoint o(0.0, 0.0);
  const DiskPoint mo = mobius_apply(m, o);
  CHECK(std::abs(mo.im()) < 1e-15);
  CHECK(hyperbolic_distance(o, mo) == doctest::Approx(translation_length(m)).epsilon(1e-12));
  const DiskPoint p(-0.4, 0.0);
  CHECK(hyperbolic_distance(p, mobius_apply(m, p)) == doctest::Approx(2.0 * std::acosh(a)).epsilon(1e-12));
}

TEST_CASE("hyperbolic distance closed forms and invariance") {
  const DiskPoint o(0.0, 0.0);
  CHECK(hyperbolic_distance(o, o) == 0.0);
  const double r = 0.37;
  CHECK(hyperbolic_distance(o, DiskPoint(r, 0.0)) == doctest::Approx(std::log((1 + r) / (1 - r))).epsilon(1e-14));

  const auto atlas = bolza_atlas();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Complex z1 = random_in_disk(rng, 0.8), z2 = random_in_disk(rng, 0.8);
    const MobiusMap g = atlas.generators[i % 8];
    const double d = hyperbolic_distance(z1, z2);
    CHECK(hyperbolic_distance(z2, z1) == doctest::Approx(d).epsilon(1e-13));
    CHECK(std::abs(hyperbolic_distance(g.apply(z1), g.apply(z2)) - d) < 1e-12);
  }
}

TEST_CASE("Bolza generators") {
  const auto atlas = bolza_atlas();
  for (const auto& g : atlas.generators) CHECK(std::abs(g.determinant() - 1.0) < 1e-12);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(compose(atlas.generators[i], atlas.generators[j]).determinant() - 1.0) < 1e-12);
    }
    CHECK(compose(atlas.generators[i], atlas.generators[(i + 4) % 8]).same_action(MobiusMap::identity(), 1e-12));
  }

  // g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 = identity
  const auto& g = atlas.generators;
  MobiusMap rel = MobiusMap::identity();
  for (int k : {0, 5, 2, 7, 4, 1, 6, 3}) rel = compose(rel, g[k]);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Complex z = random_in_disk(rng, 0.9);
    CHECK(std::abs(rel.apply(z) - z) < 1e-10);
  }
}

TEST_CASE("octagon vertices sit on two adjacent walls") {
  const auto atlas = bolza_atlas();
  CHECK(atlas.vertex_radius == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-13));
  // Brute-force intersection of walls 4 and 5 by bisection along the ray at pi/8.
  const Complex dir = std::polar(1.0, std::numbers::pi / 8.0);
  double lo = 0.0, hi = 0.99;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(mid * dir - atlas.wall_centers[4]) > atlas.wall_radii[4] ? lo : hi) = mid;
  }
  CHECK(atlas.vertex_radius == doctest::Approx(lo).epsilon(1e-12));
  for (int k = 0; k < 8; ++k) {
    const Complex v = atlas.octagon_vertices[k].value();
    CHECK(atlas.wall_violation(v) < 1e-12);
    int on = 0;
    for (int w = 0; w < 8; ++w) on += std::abs(std::abs(v - atlas.wall_centers[w]) - atlas.wall_radii[w]) < 1e-12;
    CHECK(on == 2);
  }
}

TEST_CASE("generators pair opposite sides") {
  const auto atlas = bolza_atlas();
  // The wall of g_k is mapped by g_k onto the wall of g_{k+4}.
  for (int k = 0; k < 8; ++k) {
    const Complex c = atlas.wall_centers[k];
    for (double t : {-0.2, 0.0, 0.2}) {
      const Complex on_wall = c - atlas.wall_radii[k] * c / std::abs(c) * std::polar(1.0, t);
      const Complex img = atlas.generators[k].apply(on_wall);
      const int opp = (k + 4) % 8;
      CHECK(std::abs(std::abs(img - atlas.wall_centers[opp]) - atlas.wall_radii[opp]) < 1e-12);
    }
  }
}

TEST_CASE("generator images of the octagon do not overlap") {
  const auto atlas = bolza_atlas();
  std::mt19937_64 rng(17);
  int checked = 0;
  while (checked < 1000) {
    const Complex z = random_in_disk(rng, atlas.vertex_radius);
    if (atlas.wall_violation(z) > 0.0 || !atlas.contains(z, -1e-9)) continue;
    ++checked;
    for (int i = 0; i < 8; ++i) {
      const Complex img = atlas.generators[i].apply(z);
      CHECK_FALSE(atlas.contains(img, -1e-9));
      for (int j = 0; j < 8; ++j) {
        if (j == i) continue;
        CHECK_FALSE(atlas.contains(atlas.generators[j].inverse().apply(img), -1e-9));
      }
    }
  }
}

TEST_CASE("tiles touching the octagon") {
  const auto atlas = bolza_atlas();
  // One centre tile, 8 across sides, 5 more around each of the 8 vertices.
  CHECK(atlas.tile_neighbors.size() == 49);
  CHECK(atlas.words_of_length(2).size() == 56);
  CHECK(atlas.words_up_to(2).size() == 65);
}

TEST_CASE("reduction to the fundamental octagon") {
  const auto atlas = bolza_atlas();
  const DiskPoint inside(0.2, -0.1);
  const auto r0 = reduce_to_domain(atlas, inside);
  CHECK(r0.point == inside);
  CHECK(r0.steps == 0);

  const DiskPoint near_origin(0.05, 0.02);
  const auto r1 = reduce_to_domain(atlas, mobius_apply(atlas.generators[0], near_origin));
  CHECK(std::abs(r1.point.value() - near_origin.value()) < 1e-10);
  CHECK(r1.map.same_action(atlas.generators[0], 1e-10));

  std::mt19937_64 rng(23);
  const double rmax = atlas.vertex_radius + 0.15;
  int done = 0;
  while (done < 10000) {
    const Complex z = random_in_disk(rng, rmax);
    if (atlas.contains(z)) continue;
    ++done;
    const auto r = reduce_complex(atlas, z);
    CHECK(atlas.wall_violation(r.point.value()) <= 1e-12);
    CHECK(std::abs(r.map.apply(r.point.value()) - z) < 1e-10);
    const auto again = reduce_complex(atlas, r.point.value());
    CHECK(again.steps == 0);
  }
}
