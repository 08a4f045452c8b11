#include "geoflow/mobius.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

void check_inside(Complex z) {
  if (!(std::abs(z) < 1.0 - kDiskTolerance)) {
    throw DomainError("point (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                      ") is not strictly inside the unit disk");
  }
}

constexpr int kMaxReductionSteps = 16;

}  // namespace

DiskPoint::DiskPoint(double re, double im) : DiskPoint(Complex(re, im)) {}

DiskPoint::DiskPoint(Complex z) : z_(z) { check_inside(z); }

MobiusMap MobiusMap::normalized() const {
  const double det = determinant();
  if (det <= 0.0) throw DomainError("Mobius map with non-positive determinant");
  const double s = std::sqrt(det);
  return {a / s, b / s};
}

bool MobiusMap::same_action(const MobiusMap& other, double tol) const {
  const bool plus = std::abs(a - other.a) < tol && std::abs(b - other.b) < tol;
  const bool minus = std::abs(a + other.a) < tol && std::abs(b + other.b) < tol;
  return plus || minus;
}

MobiusMap compose(const MobiusMap& lhs, const MobiusMap& rhs) {
  return {lhs.a * rhs.a + lhs.b * std::conj(rhs.b), lhs.a * rhs.b + lhs.b * std::conj(rhs.a)};
}

DiskPoint mobius_apply(const MobiusMap& m, const DiskPoint& z) {
  return DiskPoint(m.apply(z.value()));
}

double hyperbolic_distance(Complex z1, Complex z2) {
  const double r = std::abs((z1 - z2) / (1.0 - std::conj(z2) * z1));
  return 2.0 * std::atanh(std::min(r, 1.0));
}

double hyperbolic_distance(const DiskPoint& z1, const DiskPoint& z2) {
  return hyperbolic_distance(z1.value(), z2.value());
}

double translation_length(const MobiusMap& m) {
  const double tr = std::abs(m.a.real());
  return tr <= 1.0 ? 0.0 : 2.0 * std::acosh(tr);
}

bool SurfaceAtlas::contains(Complex z, double slack) const {
  for (int k = 0; k < 8; ++k) {
    if (std::abs(z - wall_centers[k]) < wall_radii[k] - slack) return false;
  }
  return true;
}

double SurfaceAtlas::wall_violation(Complex z) const {
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    worst = std::max(worst, wall_radii[k] - std::abs(z - wall_centers[k]));
  }
  return worst;
}

std::vector<MobiusMap> SurfaceAtlas::words_of_length(int length) const {
  // Reduced words: never follow a generator by its inverse.
  struct Word {
    MobiusMap map;
    int last;
  };
  std::vector<Word> frontier{{MobiusMap::identity(), -1}};
  for (int l = 0; l < length; ++l) {
    std::vector<Word> next;
    next.reserve(frontier.size() * 7);
    for (const auto& w : frontier) {
      for (int g = 0; g < 8; ++g) {
        if (w.last >= 0 && g == (w.last + 4) % 8) continue;
        next.push_back({compose(w.map, generators[g]), g});
      }
    }
    frontier = std::move(next);
  }
  std::vector<MobiusMap> out;
  out.reserve(frontier.size());
  for (const auto& w : frontier) out.push_back(w.map);
  return out;
}

std::vector<MobiusMap> SurfaceAtlas::words_up_to(int max_length) const {
  std::vector<MobiusMap> out;
  for (int l = 0; l <= max_length; ++l) {
    auto w = words_of_length(l);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

SurfaceAtlas bolza_atlas() {
  using std::numbers::pi;
  using std::numbers::sqrt2;
  SurfaceAtlas atlas;
  const double a = 1.0 + sqrt2;
  const double beta = std::sqrt(2.0 + 2.0 * sqrt2);
  for (int k = 0; k < 4; ++k) {
    const MobiusMap g{Complex(a, 0.0), std::polar(beta, k * pi / 4.0)};
    atlas.generators[k] = g;
    atlas.generators[k + 4] = g.inverse();
  }
  for (int k = 0; k < 8; ++k) {
    // Isometric circle |conj(b) z + conj(a)| = 1.
    const MobiusMap& g = atlas.generators[k];
    atlas.wall_centers[k] = -std::conj(g.a) / std::conj(g.b);
    atlas.wall_radii[k] = 1.0 / std::abs(g.b);
  }
  // Walls 4 and 5 (centres at angles 0 and pi/4) meet on the ray at pi/8.
  // |r e^{i pi/8} - D e^{i phi}|^2 = R^2 with D^2 - R^2 = 1 gives
  // r^2 - 2 r D cos(delta) + 1 = 0.
  const Complex c0 = atlas.wall_centers[4];
  const double dist = std::abs(c0);
  const double delta = std::abs(std::remainder(std::arg(c0) - pi / 8.0, 2.0 * pi));
  const double p = dist * std::cos(delta);
  atlas.vertex_radius = p - std::sqrt(p * p - 1.0);
  for (int k = 0; k < 8; ++k) {
    atlas.octagon_vertices[k] = DiskPoint(std::polar(atlas.vertex_radius, pi / 8.0 + k * pi / 4.0));
  }
  atlas.circumradius = 2.0 * std::atanh(atlas.vertex_radius);
  atlas.inradius = 0.5 * translation_length(atlas.generators[0]);

  // Tiles touching the octagon: centres within twice the circumradius.
  std::vector<MobiusMap> neighbors;
  for (const auto& w : atlas.words_up_to(4)) {
    const double d = hyperbolic_distance(Complex(0.0, 0.0), w.apply(Complex(0.0, 0.0)));
    if (d > 2.0 * atlas.circumradius + 1e-6) continue;
    bool seen = false;
    for (const auto& n : neighbors) {
      if (n.same_action(w)) {
        seen = true;
        break;
      }
    }
    if (!seen) neighbors.push_back(w);
  }
  atlas.tile_neighbors = std::move(neighbors);
  return atlas;
}

Reduction reduce_complex(const SurfaceAtlas& atlas, Complex z) {
  Reduction out;
  MobiusMap word = MobiusMap::identity();
  Complex cur = z;
  for (int step = 0; step <= kMaxReductionSteps; ++step) {
    if (atlas.contains(cur)) {
      out.point = DiskPoint(cur);
      out.map = word;
      out.steps = step;
      return out;
    }
    if (step == kMaxReductionSteps) break;
    const double here = std::abs(cur);
    int best = -1;
    double best_r = here;
    for (int g = 0; g < 8; ++g) {
      const double r = std::abs(atlas.generators[g].apply(cur));
      if (r < best_r) {
        best_r = r;
        best = g;
      }
    }
    if (best < 0) {
      // On a wall up to rounding: first generator that does not increase distance.
      for (int g = 0; g < 8; ++g) {
        if (std::abs(atlas.generators[g].apply(cur)) <= here * (1.0 + 1e-14)) {
          best = g;
          break;
        }
      }
      if (best < 0) break;
    }
    const MobiusMap& h = atlas.generators[best];
    cur = h.apply(cur);
    // z = word(cur_old) and cur_new = h(cur_old)  =>  z = word o h^{-1}(cur_new).
    word = compose(word, h.inverse());
  }
  throw NotReducible("point (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                     ") not reducible within " + std::to_string(kMaxReductionSteps) + " steps");
}

Reduction reduce_to_domain(const SurfaceAtlas& atlas, const DiskPoint& z) {
  return reduce_complex(atlas, z.value());
}

}  // namespace geoflow
