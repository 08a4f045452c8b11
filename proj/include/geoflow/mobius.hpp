#pragma once

// Poincare-disk primitives and the Bolza surface group.

#include <array>
#include <complex>
#include <utility>
#include <vector>

namespace geoflow {

using Complex = std::complex<double>;

/// Points with |z| >= 1 - kDiskTolerance are rejected.
inline constexpr double kDiskTolerance = 1e-12;

/// A point strictly inside the unit disk.
class DiskPoint {
 public:
  DiskPoint() = default;
  DiskPoint(double re, double im);
  explicit DiskPoint(Complex z);

  double re() const { return z_.real(); }
  double im() const { return z_.imag(); }
  Complex value() const { return z_; }

  friend bool operator==(const DiskPoint&, const DiskPoint&) = default;

 private:
  Complex z_{0.0, 0.0};
};

/// Orientation-preserving disk isometry z -> (a z + b) / (conj(b) z + conj(a)).
struct MobiusMap {
  Complex a{1.0, 0.0};
  Complex b{0.0, 0.0};

  static MobiusMap identity() { return {}; }

  /// |a|^2 - |b|^2; equals 1 for a normalized map.
  double determinant() const { return std::norm(a) - std::norm(b); }

  Complex apply(Complex z) const { return (a * z + b) / (std::conj(b) * z + std::conj(a)); }

  /// Complex derivative of the map at z.
  Complex derivative(Complex z) const {
    const Complex d = std::conj(b) * z + std::conj(a);
    return 1.0 / (d * d);
  }

  MobiusMap inverse() const { return {std::conj(a), -b}; }

  /// Divides by sqrt(determinant) so that |a|^2 - |b|^2 = 1.
  MobiusMap normalized() const;

  /// True when both maps act identically (matrices agree up to sign).
  bool same_action(const MobiusMap& other, double tol = 1e-9) const;
};

/// (lhs o rhs)(z) = lhs(rhs(z)).
MobiusMap compose(const MobiusMap& lhs, const MobiusMap& rhs);

DiskPoint mobius_apply(const MobiusMap& m, const DiskPoint& z);

/// Hyperbolic distance in the curvature -1 disk model.
double hyperbolic_distance(const DiskPoint& z1, const DiskPoint& z2);
double hyperbolic_distance(Complex z1, Complex z2);

/// Translation length of a hyperbolic element, 2 arccosh |Re a|.
double translation_length(const MobiusMap& m);

/// Regular-octagon atlas of the Bolza surface.
struct SurfaceAtlas {
  /// g_0..g_3 followed by their inverses; generators[k + 4] = generators[k]^{-1}.
  std::array<MobiusMap, 8> generators;
  std::array<DiskPoint, 8> octagon_vertices;
  double vertex_radius = 0.0;
  /// Side k is the arc of the isometric circle of generators[k]; the
  /// octagon is the region outside all eight circles.
  std::array<Complex, 8> wall_centers;
  std::array<double, 8> wall_radii{};
  /// Hyperbolic distance from the origin to a vertex.
  double circumradius = 0.0;
  /// Hyperbolic distance from the origin to a side midpoint.
  double inradius = 0.0;
  /// Group elements whose translate of the octagon touches the octagon
  /// (identity first). Used for ghost-value reconstruction.
  std::vector<MobiusMap> tile_neighbors;

  /// Closed-octagon membership, with a small slack for points on a wall.
  bool contains(Complex z, double slack = 1e-12) const;

  /// Largest amount by which z violates a wall (0 when inside).
  double wall_violation(Complex z) const;

  /// All reduced words in the generators of length <= max_length (identity first).
  std::vector<MobiusMap> words_up_to(int max_length) const;

  /// Words of exact reduced length `length`.
  std::vector<MobiusMap> words_of_length(int length) const;
};

SurfaceAtlas bolza_atlas();

struct Reduction {
  DiskPoint point;  ///< representative in the closed octagon
  MobiusMap map;    ///< deck transformation with map(point) = input
  int steps = 0;
};

/// Greedy reduction: repeatedly applies the generator that most decreases the
/// distance to the origin. Throws NotReducible after 16 steps.
Reduction reduce_to_domain(const SurfaceAtlas& atlas, const DiskPoint& z);

/// Raw-complex variant used on hot paths; no disk validation.
Reduction reduce_complex(const SurfaceAtlas& atlas, Complex z);

}  // namespace geoflow
