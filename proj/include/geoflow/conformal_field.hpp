#pragma once

// Group-invariant conformal metrics e^{2 rho} g_hyp sampled on the lattice.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "geoflow/lattice.hpp"
#include "geoflow/spline.hpp"

namespace geoflow {

/// Point evaluation of a field. Gradient is Euclidean in the disk chart.
struct FieldSample {
  double rho = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  double laplacian = 0.0;  ///< hyperbolic Laplacian of rho
  double curvature = 0.0;
};

class ConformalField {
 public:
  /// `rho` holds one value per lattice node. Interior values are authoritative;
  /// with `fill_ghosts` the ghost band is rebuilt from them, otherwise the
  /// caller's ghost values (band <= kGhostBand) are kept as given.
  ConformalField(std::shared_ptr<const Lattice> lattice, std::vector<double> rho, bool fill_ghosts = true);
  /// Same, with the gradient table supplied (band <= 3) instead of differenced.
  ConformalField(std::shared_ptr<const Lattice> lattice, std::vector<double> rho, std::vector<double> rho_x,
                 std::vector<double> rho_y);

  /// rho == c everywhere.
  static ConformalField constant(std::shared_ptr<const Lattice> lattice, double c = 0.0);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  const SurfaceAtlas& atlas() const { return lattice_->atlas(); }
  double grid_spacing() const { return lattice_->spacing(); }

  const std::vector<double>& values() const { return rho_; }
  /// Nodal tables, valid on nodes with band <= 3.
  const std::vector<double>& curvature_table() const { return k_; }
  const std::vector<double>& laplacian_table() const { return lap_; }
  const std::vector<double>& gradient_x_table() const { return gx_; }
  const std::vector<double>& gradient_y_table() const { return gy_; }

  /// Sum of area weights times e^{2 rho}.
  double area() const { return area_; }
  /// |area / reference_area - 1|.
  double area_defect() const;
  /// Area-weighted mean curvature.
  double kbar() const { return kbar_; }
  /// Extremes of K over interior nodes and interpolated cell centres.
  double k_min() const { return k_min_; }
  double k_max() const { return k_max_; }
  /// K1 = min(-K), K2 = max(-K).
  double k1() const { return -k_max_; }
  double k2() const { return -k_min_; }
  double pinching() const { return k2() / k1(); }

  /// Constant that was added to reach the reference area, when known.
  double normalization_shift() const { return shift_; }
  void set_normalization_shift(double s) { shift_ = s; }

  /// Reduces z to the octagon, interpolates, and pulls the gradient back.
  /// Throws OutOfRange outside the supported neighbourhood.
  FieldSample evaluate(Complex z) const;
  FieldSample evaluate(const DiskPoint& z) const { return evaluate(z.value()); }
  /// Same as evaluate but for points already in the closed octagon.
  FieldSample evaluate_reduced(Complex w) const;

  double curvature_at(Complex z) const;

 private:
  void build_tables(std::vector<double> gx = {}, std::vector<double> gy = {});

  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> rho_;
  std::vector<double> lap_;
  std::vector<double> k_;
  std::vector<double> gx_;
  std::vector<double> gy_;
  SplineTable<5> table_;
  double area_ = 0.0;
  double kbar_ = -1.0;
  double k_min_ = -1.0;
  double k_max_ = -1.0;
  double shift_ = 0.0;
};

struct CurvatureField {
  std::vector<double> values;  ///< K per node (band <= 3)
  double kbar = -1.0;
  double k_min = -1.0;
  double k_max = -1.0;
};

CurvatureField gauss_curvature(const ConformalField& field);

/// Sum over the octagon of f e^{2 rho} dA_hyp. f is sampled on the lattice and
/// must be valid on nodes with non-zero area weight.
double area_integral(const ConformalField& field, const std::vector<double>& f);

/// Shifts rho by a constant so that the area matches the lattice reference area.
std::vector<double> normalize_area(const Lattice& lattice, std::vector<double> rho, double* applied_shift = nullptr);

/// Scalar function on the surface stored on the lattice; used for perturbations.
class LatticeScalar {
 public:
  LatticeScalar() = default;
  /// Interior values are authoritative; ghosts are filled.
  LatticeScalar(std::shared_ptr<const Lattice> lattice, std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  double operator()(Complex z) const;
  /// Value and Euclidean gradient at z.
  void value_gradient(Complex z, double& f, double& fx, double& fy) const;

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> values_;
  SplineTable<1> table_;
};

/// Subtracts the g-area mean so that area_integral(field, psi) vanishes.
LatticeScalar project_mean_zero(const ConformalField& field, std::vector<double> psi);

/// psi = -(K - kbar), the normalized Ricci flow direction.
LatticeScalar ricci_direction(const ConformalField& field);

/// rho + eps psi shifted back to the reference area. The gradient table is the
/// base table plus eps times the gradient of psi, so no extra differencing noise.
ConformalField perturbed(const ConformalField& field, const LatticeScalar& psi, double eps);

/// Hyperbolic Laplacian of psi at interior nodes (same stencil as the curvature).
std::vector<double> hyperbolic_laplacian(const Lattice& lattice, const std::vector<double>& values);

// Bump fields -----------------------------------------------------------------

/// Sum of radial bumps a (1 - (d/w)^2)^3 over the orbits of the centres under
/// all group words of length <= 2. Exactly invariant because points are
/// reduced before summing.
class BumpProfile {
 public:
  BumpProfile(const SurfaceAtlas& atlas, const std::vector<DiskPoint>& centers, std::vector<double> amplitudes,
              double width);

  double value(Complex z) const;
  /// Euclidean gradient of the orbit sum at z (no reduction; z near the octagon).
  Complex gradient(Complex z) const;

  double width() const { return width_; }

 private:
  const SurfaceAtlas* atlas_;
  std::vector<Complex> orbit_points_;
  std::vector<double> orbit_amps_;
  double width_;
};

/// Bump field sampled at every node (no ghost fill) and shifted to the
/// reference area. Throws CurvaturePositive if max K >= 0 and
/// ConstructionError if the orbit truncation is not valid for this width.
ConformalField field_from_bumps(std::shared_ptr<const Lattice> lattice, const std::vector<DiskPoint>& centers,
                                const std::vector<double>& amplitudes, double width);

/// Lattice samples of a bump profile (used for perturbations).
std::vector<double> sample_profile(const Lattice& lattice, const BumpProfile& profile);

// Snapshots -------------------------------------------------------------------

void write_snapshot(const ConformalField& field, std::ostream& out);
void write_snapshot(const ConformalField& field, const std::string& path);
ConformalField read_snapshot(std::istream& in);
ConformalField read_snapshot(const std::string& path);

}  // namespace geoflow
