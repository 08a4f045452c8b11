#pragma once

// Geodesic flow of e^{2 rho} g_hyp, Riccati solutions along orbits, stable and
// vertical derivatives, and half-orbit integrals.

#include <functional>
#include <vector>

#include "geoflow/conformal_field.hpp"

namespace geoflow {

/// Unit tangent vector: base point and direction angle in the disk chart.
struct UnitTangent {
  Complex z{0.0, 0.0};
  double theta = 0.0;

  UnitTangent() = default;
  UnitTangent(Complex z_, double theta_) : z(z_), theta(theta_) {}
  UnitTangent(const DiskPoint& p, double theta_) : z(p.value()), theta(theta_) {}

  /// Same vector with the opposite direction.
  UnitTangent reversed() const;
  /// Rotated by +pi/2 (J v).
  UnitTangent rotated() const;
};

/// Representative with base point in the closed octagon.
UnitTangent canonical(const SurfaceAtlas& atlas, const UnitTangent& v);

struct GeodesicState {
  Complex z;
  double theta = 0.0;
  double t = 0.0;
  /// Deck transformation taking the current chart back to the starting lift.
  MobiusMap word;
};

struct GeodesicOptions {
  double dt = 5e-3;
  double burn_in = 20.0;
  double horizon = 20.0;  ///< truncation of half-orbit integrals
  double h_s = 1e-3;      ///< base step for stable derivatives
  double h_theta = 1e-4;  ///< fiber step
  double h_t = 1e-2;      ///< flow step for X derivatives
  double max_duration = 400.0;
};

struct Trajectory {
  std::vector<GeodesicState> states;
  /// Largest |g-speed - 1| removed by renormalization over the run.
  double max_speed_correction = 0.0;
};

/// Fixed-step RK4 for the conformal geodesic equations with per-step speed
/// renormalization and reduction to the octagon whenever the base point leaves
/// it. Negative duration integrates backward. The last step is shortened so
/// the trajectory ends exactly at `duration`.
Trajectory integrate_geodesic(const ConformalField& field, const UnitTangent& start, double duration, double dt,
                              double max_duration = 400.0);

/// phi_t(v), reduced to the octagon.
UnitTangent flow(const ConformalField& field, const UnitTangent& v, double t, double dt = 5e-3);

/// Base-point samples along an orbit at a fixed step (t_i = i dt, dt may be negative).
struct OrbitTrace {
  double dt = 0.0;
  std::vector<Complex> z;
  std::vector<double> theta;
  std::vector<double> curvature;
  std::vector<double> phi;  ///< rho + log(2 / (1 - |z|^2)) at the node
};

OrbitTrace trace_orbit(const ConformalField& field, const UnitTangent& v, int steps, double dt);

enum class RiccatiKind { Stable, Unstable };

struct RiccatiEstimate {
  double value = 0.0;
  double burn_in = 0.0;
  RiccatiKind kind = RiccatiKind::Stable;
  double error_bound = 0.0;
};

/// w^s(v): trace forward for burn_in, seed with -sqrt(-K) (or `seed` when
/// given), integrate the Riccati equation backward.
RiccatiEstimate riccati_stable(const ConformalField& field, const UnitTangent& v, double burn_in = 20.0,
                               double dt = 5e-3, const double* seed = nullptr);
/// w^u(v): trace backward, seed with +sqrt(-K), integrate forward.
RiccatiEstimate riccati_unstable(const ConformalField& field, const UnitTangent& v, double burn_in = 20.0,
                                 double dt = 5e-3, const double* seed = nullptr);

/// Exponential-contraction part of the Riccati error plus a step-size allowance.
double riccati_error_bound(const ConformalField& field, double burn_in, double dt);

/// Forward orbit with w^s cached at every node up to `horizon`.
struct StableOrbit {
  OrbitTrace trace;
  std::vector<double> w;  ///< w^s at nodes 0..trace size-1 (valid up to horizon)
  int horizon_steps = 0;
  double error_bound = 0.0;  ///< bound at nodes within the horizon
};

StableOrbit stable_orbit(const ConformalField& field, const UnitTangent& v, double horizon, double burn_in,
                         double dt);

/// j^s(phi_t v) / j^s(v) = exp(int_0^t w^s).
double jacobi_ratio(const ConformalField& field, const UnitTangent& v, double t, double dt = 5e-3,
                    double burn_in = 20.0);

using BaseFunction = std::function<double(Complex)>;
using BundleFunction = std::function<double(const UnitTangent&)>;

/// Centered difference of f along J v (chart segment of g-length h_s each way).
double stable_derivative(const ConformalField& field, const BaseFunction& f, const UnitTangent& v,
                         double h_s = 1e-3);
/// H f + w^s V f for a function on the unit tangent bundle. H f moves the base
/// along the geodesic tangent to J v, carrying v by parallel transport.
double stable_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v,
                         const GeodesicOptions& opt = {});
/// Point at parameter s on a curve through v tangent to H + w V.
UnitTangent stable_shift(const ConformalField& field, const UnitTangent& v, double w, double s, double dt = 5e-3);
/// (H + w V) f by one centred difference along stable_shift.
double stable_slope(const ConformalField& field, const BundleFunction& f, const UnitTangent& v, double w,
                    double h_s = 1e-3, double dt = 5e-3);
double horizontal_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v,
                             double h_s = 1e-3, double dt = 5e-3);
double vertical_derivative(const BundleFunction& f, const UnitTangent& v, double h_theta = 1e-3);
/// Centered difference along the flow.
double flow_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v,
                       double h_t = 1e-2, double dt = 5e-3);

/// Moves the base along the geodesic with initial velocity J v by g-length s,
/// with v parallel transported.
UnitTangent horizontal_shift(const ConformalField& field, const UnitTangent& v, double s, double dt = 5e-3);

struct HalfOrbitIntegral {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// I_f(v) for f on the surface: composite trapezoid of J(t) e^s f(phi_t v) up to the horizon.
HalfOrbitIntegral half_orbit_integral(const ConformalField& field, const BaseFunction& f, const UnitTangent& v,
                                      const GeodesicOptions& opt = {});
/// Same along a precomputed stable orbit.
HalfOrbitIntegral half_orbit_integral(const ConformalField& field, const BaseFunction& f, const StableOrbit& orbit,
                                      double h_s = 1e-3);

struct StableIntegralsFd {
  HalfOrbitIntegral stable;          ///< I_{w^s}
  HalfOrbitIntegral stable_squared;  ///< I_{(w^s)^2}
  double stable_slope = 0.0;         ///< e^s(w^s)(v)
};

/// I_{w^s} and I_{(w^s)^2} with e^s(w^s) from finite differences of fresh
/// Riccati solves at quadrature nodes spaced `node_spacing` apart (Simpson).
StableIntegralsFd half_orbit_integrals_fd(const ConformalField& field, const UnitTangent& v,
                                          const GeodesicOptions& opt = {}, double node_spacing = 0.1);

/// Half-orbit integrals that share one orbit. e^s(w^s) is obtained by
/// integrating (X + 3 w^s) u = -e^s K backward along the orbit.
struct HalfOrbitBundle {
  double w = 0.0;               ///< w^s(v)
  double stable_slope = 0.0;    ///< e^s(w^s)(v)
  double i_w = 0.0;             ///< I_{w^s}
  double i_w2 = 0.0;            ///< I_{(w^s)^2}
  double i_negk = 0.0;          ///< I_{-K}
  double tail_bound = 0.0;      ///< largest tail bound of the three
  double error_bound = 0.0;     ///< Riccati error bound at v
};

HalfOrbitBundle half_orbit_bundle(const ConformalField& field, const UnitTangent& v, const GeodesicOptions& opt = {});

}  // namespace geoflow
