#include "geoflow/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kMaxCorrection = 1e-3;

double log_scale(Complex z) { return std::log(2.0 / (1.0 - std::norm(z))); }

// One chart of the geodesic flow. Velocity is Euclidean; its g-length is 1.
class Tracer {
 public:
  Tracer(const ConformalField& field, const UnitTangent& v) : field_(field), atlas_(field.atlas()) {
    const UnitTangent c = canonical(atlas_, v);
    z_ = c.z;
    here_ = field_.evaluate_reduced(z_);
    vel_ = std::polar(std::exp(-phi()), c.theta);
    if (v.z != c.z) word_ = reduce_complex(atlas_, v.z).map;
  }

  Complex z() const { return z_; }
  double theta() const { return std::arg(vel_); }
  double phi() const { return here_.rho + log_scale(z_); }
  double curvature() const { return here_.curvature; }
  const MobiusMap& word() const { return word_; }
  double max_correction() const { return max_corr_; }

  void step(double h) {
    const Complex z0 = z_, v0 = vel_;
    const Complex a1 = accel(z0, v0, &here_);
    const Complex z1 = z0 + 0.5 * h * v0, v1 = v0 + 0.5 * h * a1;
    const Complex a2 = accel(z1, v1, nullptr);
    const Complex z2 = z0 + 0.5 * h * v1, v2 = v0 + 0.5 * h * a2;
    const Complex a3 = accel(z2, v2, nullptr);
    const Complex z3 = z0 + h * v2, v3 = v0 + h * a3;
    const Complex a4 = accel(z3, v3, nullptr);
    Complex zn = z0 + h / 6.0 * (v0 + 2.0 * v1 + 2.0 * v2 + v3);
    Complex vn = v0 + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    if (!atlas_.contains(zn)) {
      const Reduction red = reduce_complex(atlas_, zn);
      // z = gamma(w); the chart velocity is pushed forward by gamma^{-1}.
      vn /= red.map.derivative(red.point.value());
      zn = red.point.value();
      word_ = compose(word_, red.map);
    }
    z_ = zn;
    here_ = field_.evaluate_reduced(z_);
    const double speed = std::exp(phi()) * std::abs(vn);
    const double corr = std::abs(speed - 1.0);
    if (corr > kMaxCorrection) {
      throw StepFailure("speed renormalization of " + std::to_string(corr) + " exceeds 1e-3; reduce dt");
    }
    max_corr_ = std::max(max_corr_, corr);
    vel_ = vn / speed;
  }

 private:
  Complex accel(Complex z, Complex v, const FieldSample* known) const {
    const FieldSample s = known ? *known : field_.evaluate(z);
    const double q = 1.0 - std::norm(z);
    const double px = s.rho_x + 2.0 * z.real() / q;
    const double py = s.rho_y + 2.0 * z.imag() / q;
    const double u = v.real(), w = v.imag();
    return {-px * (u * u - w * w) - 2.0 * py * u * w, -py * (w * w - u * u) - 2.0 * px * u * w};
  }

  const ConformalField& field_;
  const SurfaceAtlas& atlas_;
  Complex z_;
  Complex vel_;
  FieldSample here_;
  MobiusMap word_;
  double max_corr_ = 0.0;
};

// Curvature at the midpoint between nodes i and i+1 (cubic Lagrange).
double mid_value(const std::vector<double>& k, std::size_t i) {
  const std::size_t n = k.size();
  if (n < 4) return 0.5 * (k[i] + k[i + 1]);
  if (i == 0) return (3.0 * k[0] + 6.0 * k[1] - k[2]) / 8.0;
  if (i + 2 >= n) return (3.0 * k[n - 1] + 6.0 * k[n - 2] - k[n - 3]) / 8.0;
  return (-k[i - 1] + 9.0 * k[i] + 9.0 * k[i + 1] - k[i + 2]) / 16.0;
}

// RK4 for dw/dt = -w^2 - K from the last node to the first, each step moving
// time by h. Returns w at every node. Throws when w leaves [lo, hi].
std::vector<double> riccati_sweep(const std::vector<double>& k, double h, double w_end, double lo, double hi) {
  const std::size_t n = k.size();
  std::vector<double> w(n);
  w[n - 1] = w_end;
  auto f = [](double x, double kk) { return -x * x - kk; };
  double cur = w_end;
  for (std::size_t s = n - 1; s-- > 0;) {
    const double k_far = k[s + 1], k_near = k[s], k_mid = mid_value(k, s);
    const double r1 = f(cur, k_far);
    const double r2 = f(cur + 0.5 * h * r1, k_mid);
    const double r3 = f(cur + 0.5 * h * r2, k_mid);
    const double r4 = f(cur + h * r3, k_near);
    cur += h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    if (!(cur >= lo && cur <= hi)) {
      throw RiccatiBlowup("Riccati solution left [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    w[s] = cur;
  }
  return w;
}

int step_count(double duration, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  return std::max(1, static_cast<int>(std::lround(std::abs(duration) / dt)));
}

double chart_derivative(const BaseFunction& f, Complex z, double theta, double phi, double h_s) {
  const Complex e = std::polar(h_s * std::exp(-phi), theta + kHalfPi);
  return (f(z + e) - f(z - e)) / (2.0 * h_s);
}

double trapezoid(const std::vector<double>& f, std::size_t n, double dt) {
  if (n < 2) return 0.0;
  double s = 0.5 * (f[0] + f[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
  return s * dt;
}

// J(t_i) = exp(int_0^{t_i} w) by cumulative trapezoid.
std::vector<double> jacobi_weights(const std::vector<double>& w, std::size_t n, double dt) {
  std::vector<double> j(n);
  double acc = 0.0;
  j[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    acc += 0.5 * dt * (w[i - 1] + w[i]);
    j[i] = std::exp(acc);
  }
  return j;
}

}  // namespace

UnitTangent UnitTangent::reversed() const { return {z, theta + std::numbers::pi}; }
UnitTangent UnitTangent::rotated() const { return {z, theta + kHalfPi}; }

UnitTangent canonical(const SurfaceAtlas& atlas, const UnitTangent& v) {
  if (atlas.contains(v.z)) return v;
  const Reduction red = reduce_complex(atlas, v.z);
  const Complex d = 1.0 / red.map.derivative(red.point.value());
  return {red.point.value(), v.theta + std::arg(d)};
}

Trajectory integrate_geodesic(const ConformalField& field, const UnitTangent& start, double duration, double dt,
                              double max_duration) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (std::abs(duration) > max_duration) throw DomainError("duration exceeds the configured maximum");
  Tracer tr(field, start);
  Trajectory out;
  const double sign = duration < 0.0 ? -1.0 : 1.0;
  const int full = static_cast<int>(std::floor(std::abs(duration) / dt + 1e-9));
  const double rest = std::abs(duration) - full * dt;
  out.states.reserve(full + 2);
  out.states.push_back({tr.z(), tr.theta(), 0.0, tr.word()});
  for (int i = 1; i <= full; ++i) {
    tr.step(sign * dt);
    out.states.push_back({tr.z(), tr.theta(), sign * i * dt, tr.word()});
  }
  if (rest > 1e-12) {
    tr.step(sign * rest);
    out.states.push_back({tr.z(), tr.theta(), duration, tr.word()});
  }
  out.max_speed_correction = tr.max_correction();
  return out;
}

UnitTangent flow(const ConformalField& field, const UnitTangent& v, double t, double dt) {
  if (t == 0.0) return canonical(field.atlas(), v);
  const Trajectory tr = integrate_geodesic(field, v, t, dt, 1e9);
  return {tr.states.back().z, tr.states.back().theta};
}

OrbitTrace trace_orbit(const ConformalField& field, const UnitTangent& v, int steps, double dt) {
  Tracer tr(field, v);
  OrbitTrace out;
  out.dt = dt;
  out.z.reserve(steps + 1);
  out.theta.reserve(steps + 1);
  out.curvature.reserve(steps + 1);
  out.phi.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) tr.step(dt);
    out.z.push_back(tr.z());
    out.theta.push_back(tr.theta());
    out.curvature.push_back(tr.curvature());
    out.phi.push_back(tr.phi());
  }
  return out;
}

double riccati_error_bound(const ConformalField& field, double burn_in, double dt) {
  const double s1 = std::sqrt(field.k1()), s2 = std::sqrt(field.k2());
  const double contraction = std::exp(-2.0 * s1 * burn_in) * (s2 - s1);
  const double discretization = std::pow(dt, 4) * std::pow(s2, 5) / s1;
  return contraction + discretization;
}

namespace {

RiccatiEstimate riccati_one(const ConformalField& field, const UnitTangent& v, double burn_in, double dt,
                            const double* seed, RiccatiKind kind) {
  if (burn_in < 5.0) throw DomainError("burn_in must be at least 5");
  if (field.k_max() >= 0.0) throw RiccatiBlowup("field has non-negative curvature");
  const int n = step_count(burn_in, dt);
  const bool stable = kind == RiccatiKind::Stable;
  const OrbitTrace tr = trace_orbit(field, v, n, stable ? dt : -dt);
  const double kend = tr.curvature.back();
  if (kend >= 0.0) throw RiccatiBlowup("non-negative curvature on the orbit");
  const double bound = 2.0 * std::sqrt(field.k2());
  const double w0 = seed ? *seed : (stable ? -std::sqrt(-kend) : std::sqrt(-kend));
  const auto w = stable ? riccati_sweep(tr.curvature, -dt, w0, -bound, 0.0)
                        : riccati_sweep(tr.curvature, dt, w0, 0.0, bound);
  return {w[0], n * dt, kind, riccati_error_bound(field, n * dt, dt)};
}

}  // namespace

RiccatiEstimate riccati_stable(const ConformalField& field, const UnitTangent& v, double burn_in, double dt,
                               const double* seed) {
  return riccati_one(field, v, burn_in, dt, seed, RiccatiKind::Stable);
}

RiccatiEstimate riccati_unstable(const ConformalField& field, const UnitTangent& v, double burn_in, double dt,
                                 const double* seed) {
  return riccati_one(field, v, burn_in, dt, seed, RiccatiKind::Unstable);
}

StableOrbit stable_orbit(const ConformalField& field, const UnitTangent& v, double horizon, double burn_in,
                         double dt) {
  if (field.k_max() >= 0.0) throw RiccatiBlowup("field has non-negative curvature");
  StableOrbit out;
  out.horizon_steps = horizon > 0.0 ? step_count(horizon, dt) : 0;
  const int nb = step_count(burn_in, dt);
  out.trace = trace_orbit(field, v, out.horizon_steps + nb, dt);
  const double kend = out.trace.curvature.back();
  if (kend >= 0.0) throw RiccatiBlowup("non-negative curvature on the orbit");
  const double bound = 2.0 * std::sqrt(field.k2());
  out.w = riccati_sweep(out.trace.curvature, -dt, -std::sqrt(-kend), -bound, 0.0);
  out.error_bound = riccati_error_bound(field, nb * dt, dt);
  return out;
}

double jacobi_ratio(const ConformalField& field, const UnitTangent& v, double t, double dt, double burn_in) {
  if (t < 0.0) throw DomainError("jacobi_ratio needs t >= 0");
  if (t == 0.0) return 1.0;
  const int n = step_count(t, dt);
  const double step = t / n;
  const StableOrbit orbit = stable_orbit(field, v, t, burn_in, step);
  return std::exp(trapezoid(orbit.w, orbit.horizon_steps + 1, step));
}

double stable_derivative(const ConformalField& field, const BaseFunction& f, const UnitTangent& v, double h_s) {
  const double phi = field.evaluate(v.z).rho + log_scale(v.z);
  return chart_derivative(f, v.z, v.theta, phi, h_s);
}

UnitTangent horizontal_shift(const ConformalField& field, const UnitTangent& v, double s, double dt) {
  if (s == 0.0) return v;
  const Trajectory tr = integrate_geodesic(field, v.rotated(), s, dt, 1e9);
  // The geodesic velocity is parallel; v stays a quarter turn behind it.
  return {tr.states.back().z, tr.states.back().theta - kHalfPi};
}

double horizontal_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v, double h_s,
                             double dt) {
  return (f(horizontal_shift(field, v, h_s, dt)) - f(horizontal_shift(field, v, -h_s, dt))) / (2.0 * h_s);
}

double vertical_derivative(const BundleFunction& f, const UnitTangent& v, double h_theta) {
  return (f({v.z, v.theta + h_theta}) - f({v.z, v.theta - h_theta})) / (2.0 * h_theta);
}

double flow_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v, double h_t,
                       double dt) {
  return (f(flow(field, v, h_t, dt)) - f(flow(field, v, -h_t, dt))) / (2.0 * h_t);
}

UnitTangent stable_shift(const ConformalField& field, const UnitTangent& v, double w, double s, double dt) {
  UnitTangent u = horizontal_shift(field, v, s, dt);
  u.theta += w * s;
  return u;
}

double stable_slope(const ConformalField& field, const BundleFunction& f, const UnitTangent& v, double w, double h_s,
                    double dt) {
  return (f(stable_shift(field, v, w, h_s, dt)) - f(stable_shift(field, v, w, -h_s, dt))) / (2.0 * h_s);
}

double stable_derivative(const ConformalField& field, const BundleFunction& f, const UnitTangent& v,
                         const GeodesicOptions& opt) {
  const double w = riccati_stable(field, v, opt.burn_in, opt.dt).value;
  return horizontal_derivative(field, f, v, opt.h_s, opt.dt) + w * vertical_derivative(f, v, opt.h_theta);
}

HalfOrbitIntegral half_orbit_integral(const ConformalField& field, const BaseFunction& f, const StableOrbit& orbit,
                                      double h_s) {
  const std::size_t n = orbit.horizon_steps + 1;
  const double dt = orbit.trace.dt;
  const auto j = jacobi_weights(orbit.w, n, dt);
  std::vector<double> g(n);
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double es = chart_derivative(f, orbit.trace.z[i], orbit.trace.theta[i], orbit.trace.phi[i], h_s);
    sup = std::max(sup, std::abs(es));
    g[i] = j[i] * es;
  }
  const double s1 = std::sqrt(field.k1());
  const double horizon = (n - 1) * dt;
  return {trapezoid(g, n, dt), sup * std::exp(-s1 * horizon) / s1};
}

HalfOrbitIntegral half_orbit_integral(const ConformalField& field, const BaseFunction& f, const UnitTangent& v,
                                      const GeodesicOptions& opt) {
  const StableOrbit orbit = stable_orbit(field, v, opt.horizon, opt.burn_in, opt.dt);
  return half_orbit_integral(field, f, orbit, opt.h_s);
}

namespace {

double simpson_or_trapezoid(const std::vector<double>& g, double hq) {
  const std::size_t m = g.size() - 1;
  if (m % 2 != 0) return trapezoid(g, g.size(), hq);
  double s = g[0] + g[m];
  for (std::size_t k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * g[k];
  return s * hq / 3.0;
}

}  // namespace

StableIntegralsFd half_orbit_integrals_fd(const ConformalField& field, const UnitTangent& v,
                                          const GeodesicOptions& opt, double node_spacing) {
  const StableOrbit orbit = stable_orbit(field, v, opt.horizon, opt.burn_in, opt.dt);
  const int n = orbit.horizon_steps;
  int stride = std::max(1, static_cast<int>(std::lround(node_spacing / opt.dt)));
  while (stride > 1 && (n % (2 * stride)) != 0) --stride;
  const int m = n / stride;
  const auto j = jacobi_weights(orbit.w, n + 1, opt.dt);
  const BundleFunction ws = [&](const UnitTangent& u) { return riccati_stable(field, u, opt.burn_in, opt.dt).value; };
  std::vector<double> g1(m + 1), g2(m + 1);
  double sup1 = 0.0, sup2 = 0.0, slope0 = 0.0;
  for (int k = 0; k <= m; ++k) {
    const int i = k * stride;
    const UnitTangent u{orbit.trace.z[i], orbit.trace.theta[i]};
    const double w = orbit.w[i];
    const double slope = stable_slope(field, ws, u, w, opt.h_s, opt.dt);
    if (k == 0) slope0 = slope;
    sup1 = std::max(sup1, std::abs(slope));
    sup2 = std::max(sup2, std::abs(2.0 * w * slope));
    g1[k] = j[i] * slope;
    g2[k] = j[i] * 2.0 * w * slope;
  }
  const double hq = stride * opt.dt;
  const double s1 = std::sqrt(field.k1());
  const double tail = std::exp(-s1 * n * opt.dt) / s1;
  StableIntegralsFd out;
  out.stable = {simpson_or_trapezoid(g1, hq), sup1 * tail};
  out.stable_squared = {simpson_or_trapezoid(g2, hq), sup2 * tail};
  out.stable_slope = slope0;
  return out;
}

HalfOrbitBundle half_orbit_bundle(const ConformalField& field, const UnitTangent& v, const GeodesicOptions& opt) {
  const StableOrbit orbit = stable_orbit(field, v, opt.horizon, opt.burn_in, opt.dt);
  const auto& tr = orbit.trace;
  const std::size_t total = tr.z.size();
  const double dt = tr.dt;
  const BaseFunction kf = [&](Complex z) { return field.curvature_at(z); };
  std::vector<double> q(total);
  for (std::size_t i = 0; i < total; ++i) q[i] = chart_derivative(kf, tr.z[i], tr.theta[i], tr.phi[i], opt.h_s);

  // u = e^s(w^s) solves X u = -3 w u - e^s K; backward integration is stable.
  std::vector<double> u(total, 0.0);
  double cur = 0.0;
  const double h = -dt;
  auto rhs = [](double x, double w, double qq) { return -3.0 * w * x - qq; };
  for (std::size_t s = total - 1; s-- > 0;) {
    const double wm = mid_value(orbit.w, s), qm = mid_value(q, s);
    const double r1 = rhs(cur, orbit.w[s + 1], q[s + 1]);
    const double r2 = rhs(cur + 0.5 * h * r1, wm, qm);
    const double r3 = rhs(cur + 0.5 * h * r2, wm, qm);
    const double r4 = rhs(cur + h * r3, orbit.w[s], q[s]);
    cur += h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    u[s] = cur;
  }

  const std::size_t n = orbit.horizon_steps + 1;
  const auto j = jacobi_weights(orbit.w, n, dt);
  std::vector<double> gw(n), gw2(n), gk(n);
  double sup_w = 0.0, sup_w2 = 0.0, sup_k = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gw[i] = j[i] * u[i];
    gw2[i] = j[i] * 2.0 * orbit.w[i] * u[i];
    gk[i] = -j[i] * q[i];
    sup_w = std::max(sup_w, std::abs(u[i]));
    sup_w2 = std::max(sup_w2, std::abs(2.0 * orbit.w[i] * u[i]));
    sup_k = std::max(sup_k, std::abs(q[i]));
  }
  const double s1 = std::sqrt(field.k1());
  const double tail = std::exp(-s1 * (n - 1) * dt) / s1;
  HalfOrbitBundle out;
  out.w = orbit.w[0];
  out.stable_slope = u[0];
  out.i_w = trapezoid(gw, n, dt);
  out.i_w2 = trapezoid(gw2, n, dt);
  out.i_negk = trapezoid(gk, n, dt);
  out.tail_bound = std::max({sup_w, sup_w2, sup_k}) * tail;
  out.error_bound = orbit.error_bound;
  return out;
}

}  // namespace geoflow
