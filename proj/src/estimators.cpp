#include "geoflow/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "geoflow/errors.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double sqrt_neg(double k) {
  if (k >= 0.0) throw CurvaturePositive("non-negative curvature at a sample point");
  return std::sqrt(-k);
}

std::vector<double> root_curvature_table(const ConformalField& field) {
  const Lattice& lat = field.lattice();
  std::vector<double> r(lat.size(), 0.0);
  for (int idx : lat.weighted_nodes()) {
    const double k = field.curvature_table()[idx];
    if (k >= 0.0) throw CurvaturePositive("non-negative curvature on the lattice");
    r[idx] = std::sqrt(-k);
  }
  return r;
}

// (1/A) int psi sqrt(-K) dA
double psi_root_mean(const ConformalField& field, const LatticeScalar& psi) {
  auto r = root_curvature_table(field);
  for (int idx : field.lattice().weighted_nodes()) r[idx] *= psi.values()[idx];
  return area_mean(field, r);
}

}  // namespace

SampleStream::SampleStream(std::uint64_t seed, std::uint64_t index) : key_(mix(mix(seed) ^ mix(~index))) {}

std::uint64_t SampleStream::next() { return mix(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

double SampleStream::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) { return mix(seed * 0x2545f4914f6cdd1dULL + mix(label)); }

std::vector<LiouvilleSample> sample_liouville(const ConformalField& field, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_liouville needs n >= 1");
  const Lattice& lat = field.lattice();
  const SurfaceAtlas& atlas = field.atlas();
  double bx = 0.0, by = 0.0;
  for (const auto& p : atlas.octagon_vertices) {
    bx = std::max(bx, std::abs(p.value().real()));
    by = std::max(by, std::abs(p.value().imag()));
  }
  double rho_max = -1e300;
  for (int idx : lat.weighted_nodes()) rho_max = std::max(rho_max, field.values()[idx]);
  const double rv2 = atlas.vertex_radius * atlas.vertex_radius;
  const double bound = std::exp(2.0 * rho_max + 0.1) * 4.0 / ((1.0 - rv2) * (1.0 - rv2));

  return parallel_map<LiouvilleSample>(n, [&](std::size_t i) {
    SampleStream rng(seed, i);
    for (;;) {
      const Complex z((2.0 * rng.uniform() - 1.0) * bx, (2.0 * rng.uniform() - 1.0) * by);
      const double u = rng.uniform();
      if (!atlas.contains(z)) continue;
      const double s = 1.0 - std::norm(z);
      const double density = std::exp(2.0 * field.evaluate_reduced(z).rho) * 4.0 / (s * s);
      if (density > bound) throw Error("rejection bound too small");
      if (u * bound < density) return LiouvilleSample{UnitTangent(z, 2.0 * std::numbers::pi * rng.uniform()), 1.0};
    }
  });
}

EstimatorReport summarize(const std::string& quantity, const std::vector<double>& values, std::uint64_t seed,
                          double burn_in, double dt, double tail_bound) {
  const std::size_t n = values.size();
  if (n < 2) throw DomainError("an estimator needs at least two samples");
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1);
  return {quantity, mean, std::sqrt(var / n), n, seed, burn_in, dt, tail_bound};
}

std::string report_csv_header() { return "quantity,mean,stderr,n,seed,burn_in,dt,tail_bound"; }

std::string report_csv_row(const EstimatorReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%zu,%llu,%.17g,%.17g,%.17g", r.quantity.c_str(), r.mean, r.stderr_,
                r.n, static_cast<unsigned long long>(r.seed), r.burn_in, r.dt, r.tail_bound);
  return buf;
}

double combined_stderr(const EstimatorReport& a, const EstimatorReport& b) { return std::hypot(a.stderr_, b.stderr_); }

StableSamples stable_samples(const ConformalField& field, const EstimatorOptions& opt) {
  StableSamples s;
  s.options = opt;
  s.samples = sample_liouville(field, opt.n, opt.seed);
  s.w = parallel_map<double>(opt.n, [&](std::size_t i) {
    return riccati_stable(field, s.samples[i].v, opt.burn_in, opt.dt).value;
  });
  s.k.resize(opt.n);
  for (std::size_t i = 0; i < opt.n; ++i) s.k[i] = field.evaluate_reduced(s.samples[i].v.z).curvature;
  s.error_bound = riccati_error_bound(field, opt.burn_in, opt.dt);
  return s;
}

double area_mean(const ConformalField& field, const std::vector<double>& f) {
  return area_integral(field, f) / field.area();
}

double mean_root_curvature(const ConformalField& field) { return area_mean(field, root_curvature_table(field)); }

namespace {

// E[w^2] = -kbar for both w^s and w^u, so w^2 + kbar has mean zero; with
// c = 1/(2 sqrt(-kbar)) the first-order fluctuation of |w| cancels.
double riccati_control(double w, double kbar) { return (w * w + kbar) / (2.0 * std::sqrt(-kbar)); }

}  // namespace

EstimatorReport entropy_from(const ConformalField& field, const StableSamples& s) {
  const auto& o = s.options;
  std::vector<double> f(s.w.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = -s.w[i] - (o.control_variate ? riccati_control(s.w[i], field.kbar()) : 0.0);
  }
  return summarize("entropy", f, o.seed, o.burn_in, o.dt, s.error_bound);
}

EntropyReport entropy_estimate(const ConformalField& field, const EstimatorOptions& opt, bool dual) {
  const StableSamples s = stable_samples(field, opt);
  EntropyReport out;
  out.stable = entropy_from(field, s);
  if (!dual) return out;
  auto wu = parallel_map<double>(opt.n, [&](std::size_t i) {
    return riccati_unstable(field, s.samples[i].v, opt.burn_in, opt.dt).value;
  });
  if (opt.control_variate) {
    for (auto& w : wu) w -= riccati_control(w, field.kbar());
  }
  out.unstable = summarize("entropy_unstable", wu, opt.seed, opt.burn_in, opt.dt, s.error_bound);
  return out;
}

EstimatorReport entropy_derivative_from(const ConformalField& field, const LatticeScalar& psi,
                                        const StableSamples& s) {
  const auto& o = s.options;
  std::vector<double> f(s.w.size());
  const double exact = o.control_variate ? 0.5 * psi_root_mean(field, psi) : 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double p = psi(s.samples[i].v.z);
    f[i] = o.control_variate ? -0.5 * p * (s.w[i] + sqrt_neg(s.k[i])) + exact : -0.5 * p * s.w[i];
  }
  return summarize("dh_formula", f, o.seed, o.burn_in, o.dt, s.error_bound);
}

EstimatorReport entropy_derivative_formula(const ConformalField& field, const LatticeScalar& psi,
                                           const EstimatorOptions& opt) {
  return entropy_derivative_from(field, psi, stable_samples(field, opt));
}

EstimatorReport entropy_derivative_fd(const ConformalField& field, const LatticeScalar& psi, double eps,
                                      const EstimatorOptions& opt) {
  if (!(eps > 0.0)) throw DomainError("FD step must be positive");
  const auto samples = sample_liouville(field, opt.n, opt.seed);
  const ConformalField plus = perturbed(field, psi, eps);
  const ConformalField minus = perturbed(field, psi, -eps);
  // Both perturbed metrics have the reference area, so e^{2(rho_eps - rho)}
  // reweights the base Liouville samples to m_eps without normalization.
  auto term = [&](const ConformalField& g, const UnitTangent& v) {
    const double r = std::exp(2.0 * (g.evaluate_reduced(v.z).rho - field.evaluate_reduced(v.z).rho));
    return -r * riccati_stable(g, v, opt.burn_in, opt.dt).value;
  };
  auto d = parallel_map<double>(opt.n, [&](std::size_t i) {
    return (term(plus, samples[i].v) - term(minus, samples[i].v)) / (2.0 * eps);
  });
  const double eb = std::max(riccati_error_bound(plus, opt.burn_in, opt.dt),
                             riccati_error_bound(minus, opt.burn_in, opt.dt));
  return summarize("dh_fd", d, opt.seed, opt.burn_in, opt.dt, eb / eps);
}

double mrc_derivative_formula(const ConformalField& field, const LatticeScalar& psi) {
  const Lattice& lat = field.lattice();
  const auto lap = hyperbolic_laplacian(lat, psi.values());
  const auto root = root_curvature_table(field);
  std::vector<double> f(lat.size(), 0.0);
  for (int idx : lat.weighted_nodes()) {
    const double lap0 = std::exp(-2.0 * field.values()[idx]) * lap[idx];
    f[idx] = lap0 / (2.0 * root[idx]) + psi.values()[idx] * root[idx];
  }
  return area_mean(field, f);
}

double mrc_derivative_fd(const ConformalField& field, const LatticeScalar& psi, double eps) {
  return (mean_root_curvature(perturbed(field, psi, eps)) - mean_root_curvature(perturbed(field, psi, -eps))) /
         (2.0 * eps);
}

EstimatorReport riccati_mean_from(const StableSamples& s) {
  std::vector<double> f(s.w.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = s.w[i] * s.w[i] + s.k[i];
  const auto& o = s.options;
  return summarize("riccati_mean", f, o.seed, o.burn_in, o.dt, s.error_bound);
}

EstimatorReport riccati_mean_check(const ConformalField& field, const EstimatorOptions& opt) {
  return riccati_mean_from(stable_samples(field, opt));
}

EstimatorReport ricci_direction_from(const ConformalField& field, const StableSamples& s) {
  const auto& o = s.options;
  const double kbar = field.kbar();
  std::vector<double> f(s.w.size());
  if (o.control_variate) {
    // -(1/A) int (K - kbar) sqrt(-K) dA is exact; only the residual is sampled.
    const LatticeScalar psi = ricci_direction(field);
    const double exact = psi_root_mean(field, psi);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (s.k[i] - kbar) * (s.w[i] + sqrt_neg(s.k[i])) + exact;
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (s.k[i] - kbar) * s.w[i];
  }
  return summarize("ricci_direction", f, o.seed, o.burn_in, o.dt, s.error_bound);
}

EstimatorReport ricci_direction_sign(const ConformalField& field, const EstimatorOptions& opt) {
  return ricci_direction_from(field, stable_samples(field, opt));
}

IntegrationByParts verify_integration_by_parts(const ConformalField& field, const LatticeScalar& psi,
                                               const EstimatorOptions& opt, const GeodesicOptions& gopt) {
  const StableSamples s = stable_samples(field, opt);
  const BundleFunction ws = [&](const UnitTangent& u) { return riccati_stable(field, u, opt.burn_in, opt.dt).value; };
  const BaseFunction pf = [&](Complex z) { return psi(z); };
  std::vector<double> tails(opt.n);
  auto lhs = parallel_map<double>(opt.n, [&](std::size_t i) {
    const UnitTangent& v = s.samples[i].v;
    const HalfOrbitIntegral ip = half_orbit_integral(field, pf, v, gopt);
    tails[i] = ip.tail_bound;
    return vertical_derivative(ws, v, gopt.h_theta) * ip.value;
  });
  IntegrationByParts out;
  out.lhs = summarize("vws_ipsi", lhs, opt.seed, opt.burn_in, opt.dt, *std::max_element(tails.begin(), tails.end()));
  out.rhs = entropy_derivative_from(field, psi, s);
  return out;
}

double jensen_check(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size() || values.empty()) throw DomainError("values and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) throw NegativeInput("jensen_check needs non-negative values");
    if (weights[i] < 0.0) throw DomainError("negative weight");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("weights must sum to 1");
  // Work with offsets from the first value so that constant inputs give an exact zero.
  std::vector<double> wd(values.size()), term(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) wd[i] = weights[i] * (values[i] - values[0]);
  const double c = pairwise_sum(wd);
  for (std::size_t i = 0; i < values.size(); ++i) {
    term[i] = weights[i] * values[i] * values[i] * ((values[i] - values[0]) - c);
  }
  return pairwise_sum(term);
}

PinchedReport pinched_positivity_check(const ConformalField& field, const EstimatorOptions& opt,
                                       const GeodesicOptions& gopt_in) {
  GeodesicOptions gopt = gopt_in;
  gopt.burn_in = opt.burn_in;
  gopt.dt = opt.dt;
  const auto samples = sample_liouville(field, opt.n, opt.seed);
  const auto bundles = parallel_map<HalfOrbitBundle>(opt.n, [&](std::size_t i) {
    return half_orbit_bundle(field, samples[i].v, gopt);
  });
  std::vector<double> t1(opt.n), t2(opt.n), sum(opt.n), direct(opt.n);
  PinchedReport out;
  out.pinching = field.pinching();
  double tail = 0.0;
  for (std::size_t i = 0; i < opt.n; ++i) {
    const auto& b = bundles[i];
    const double k = field.evaluate_reduced(samples[i].v.z).curvature;
    const double w = b.w;
    const double a = b.i_w2 - w * b.i_w;
    t1[i] = k / (2.0 * w * w * w) * a * a;
    t2[i] = -w * b.i_w * b.i_w * (3.0 + k / (2.0 * w * w));
    sum[i] = t1[i] + t2[i];
    direct[i] = -b.i_w * b.i_negk;
    tail = std::max(tail, b.tail_bound);
    const double slack = 2.0 * std::abs(w) * b.error_bound;
    const double excess = std::max(field.k1() - w * w, w * w - field.k2()) - slack;
    if (excess > 0.0) {
      ++out.bound_violations;
      out.worst_bound_excess = std::max(out.worst_bound_excess, excess);
    }
  }
  out.curvature_term = summarize("pinched_curvature_term", t1, opt.seed, opt.burn_in, opt.dt, tail);
  out.slope_term = summarize("pinched_slope_term", t2, opt.seed, opt.burn_in, opt.dt, tail);
  out.sum = summarize("pinched_sum", sum, opt.seed, opt.burn_in, opt.dt, tail);
  out.direct = summarize("pinched_direct", direct, opt.seed, opt.burn_in, opt.dt, tail);
  return out;
}

}  // namespace geoflow
