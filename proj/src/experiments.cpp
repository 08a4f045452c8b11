#include "geoflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "geoflow/errors.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

EstimatorOptions options(const FlowConfig& cfg, std::size_t n, std::uint64_t seed, bool cv) {
  EstimatorOptions o;
  o.n = n;
  o.seed = seed;
  o.burn_in = cfg.burn_in;
  o.dt = cfg.dt_geodesic;
  o.control_variate = cv;
  return o;
}

GeodesicOptions geodesic_options(const FlowConfig& cfg) {
  GeodesicOptions g;
  g.burn_in = cfg.burn_in;
  g.dt = cfg.dt_geodesic;
  g.horizon = cfg.horizon;
  return g;
}

// Deterministic value rows that are not Monte Carlo estimates.
EstimatorReport exact_row(const std::string& name, double value, std::size_t n, const FlowConfig& cfg,
                          double tail = 0.0) {
  return {name, value, 0.0, n, cfg.seed, cfg.burn_in, cfg.dt_geodesic, tail};
}

std::string report_csv(const std::vector<EstimatorReport>& rows) {
  std::string out = report_csv_header() + "\n";
  for (const auto& r : rows) out += report_csv_row(r) + "\n";
  return out;
}

bool nearly_constant(const ConformalField& f) { return f.pinching() - 1.0 < 1e-2; }

CheckResult within_stderr(const std::string& name, const EstimatorReport& a, const EstimatorReport& b,
                          double extra = 0.0) {
  const double diff = std::abs(a.mean - b.mean);
  const double tol = 3.0 * combined_stderr(a, b) + extra;
  return {name, diff <= tol, fmt("|%.6g - %.6g| vs %.3g", a.mean, b.mean, tol)};
}

}  // namespace

bool ExperimentResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* ExperimentResult::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

LatticeScalar bump_perturbation(const ConformalField& field, const FlowConfig& cfg) {
  const BumpProfile profile(field.atlas(), {cfg.psi_center}, {1.0}, cfg.psi_width);
  return project_mean_zero(field, sample_profile(field.lattice(), profile));
}

double max_relative_residual(const std::vector<double>& residual, const std::vector<double>& scale) {
  std::vector<double> sorted = scale;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double floor = std::max(0.1 * sorted[sorted.size() / 2], 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    worst = std::max(worst, std::abs(residual[i]) / std::max(scale[i], floor));
  }
  return worst;
}

ExperimentResult run_entropy(const FlowConfig& cfg) {
  const ConformalField field = initial_field(cfg);
  const EntropyReport e = entropy_estimate(field, options(cfg, cfg.n_samples, cfg.seed, false), true);
  const double kappa = mean_root_curvature(field);
  ExperimentResult r;
  r.checks.push_back(within_stderr("duality", e.stable, e.unstable));
  const double tol = 3.0 * e.stable.stderr_ + e.stable.tail_bound;
  const double s1 = std::sqrt(field.k1()), s2 = std::sqrt(field.k2());
  r.checks.push_back({"entropy_bounds", e.stable.mean >= s1 - tol && e.stable.mean <= s2 + tol,
                      fmt("%.6f in [%.6f, %.6f]", e.stable.mean, s1, s2)});
  r.checks.push_back({"kappa_lower_bound", kappa <= e.stable.mean + tol, fmt("kappa %.8f vs h %.8f", kappa, e.stable.mean)});
  r.csv = report_csv({e.stable, e.unstable, exact_row("kappa", kappa, field.lattice().weighted_nodes().size(), cfg)});
  return r;
}

ExperimentResult run_verify_derivative(const FlowConfig& cfg) {
  const ConformalField field = initial_field(cfg);
  const StableSamples s = stable_samples(field, options(cfg, cfg.n_samples, cfg.seed, true));
  const EstimatorOptions plain = options(cfg, cfg.n_samples, cfg.seed, false);
  const EstimatorOptions ibp = options(cfg, cfg.ibp_samples, derive_seed(cfg.seed, 7), true);
  ExperimentResult r;
  std::vector<EstimatorReport> rows;
  const std::pair<std::string, LatticeScalar> perturbations[] = {{"ricci", ricci_direction(field)},
                                                                 {"bump", bump_perturbation(field, cfg)}};
  for (const auto& [name, psi] : perturbations) {
    EstimatorReport formula = entropy_derivative_from(field, psi, s);
    EstimatorReport fd = entropy_derivative_fd(field, psi, cfg.fd_epsilon, plain);
    formula.quantity = "dh_formula_" + name;
    fd.quantity = "dh_fd_" + name;
    r.checks.push_back(within_stderr("dh_formula_vs_fd_" + name, formula, fd, 1e-3));
    if (name == "ricci") {
      if (nearly_constant(field)) {
        r.checks.push_back({"dh_ricci_positive", std::abs(formula.mean) <= 3.0 * formula.stderr_ + 1e-12,
                            fmt("constant curvature: %.3g +- %.3g", formula.mean, formula.stderr_)});
      } else {
        r.checks.push_back({"dh_ricci_positive", formula.mean > 3.0 * formula.stderr_,
                            fmt("%.6g vs 3 stderr %.3g", formula.mean, 3.0 * formula.stderr_)});
      }
    }
    const double ka = mrc_derivative_formula(field, psi);
    const double kb = mrc_derivative_fd(field, psi, cfg.kappa_fd_epsilon);
    const double ktol = 0.01 * std::max(std::abs(ka), std::abs(kb)) + 1e-9;
    r.checks.push_back({"dkappa_formula_vs_fd_" + name, std::abs(ka - kb) <= ktol, fmt("%.8g vs %.8g", ka, kb)});
    IntegrationByParts parts = verify_integration_by_parts(field, psi, ibp, geodesic_options(cfg));
    parts.lhs.quantity = "ibp_lhs_" + name;
    parts.rhs.quantity = "ibp_rhs_" + name;
    r.checks.push_back(within_stderr("integration_by_parts_" + name, parts.lhs, parts.rhs));
    rows.insert(rows.end(), {formula, fd, exact_row("dkappa_formula_" + name, ka, 0, cfg),
                             exact_row("dkappa_fd_" + name, kb, 0, cfg), parts.lhs, parts.rhs});
  }
  r.csv = report_csv(rows);
  return r;
}

ExperimentResult run_verify_identities(const FlowConfig& cfg) {
  const ConformalField field = initial_field(cfg);
  const LatticeScalar psi = bump_perturbation(field, cfg);
  const GeodesicOptions g = geodesic_options(cfg);
  const std::size_t n = cfg.identity_samples;
  if (n < 1) throw ConfigError("identity_samples must be positive");
  const auto samples = sample_liouville(field, n, derive_seed(cfg.seed, 11));
  const BaseFunction pf = [&](Complex z) { return psi(z); };
  const BaseFunction negk = [&](Complex z) { return -field.curvature_at(z); };
  const BundleFunction ws = [&](const UnitTangent& u) { return riccati_stable(field, u, g.burn_in, g.dt).value; };
  const BundleFunction ipsi = [&](const UnitTangent& u) { return half_orbit_integral(field, pf, u, g).value; };
  const BundleFunction log_gap = [&](const UnitTangent& u) {
    return std::log(riccati_unstable(field, u, g.burn_in, g.dt).value - ws(u));
  };

  // Residual of each identity and the largest magnitude among its terms.
  struct Point {
    double transport = 0.0, transport_scale = 0.0;
    double vertical = 0.0, vertical_scale = 0.0;
    double y2 = 0.0, y2_scale = 0.0;
    double cob = 0.0;
    double tail = 0.0;
  };
  const auto pts = parallel_map<Point>(n, [&](std::size_t i) {
    const UnitTangent& v = samples[i].v;
    Point p;
    const double w = ws(v);
    const HalfOrbitIntegral ip = half_orbit_integral(field, pf, v, g);
    const double x_ip = flow_derivative(field, ipsi, v, g.h_t, g.dt);
    const double es_psi = stable_derivative(field, pf, v, g.h_s);
    p.transport = x_ip + w * ip.value + es_psi;
    p.transport_scale = std::max({std::abs(x_ip), std::abs(w * ip.value), std::abs(es_psi)});

    const StableIntegralsFd fd = half_orbit_integrals_fd(field, v, g, 0.05);
    const double v_w = vertical_derivative(ws, v, g.h_theta);
    p.vertical = fd.stable.value - v_w;
    p.vertical_scale = std::max(std::abs(fd.stable.value), std::abs(v_w));

    const HalfOrbitIntegral ik = half_orbit_integral(field, negk, v, g);
    p.y2 = ik.value + fd.stable_slope - fd.stable_squared.value;
    p.y2_scale = std::max({std::abs(ik.value), std::abs(fd.stable_slope), std::abs(fd.stable_squared.value)});

    const double wu = riccati_unstable(field, v, g.burn_in, g.dt).value;
    p.cob = wu + w + flow_derivative(field, log_gap, v, g.h_t, g.dt);
    p.tail = std::max({ip.tail_bound, ik.tail_bound, fd.stable.tail_bound, fd.stable_squared.tail_bound});
    return p;
  });

  std::vector<double> r1, s1, r2, s2, r3, s3;
  double cob = 0.0, tail = 0.0;
  for (const auto& p : pts) {
    r1.push_back(p.transport);
    s1.push_back(p.transport_scale);
    r2.push_back(p.vertical);
    s2.push_back(p.vertical_scale);
    r3.push_back(p.y2);
    s3.push_back(p.y2_scale);
    cob = std::max(cob, std::abs(p.cob));
    tail = std::max(tail, p.tail);
  }
  const double e1 = max_relative_residual(r1, s1);
  const double e2 = max_relative_residual(r2, s2);
  const double e3 = max_relative_residual(r3, s3);
  const EstimatorReport rm = riccati_mean_check(field, options(cfg, cfg.n_samples, cfg.seed, false));
  ExperimentResult r;
  r.checks.push_back({"half_orbit_transport", e1 <= 1e-2, fmt("max relative residual %.3g (tol 1e-2)", e1)});
  r.checks.push_back({"stable_integral_vertical", e2 <= 2e-2, fmt("max relative residual %.3g (tol 2e-2)", e2)});
  r.checks.push_back({"slope_identity", e3 <= 2e-2, fmt("max relative residual %.3g (tol 2e-2)", e3)});
  r.checks.push_back({"coboundary", cob <= 1e-3, fmt("max residual %.3g (tol 1e-3)", cob)});
  const double rtol = 3.0 * rm.stderr_ + 1e-3;
  r.checks.push_back({"riccati_mean", std::abs(rm.mean) <= rtol, fmt("|%.3g| vs %.3g", rm.mean, rtol)});
  r.csv = report_csv({exact_row("half_orbit_transport_residual", e1, n, cfg, tail),
                      exact_row("stable_integral_vertical_residual", e2, n, cfg, tail),
                      exact_row("slope_identity_residual", e3, n, cfg, tail),
                      exact_row("coboundary_residual", cob, n, cfg), rm});
  return r;
}

ExperimentResult run_verify_pinched(const FlowConfig& cfg) {
  const ConformalField field = initial_field(cfg);
  const PinchedReport p =
      pinched_positivity_check(field, options(cfg, cfg.pinched_samples, cfg.seed, false), geodesic_options(cfg));
  ExperimentResult r;
  r.checks.push_back({"pinching_bound", p.bound_violations == 0,
                      fmt("%g samples outside [K1, K2] beyond error bound (worst %.3g)",
                          static_cast<double>(p.bound_violations), p.worst_bound_excess)});
  const bool applies = p.pinching <= 6.0;
  auto nonneg = [&](const std::string& name, const EstimatorReport& e) {
    if (!applies) return CheckResult{name, true, fmt("pinching %.3f > 6, not applicable", p.pinching)};
    return CheckResult{name, e.mean >= -3.0 * e.stderr_, fmt("%.6g +- %.3g", e.mean, e.stderr_)};
  };
  r.checks.push_back(nonneg("curvature_term_nonnegative", p.curvature_term));
  r.checks.push_back(nonneg("slope_term_nonnegative", p.slope_term));
  r.checks.push_back(within_stderr("decomposition_sum", p.sum, p.direct));
  r.csv = report_csv({p.curvature_term, p.slope_term, p.sum, p.direct, exact_row("pinching", p.pinching, 0, cfg)});
  return r;
}

ExperimentResult run_jensen(const FlowConfig& cfg) {
  const std::size_t n = cfg.jensen_vectors;
  double worst = 0.0, constant_worst = 0.0;
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SampleStream rng(cfg.seed, i);
    const std::size_t len = 1 + rng.next() % 16;
    std::vector<double> f(len), w(len);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      // Exact zeros and wide magnitudes both matter here.
      const double u = rng.uniform();
      f[k] = u < 0.1 ? 0.0 : std::pow(10.0, 4.0 * rng.uniform() - 2.0) * rng.uniform();
      w[k] = rng.uniform() + 1e-3;
      total += w[k];
    }
    for (auto& x : w) x /= total;
    const double j = jensen_check(f, w);
    worst = std::min(worst, j);
    if (j < -1e-12) ++negatives;
    std::vector<double> c(len, f[0] + 1.0);
    constant_worst = std::max(constant_worst, std::abs(jensen_check(c, w)));
  }
  const double example = jensen_check({0.0, 2.0}, {0.5, 0.5});
  bool rejects = false;
  try {
    jensen_check({1.0, -1.0}, {0.5, 0.5});
  } catch (const NegativeInput&) {
    rejects = true;
  }
  ExperimentResult r;
  r.checks.push_back({"jensen_nonnegative", negatives == 0, fmt("min %.3g over %g vectors", worst, static_cast<double>(n))});
  r.checks.push_back({"jensen_constant_zero", constant_worst == 0.0, fmt("max |value| on constants %.3g", constant_worst)});
  r.checks.push_back({"jensen_example", example == 2.0, fmt("(0,2) with (1/2,1/2) gives %.17g", example)});
  r.checks.push_back({"jensen_negative_input", rejects, rejects ? "rejected" : "accepted"});
  r.csv = report_csv({exact_row("jensen_min", worst, n, cfg), exact_row("jensen_constant_max_abs", constant_worst, n, cfg),
                      exact_row("jensen_example", example, 2, cfg)});
  return r;
}

std::vector<CheckResult> flow_checks(const std::vector<FlowCheckpoint>& rows) {
  std::vector<CheckResult> out;
  if (rows.empty()) return out;
  const auto& first = rows.front();
  const auto& last = rows.back();
  auto dev = [](const FlowCheckpoint& c) { return std::max(std::abs(c.k_min + 1.0), std::abs(c.k_max + 1.0)); };
  double area = 0.0, kbar = 0.0;
  for (const auto& c : rows) {
    area = std::max(area, c.area_defect);
    kbar = std::max(kbar, std::abs(c.kbar + 1.0));
  }
  out.push_back({"area_conserved", area <= 1e-6, fmt("max area defect %.3g", area)});
  out.push_back({"mean_curvature", kbar <= 1e-3, fmt("max |kbar + 1| %.3g", kbar)});

  if (first.pinching_ratio - 1.0 < 1e-2) {
    // Constant curvature start: the flow should not move.
    double dk = 0.0, dh = 0.0;
    for (const auto& c : rows) {
      dk = std::max(dk, std::abs(c.kappa - first.kappa));
      dh = std::max(dh, std::abs(c.entropy.mean - first.entropy.mean));
    }
    out.push_back({"stationary", dk <= 1e-6 && dh <= 1e-4, fmt("kappa spread %.3g, entropy spread %.3g", dk, dh)});
    return out;
  }

  bool kappa_up = true, dev_down = true, pinch_down = true;
  std::string where_k, where_d, where_p;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].kappa > rows[i - 1].kappa) && kappa_up) {
      kappa_up = false;
      where_k = fmt(" (fails at eps %.3g)", rows[i].epsilon);
    }
    if (!(dev(rows[i]) < dev(rows[i - 1])) && dev_down) {
      dev_down = false;
      where_d = fmt(" (fails at eps %.3g)", rows[i].epsilon);
    }
    if (rows[i].pinching_ratio > rows[i - 1].pinching_ratio && pinch_down) {
      pinch_down = false;
      where_p = fmt(" (fails at eps %.3g)", rows[i].epsilon);
    }
  }
  out.push_back({"kappa_increasing", kappa_up, fmt("kappa %.8f -> %.8f", first.kappa, last.kappa) + where_k});
  out.push_back({"curvature_deviation_decreasing", dev_down,
                 fmt("sup|K+1| %.4g -> %.4g", dev(first), dev(last)) + where_d});
  out.push_back({"pinching_nonincreasing", pinch_down,
                 fmt("pinching %.5g -> %.5g", first.pinching_ratio, last.pinching_ratio) + where_p});
  const double gain = last.entropy.mean - first.entropy.mean;
  const double tol = 3.0 * combined_stderr(first.entropy, last.entropy);
  out.push_back({"entropy_increase", gain > tol, fmt("h gain %.4g vs 3 stderr %.3g", gain, tol)});
  std::size_t tested = 0, bad = 0;
  double worst_z = 1e300;
  for (const auto& c : rows) {
    if (std::abs(c.pinching_ratio - 1.0) < 1e-2) continue;
    ++tested;
    const double z = c.dh_formula.mean / c.dh_formula.stderr_;
    worst_z = std::min(worst_z, z);
    if (!(c.dh_formula.mean > 3.0 * c.dh_formula.stderr_)) ++bad;
  }
  out.push_back({"dh_formula_positive", bad == 0,
                 fmt("%g of %g pinched checkpoints positive beyond 3 stderr, min z %.3g",
                     static_cast<double>(tested - bad), static_cast<double>(tested), tested ? worst_z : 0.0)});
  return out;
}

ExperimentResult run_flow_experiment(const FlowConfig& cfg, std::ostream* live_csv,
                                     const std::function<void(const FlowCheckpoint&)>& on_checkpoint) {
  std::ostringstream text;
  if (live_csv) *live_csv << flow_csv_header() << '\n' << std::flush;
  const auto rows = run_flow(cfg, &text, [&](const FlowCheckpoint& c) {
    if (live_csv) *live_csv << flow_csv_row(c) << '\n' << std::flush;
    if (on_checkpoint) on_checkpoint(c);
  });
  ExperimentResult r;
  r.checks = flow_checks(rows);
  r.csv = text.str();
  return r;
}

}  // namespace geoflow
