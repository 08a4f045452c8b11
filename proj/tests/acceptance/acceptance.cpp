// Acceptance run: one PASS/FAIL line per criterion, sub-check details indented.
// Exit status is the number of failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/experiments.hpp"

using namespace geoflow;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "bad  ") + what);
  }
  void take(const ExperimentResult& r, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      const CheckResult* c = r.find(n);
      if (!c) {
        check(false, n + ": missing");
        continue;
      }
      check(c->pass, n + ": " + c->detail);
    }
  }
};

std::string fmt(const char* f, double a = 0.0, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const Error& e) {
    o.check(false, std::string("numerical error: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_seconds > 0.0) o.check(secs <= limit_seconds, fmt("runtime %.1f s (limit %.0f s)", secs, limit_seconds));
  if (!o.pass) ++failures;
  std::printf("%s %d %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, secs);
  for (const auto& l : o.lines) std::printf("       %s\n", l.c_str());
  std::fflush(stdout);
}

FlowConfig flat_config() {
  FlowConfig c;
  c.bump_centers.clear();
  c.bump_amplitudes.clear();
  return c;
}

EstimatorOptions mc_options(std::size_t n, bool cv) {
  EstimatorOptions o;
  o.n = n;
  o.seed = 1;
  o.control_variate = cv;
  return o;
}

void compare_within(Outcome& o, const std::string& name, const EstimatorReport& a, const EstimatorReport& b,
                    double extra) {
  const double tol = 3.0 * combined_stderr(a, b) + extra;
  o.check(std::abs(a.mean - b.mean) <= tol,
          name + fmt(": |%.6g - %.6g| = %.3g vs %.3g", a.mean, b.mean, std::abs(a.mean - b.mean), tol));
}

}  // namespace

int main() {
  const FlowConfig base;
  const ConformalField bump = initial_field(base);
  std::printf("default field: pinching %.4f, K in [%.4f, %.4f], kbar %.8f\n", bump.pinching(), bump.k_min(),
              bump.k_max(), bump.kbar());

  criterion(1, "constant-curvature closed forms", 60.0, [&](Outcome& o) {
    const ConformalField flat = initial_field(flat_config());
    const EntropyReport e = entropy_estimate(flat, mc_options(1000, false), false);
    o.check(std::abs(e.stable.mean - 1.0) <= 1e-4, fmt("entropy %.12f", e.stable.mean));
    const double kappa = mean_root_curvature(flat);
    o.check(std::abs(kappa - 1.0) <= 1e-6, fmt("kappa %.12f", kappa));
    double worst = 0.0;
    for (const auto& s : sample_liouville(flat, 100, 77)) worst = std::max(worst, std::abs(riccati_stable(flat, s.v).value + 1.0));
    o.check(worst <= 1e-6, fmt("max |w^s + 1| over 100 vectors %.3g", worst));
  });

  criterion(2, "Riccati-mean identity, n = 1e4", 300.0, [&](Outcome& o) {
    const EstimatorReport r = riccati_mean_check(bump, mc_options(10000, false));
    const double tol = 3.0 * r.stderr_ + 1e-3;
    o.check(std::abs(r.mean) <= tol, fmt("mean %.4g +- %.3g, tolerance %.3g", r.mean, r.stderr_, tol));
  });

  criterion(3, "dual estimators on common samples", 0.0, [&](Outcome& o) {
    const EntropyReport e = entropy_estimate(bump, mc_options(10000, false), true);
    compare_within(o, "mean(-w^s) vs mean(w^u)", e.stable, e.unstable, 0.0);
  });

  criterion(4, "entropy derivative formula vs common-random-number FD, n = 1e4", 0.0, [&](Outcome& o) {
    const StableSamples s = stable_samples(bump, mc_options(10000, true));
    const std::pair<const char*, LatticeScalar> cases[] = {{"psi = -(K - kbar)", ricci_direction(bump)},
                                                           {"bump psi", bump_perturbation(bump, base)}};
    for (const auto& [name, psi] : cases) {
      const EstimatorReport f = entropy_derivative_from(bump, psi, s);
      const EstimatorReport d = entropy_derivative_fd(bump, psi, 1e-2, mc_options(10000, false));
      compare_within(o, name, f, d, 1e-3);
    }
  });

  criterion(5, "mean root curvature derivative vs FD", 60.0, [&](Outcome& o) {
    const std::pair<const char*, LatticeScalar> cases[] = {{"psi = -(K - kbar)", ricci_direction(bump)},
                                                           {"bump psi", bump_perturbation(bump, base)}};
    for (const auto& [name, psi] : cases) {
      const double a = mrc_derivative_formula(bump, psi);
      const double b = mrc_derivative_fd(bump, psi, 1e-3);
      const double rel = std::abs(a - b) / std::abs(b);
      o.check(rel <= 1e-2, std::string(name) + fmt(": %.8g vs %.8g, relative %.3g", a, b, rel));
    }
  });

  // Criteria 6 and 7 share one flow run.
  ExperimentResult flow;
  double flow_seconds = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      flow = run_flow_experiment(base, nullptr, [](const FlowCheckpoint& c) {
        std::printf("  flow eps %.2f  h %.6f +- %.1e  kappa %.8f  pinch %.4f  dh %.3e +- %.1e\n", c.epsilon,
                    c.entropy.mean, c.entropy.stderr_, c.kappa, c.pinching_ratio, c.dh_formula.mean,
                    c.dh_formula.stderr_);
        std::fflush(stdout);
      });
    } catch (const Error& e) {
      flow.checks.push_back({"kappa_increasing", false, e.what()});
    }
    flow_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  criterion(6, "flow monotonicity of kappa and sup|K+1|", 0.0, [&](Outcome& o) {
    o.take(flow, {"kappa_increasing", "curvature_deviation_decreasing", "area_conserved", "mean_curvature"});
    o.check(flow_seconds <= 600.0, fmt("flow runtime %.1f s (limit 600 s)", flow_seconds));
  });
  criterion(7, "entropy increase along the flow", 0.0,
            [&](Outcome& o) { o.take(flow, {"entropy_increase", "dh_formula_positive"}); });

  criterion(8, "pointwise identities at 50 vectors", 0.0, [&](Outcome& o) {
    const ExperimentResult r = run_verify_identities(base);
    o.take(r, {"half_orbit_transport", "stable_integral_vertical", "slope_identity", "coboundary"});
  });

  criterion(9, "pinching bound and pinched decomposition", 0.0, [&](Outcome& o) {
    const ExperimentResult r = run_verify_pinched(base);
    o.take(r, {"pinching_bound", "curvature_term_nonnegative", "slope_term_nonnegative", "decomposition_sum"});
  });

  criterion(10, "Jensen sweep", 60.0, [&](Outcome& o) {
    const ExperimentResult r = run_jensen(base);
    o.take(r, {"jensen_nonnegative", "jensen_constant_zero", "jensen_example"});
  });

  criterion(11, "determinism of every subcommand", 0.0, [&](Outcome& o) {
    FlowConfig c;
    c.n_samples = 40;
    c.identity_samples = 3;
    c.pinched_samples = 40;
    c.ibp_samples = 40;
    c.jensen_vectors = 2000;
    c.checkpoint_interval = 4e-4;
    c.total_flow_time = 8e-4;
    c.seed = 5;
    const std::pair<const char*, std::function<ExperimentResult()>> runs[] = {
        {"entropy", [&] { return run_entropy(c); }},
        {"verify derivative", [&] { return run_verify_derivative(c); }},
        {"verify identities", [&] { return run_verify_identities(c); }},
        {"verify pinched", [&] { return run_verify_pinched(c); }},
        {"jensen", [&] { return run_jensen(c); }},
        {"flow", [&] { return run_flow_experiment(c); }},
    };
    for (const auto& [name, run] : runs) {
      const std::string a = run().csv, b = run().csv;
      o.check(a == b && !a.empty(), std::string(name) + fmt(": %g bytes", static_cast<double>(a.size())));
    }
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
