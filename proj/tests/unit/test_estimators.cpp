#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geoflow/errors.hpp"
#include "geoflow/estimators.hpp"

using namespace geoflow;

namespace {

const std::shared_ptr<const Lattice>& lattice() {
  static const auto lat = make_lattice();
  return lat;
}

const ConformalField& bump() {
  static const ConformalField f = field_from_bumps(lattice(), {DiskPoint(0.0, 0.0)}, {0.1}, 1.5);
  return f;
}

LatticeScalar test_psi(const ConformalField& f) {
  const BumpProfile p(lattice()->atlas(), {DiskPoint(0.3, 0.2)}, {1.0}, 1.0);
  return project_mean_zero(f, sample_profile(*lattice(), p));
}

}  // namespace

TEST_CASE("sample streams are keyed by seed and index") {
  SampleStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  const auto x = a.next();
  CHECK(x == b.next());
  CHECK(x != c.next());
  CHECK(x != d.next());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("Liouville samples do not depend on the sample count") {
  const auto a = sample_liouville(bump(), 40, 11);
  const auto b = sample_liouville(bump(), 80, 11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].v.z == b[i].v.z);
    REQUIRE(a[i].v.theta == b[i].v.theta);
  }
  const auto c = sample_liouville(bump(), 40, 12);
  CHECK(c[0].v.z != a[0].v.z);
}

TEST_CASE("fibre angles are uniform (KS)") {
  const std::size_t n = 4000;
  const auto s = sample_liouville(bump(), n, 3);
  std::vector<double> u;
  for (const auto& x : s) u.push_back(x.v.theta / (2.0 * std::numbers::pi));
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(u[i] - double(i) / n), std::abs(u[i] - double(i + 1) / n)});
  }
  CHECK(d < 1.63 / std::sqrt(double(n)));
}

TEST_CASE("base points follow the metric area") {
  const std::size_t n = 4000;
  const auto s = sample_liouville(bump(), n, 5);
  // Fraction inside hyperbolic radius 1 of the origin, against lattice quadrature.
  const double r = std::tanh(0.5);
  std::vector<double> ind(lattice()->size(), 0.0);
  for (int idx : lattice()->weighted_nodes()) ind[idx] = std::abs(lattice()->node(idx)) < r ? 1.0 : 0.0;
  const double p = area_mean(bump(), ind);
  double hits = 0.0;
  for (const auto& x : s) hits += std::abs(x.v.z) < r ? 1.0 : 0.0;
  const double q = hits / n;
  CHECK(std::abs(q - p) < 4.0 * std::sqrt(p * (1.0 - p) / n) + 5e-3);
}

TEST_CASE("constant fields have closed-form entropy and kappa") {
  for (double c : {0.0, 0.3}) {
    const auto f = ConformalField::constant(lattice(), c);
    EstimatorOptions opt;
    opt.n = 20;
    const EntropyReport e = entropy_estimate(f, opt);
    CHECK(e.stable.mean == doctest::Approx(std::exp(-c)).epsilon(1e-9));
    CHECK(e.unstable.mean == doctest::Approx(std::exp(-c)).epsilon(1e-9));
    CHECK(e.stable.stderr_ < 1e-9);
    CHECK(mean_root_curvature(f) == doctest::Approx(std::exp(-c)).epsilon(1e-12));
  }
}

TEST_CASE("mean root curvature derivative vanishes on the hyperbolic metric") {
  const auto f = ConformalField::constant(lattice(), 0.0);
  CHECK(std::abs(mrc_derivative_formula(f, test_psi(f))) < 1e-4);
}

TEST_CASE("derivative formulas are linear in psi") {
  const auto& f = bump();
  const LatticeScalar psi = test_psi(f);
  std::vector<double> twice = psi.values();
  for (double& x : twice) x *= 2.0;
  const LatticeScalar psi2(lattice(), twice);
  CHECK(mrc_derivative_formula(f, psi2) == doctest::Approx(2.0 * mrc_derivative_formula(f, psi)).epsilon(1e-10));
  EstimatorOptions opt;
  opt.n = 30;
  const StableSamples s = stable_samples(f, opt);
  CHECK(entropy_derivative_from(f, psi2, s).mean ==
        doctest::Approx(2.0 * entropy_derivative_from(f, psi, s).mean).epsilon(1e-10));
}

TEST_CASE("mean root curvature derivative agrees with a difference quotient") {
  const auto& f = bump();
  const LatticeScalar psi = ricci_direction(f);
  const double a = mrc_derivative_formula(f, psi);
  const double b = mrc_derivative_fd(f, psi, 1e-3);
  CHECK(std::abs(a - b) <= 1e-2 * std::abs(b));
}

TEST_CASE("stable samples are reproducible and the Riccati mean vanishes") {
  EstimatorOptions opt;
  opt.n = 200;
  opt.seed = 9;
  const StableSamples a = stable_samples(bump(), opt);
  const StableSamples b = stable_samples(bump(), opt);
  CHECK(a.w == b.w);
  const EstimatorReport r = riccati_mean_from(a);
  CHECK(std::abs(r.mean) <= 3.0 * r.stderr_ + 1e-3);
  CHECK(report_csv_row(r) == report_csv_row(riccati_mean_from(b)));
}

TEST_CASE("control variate keeps the entropy mean") {
  EstimatorOptions opt;
  opt.n = 200;
  const StableSamples s = stable_samples(bump(), opt);
  const EstimatorReport plain = entropy_from(bump(), s);
  StableSamples cv = s;
  cv.options.control_variate = true;
  const EstimatorReport reduced = entropy_from(bump(), cv);
  CHECK(reduced.stderr_ < plain.stderr_);
  CHECK(std::abs(reduced.mean - plain.mean) <= 3.0 * plain.stderr_);
}

TEST_CASE("Jensen-type sum") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t m = 1 + t % 7;
    std::vector<double> f(m), w(m);
    double sw = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      f[i] = 3.0 * u(rng);
      w[i] = u(rng) + 1e-3;
      sw += w[i];
    }
    for (double& x : w) x /= sw;
    REQUIRE(jensen_check(f, w) >= -1e-12);
    const std::vector<double> same(m, f[0]);
    REQUIRE(jensen_check(same, w) == 0.0);
  }
  CHECK(jensen_check({1.0, 2.0}, {0.5, 0.5}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(jensen_check({-1.0, 2.0}, {0.5, 0.5}), NegativeInput);
  CHECK_THROWS_AS(jensen_check({1.0, 2.0}, {0.5, 0.6}), DomainError);
}
