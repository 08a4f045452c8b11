#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "geoflow/conformal_field.hpp"
#include "geoflow/errors.hpp"

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

Complex random_in_octagon(const SurfaceAtlas& atlas, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (;;) {
    const Complex z(u(rng), u(rng));
    if (atlas.contains(z)) return z;
  }
}

}  // namespace

TEST_CASE("lattice area matches the genus-2 area") {
  CHECK(lattice()->reference_area() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-4));
  CHECK(lattice()->interior_nodes().size() > 20000);
}

TEST_CASE("pairwise sum is exact on small integers and order independent in layout") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  CHECK(pairwise_sum(x) == 499500.0);
}

TEST_CASE("hyperbolic metric closed forms") {
  const auto flat = ConformalField::constant(lattice(), 0.0);
  for (int idx : lattice()->interior_nodes()) REQUIRE(flat.curvature_table()[idx] == -1.0);
  CHECK(flat.kbar() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(flat.area_defect() < 1e-12);
  CHECK(flat.pinching() == doctest::Approx(1.0).epsilon(1e-12));

  const double c = 0.3;
  const auto scaled = ConformalField::constant(lattice(), c);
  CHECK(scaled.k_min() == doctest::Approx(-std::exp(-2.0 * c)).epsilon(1e-12));
  CHECK(scaled.k_max() == doctest::Approx(-std::exp(-2.0 * c)).epsilon(1e-12));
}

TEST_CASE("bump field: Gauss-Bonnet and curvature range") {
  const auto& f = bump();
  CHECK(f.kbar() == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(f.area_defect() < 1e-12);
  CHECK(f.k_min() < -1.0);
  CHECK(f.k_max() > -1.0);
  CHECK(f.k_max() < 0.0);
  CHECK(f.pinching() < 6.0);
}

TEST_CASE("positive curvature and oversized bumps are rejected") {
  CHECK_THROWS_AS(field_from_bumps(lattice(), {DiskPoint(0.0, 0.0)}, {0.1}, 0.5), CurvaturePositive);
  CHECK_THROWS_AS(BumpProfile(lattice()->atlas(), {DiskPoint(0.0, 0.0)}, {0.1}, 4.0), ConstructionError);
}

TEST_CASE("Gauss-Bonnet defect shrinks under refinement") {
  const auto fine = make_lattice(2.0 / 512.0);
  const double a = std::abs(bump().kbar() + 1.0);
  const double b = std::abs(field_from_bumps(fine, {DiskPoint(0.0, 0.0)}, {0.1}, 1.5).kbar() + 1.0);
  CHECK(a / b >= 3.0);
}

TEST_CASE("evaluation is invariant under the surface group") {
  const auto& f = bump();
  const auto& atlas = lattice()->atlas();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Complex z = random_in_octagon(atlas, rng);
    const MobiusMap& g = atlas.generators[i % 8];
    const FieldSample a = f.evaluate(z);
    const FieldSample b = f.evaluate(g.apply(z));
    CHECK(std::abs(a.rho - b.rho) < 1e-8);
    CHECK(std::abs(a.curvature - b.curvature) < 1e-6);
    // The gradient is a covector: grad at g z = conj(1/g'(z)) grad at z.
    const Complex expect = Complex(a.rho_x, a.rho_y) * std::conj(1.0 / g.derivative(z));
    CHECK(std::abs(expect - Complex(b.rho_x, b.rho_y)) < 1e-6 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("interpolated values match the exact bump profile") {
  const BumpProfile profile(lattice()->atlas(), {DiskPoint(0.0, 0.0)}, {0.1}, 1.5);
  const auto& f = bump();
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const Complex z = random_in_octagon(lattice()->atlas(), rng);
    worst = std::max(worst, std::abs(f.evaluate(z).rho - (profile.value(z) + f.normalization_shift())));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("ghost fill reproduces an invariant function") {
  const BumpProfile profile(lattice()->atlas(), {DiskPoint(0.1, -0.2)}, {1.0}, 1.2);
  const auto exact = sample_profile(*lattice(), profile);
  std::vector<double> v(exact.size(), 0.0);
  for (int idx : lattice()->interior_nodes()) v[idx] = exact[idx];
  lattice()->fill_ghosts(v, kGhostBand);
  double worst = 0.0;
  for (int idx : lattice()->ghosts_up_to(kGhostBand)) worst = std::max(worst, std::abs(v[idx] - exact[idx]));
  CHECK(worst < 5e-5);
}

TEST_CASE("snapshot round trip is bit exact") {
  std::stringstream buf;
  write_snapshot(bump(), buf);
  const ConformalField back = read_snapshot(buf);
  REQUIRE(back.values().size() == bump().values().size());
  for (int idx : lattice()->interior_nodes()) REQUIRE(back.values()[idx] == bump().values()[idx]);
  std::stringstream again;
  write_snapshot(back, again);
  std::stringstream first;
  write_snapshot(bump(), first);
  CHECK(first.str() == again.str());
}

TEST_CASE("mean-zero projection and perturbation keep the area") {
  const auto& f = bump();
  const LatticeScalar psi = ricci_direction(f);
  CHECK(std::abs(area_integral(f, psi.values())) < 1e-8);
  const ConformalField g = perturbed(f, psi, 1e-2);
  CHECK(g.area_defect() < 1e-12);
  CHECK(g.kbar() == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("evaluation outside the supported neighbourhood throws") {
  const auto& f = bump();
  CHECK_THROWS_AS(f.evaluate(Complex(0.999, 0.0)), OutOfRange);
}
