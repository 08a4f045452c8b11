#include "geoflow/conformal_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

double bump(double d, double a, double w) {
  if (d >= w) return 0.0;
  const double s = 1.0 - (d / w) * (d / w);
  return a * s * s * s;
}

double bump_slope(double d, double a, double w) {
  if (d >= w) return 0.0;
  const double s = 1.0 - (d / w) * (d / w);
  return -6.0 * a * d / (w * w) * s * s;
}

// Euclidean gradient of z -> d_hyp(z, c), as a complex number.
Complex distance_gradient(Complex z, Complex c) {
  const double q = std::norm(z - c);
  const double s = 1.0 - std::norm(z);
  const double sc = 1.0 - std::norm(c);
  const double u = 1.0 + 2.0 * q / (s * sc);
  if (u <= 1.0 + 1e-24) return {0.0, 0.0};
  const Complex du = 2.0 / sc * (2.0 * (z - c) * s + 2.0 * q * z) / (s * s);
  return du / std::sqrt(u * u - 1.0);
}

Reduction reduce_supported(const Lattice& lattice, Complex z) {
  const SurfaceAtlas& atlas = lattice.atlas();
  if (!(std::abs(z) <= atlas.vertex_radius + lattice.margin() + 1e-9)) {
    throw OutOfRange("point outside the supported neighbourhood of the octagon");
  }
  try {
    return reduce_complex(atlas, z);
  } catch (const NotReducible& e) {
    throw OutOfRange(e.what());
  }
}

// 5-point hyperbolic Laplacian; needs the four neighbours of idx.
double stencil_laplacian(const Lattice& lat, const std::vector<double>& f, int idx) {
  const int n = lat.per_side();
  const double h = lat.spacing();
  const double s = 1.0 - std::norm(lat.node(idx));
  return 0.25 * s * s * (f[idx + 1] + f[idx - 1] + f[idx + n] + f[idx - n] - 4.0 * f[idx]) / (h * h);
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ConformalField::ConformalField(std::shared_ptr<const Lattice> lattice, std::vector<double> rho, bool fill_ghosts)
    : lattice_(std::move(lattice)), rho_(std::move(rho)) {
  if (!lattice_) throw DomainError("null lattice");
  if (rho_.size() != lattice_->size()) throw DomainError("rho has the wrong number of lattice values");
  if (fill_ghosts) lattice_->fill_ghosts(rho_, kGhostBand);
  build_tables();
}

ConformalField::ConformalField(std::shared_ptr<const Lattice> lattice, std::vector<double> rho,
                               std::vector<double> rho_x, std::vector<double> rho_y)
    : lattice_(std::move(lattice)), rho_(std::move(rho)) {
  if (rho_.size() != lattice_->size() || rho_x.size() != rho_.size() || rho_y.size() != rho_.size()) {
    throw DomainError("lattice tables have the wrong size");
  }
  build_tables(std::move(rho_x), std::move(rho_y));
}

ConformalField ConformalField::constant(std::shared_ptr<const Lattice> lattice, double c) {
  std::vector<double> rho(lattice->size(), 0.0);
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (lattice->band(static_cast<int>(k)) >= 0) rho[k] = c;
  }
  return ConformalField(std::move(lattice), std::move(rho), false);
}

void ConformalField::build_tables(std::vector<double> gx, std::vector<double> gy) {
  const Lattice& lat = *lattice_;
  const int n = lat.per_side();
  const double h = lat.spacing();
  lap_.assign(lat.size(), 0.0);
  k_.assign(lat.size(), 0.0);
  const bool difference = gx.empty();
  if (difference) {
    gx.assign(lat.size(), 0.0);
    gy.assign(lat.size(), 0.0);
  }

  k_min_ = 1e300;
  k_max_ = -1e300;
  for (int idx : lat.interior_nodes()) {
    lap_[idx] = stencil_laplacian(lat, rho_, idx);
    k_[idx] = std::exp(-2.0 * rho_[idx]) * (-lap_[idx] - 1.0);
    k_min_ = std::min(k_min_, k_[idx]);
    k_max_ = std::max(k_max_, k_[idx]);
  }
  lat.fill_ghosts(lap_, 3);
  lat.fill_ghosts(k_, 3);
  // Cut cells weight ghost nodes of bands 1-2; the fitted values there leave a
  // Gauss-Bonnet floor, so use the stencil directly.
  for (int idx : lat.ghosts_up_to(2)) {
    lap_[idx] = stencil_laplacian(lat, rho_, idx);
    k_[idx] = std::exp(-2.0 * rho_[idx]) * (-lap_[idx] - 1.0);
  }

  for (std::size_t k = 0; k < lat.size(); ++k) {
    const int idx = static_cast<int>(k);
    const int b = lat.band(idx);
    if (b < 0 || b > 3 || !difference) continue;
    gx[k] = (-rho_[idx + 2] + 8.0 * rho_[idx + 1] - 8.0 * rho_[idx - 1] + rho_[idx - 2]) / (12.0 * h);
    gy[k] = (-rho_[idx + 2 * n] + 8.0 * rho_[idx + n] - 8.0 * rho_[idx - n] + rho_[idx - 2 * n]) / (12.0 * h);
  }
  gx_ = std::move(gx);
  gy_ = std::move(gy);
  table_ = SplineTable<5>(lat, {&rho_, &gx_, &gy_, &lap_, &k_});
  // The interpolant can overshoot the nodal range slightly; include cell centres.
  for (int idx : lat.interior_nodes()) {
    const Complex c = lat.node(idx) + Complex(0.5 * h, 0.5 * h);
    if (!lat.atlas().contains(c)) continue;
    const double kc = table_.value(c)[4];
    k_min_ = std::min(k_min_, kc);
    k_max_ = std::max(k_max_, kc);
  }

  std::vector<double> e2(lat.size(), 0.0), ke2(lat.size(), 0.0);
  for (int idx : lat.weighted_nodes()) {
    e2[idx] = std::exp(2.0 * rho_[idx]);
    ke2[idx] = k_[idx] * e2[idx];
  }
  area_ = lat.weighted_sum(e2);
  kbar_ = lat.weighted_sum(ke2) / area_;
}

double ConformalField::area_defect() const { return std::abs(area_ / lattice_->reference_area() - 1.0); }

FieldSample ConformalField::evaluate_reduced(Complex w) const {
  const auto t = table_.value(w);
  return {t[0], t[1], t[2], t[3], t[4]};
}

FieldSample ConformalField::evaluate(Complex z) const {
  const Reduction red = reduce_supported(*lattice_, z);
  FieldSample s = evaluate_reduced(red.point.value());
  if (red.steps > 0) {
    const Complex pull = 1.0 / red.map.derivative(red.point.value());
    const Complex g = Complex(s.rho_x, s.rho_y) * std::conj(pull);
    s.rho_x = g.real();
    s.rho_y = g.imag();
  }
  return s;
}

double ConformalField::curvature_at(Complex z) const {
  const Reduction red = reduce_supported(*lattice_, z);
  return table_.value(red.point.value())[4];
}

CurvatureField gauss_curvature(const ConformalField& field) {
  return {field.curvature_table(), field.kbar(), field.k_min(), field.k_max()};
}

double area_integral(const ConformalField& field, const std::vector<double>& f) {
  const Lattice& lat = field.lattice();
  std::vector<double> g(lat.size(), 0.0);
  for (int idx : lat.weighted_nodes()) g[idx] = f[idx] * std::exp(2.0 * field.values()[idx]);
  return lat.weighted_sum(g);
}

std::vector<double> normalize_area(const Lattice& lattice, std::vector<double> rho, double* applied_shift) {
  std::vector<double> e2(lattice.size(), 0.0);
  for (int idx : lattice.weighted_nodes()) e2[idx] = std::exp(2.0 * rho[idx]);
  const double c = -0.5 * std::log(lattice.weighted_sum(e2) / lattice.reference_area());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (lattice.band(static_cast<int>(k)) >= 0) rho[k] += c;
  }
  if (applied_shift) *applied_shift = c;
  return rho;
}

LatticeScalar::LatticeScalar(std::shared_ptr<const Lattice> lattice, std::vector<double> values)
    : lattice_(std::move(lattice)), values_(std::move(values)) {
  lattice_->fill_ghosts(values_, 3);
  table_ = SplineTable<1>(*lattice_, {&values_});
}

double LatticeScalar::operator()(Complex z) const {
  const Reduction red = reduce_supported(*lattice_, z);
  return table_.value(red.point.value())[0];
}

void LatticeScalar::value_gradient(Complex z, double& f, double& fx, double& fy) const {
  const Reduction red = reduce_supported(*lattice_, z);
  table_.value_gradient(red.point.value(), 0, f, fx, fy);
  if (red.steps > 0) {
    const Complex pull = 1.0 / red.map.derivative(red.point.value());
    const Complex g = Complex(fx, fy) * std::conj(pull);
    fx = g.real();
    fy = g.imag();
  }
}

LatticeScalar project_mean_zero(const ConformalField& field, std::vector<double> psi) {
  const Lattice& lat = field.lattice();
  lat.fill_ghosts(psi, 3);
  std::vector<double> one(lat.size(), 1.0);
  const double mean = area_integral(field, psi) / area_integral(field, one);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (lat.band(static_cast<int>(k)) >= 0) psi[k] -= mean;
  }
  return LatticeScalar(field.lattice_ptr(), std::move(psi));
}

LatticeScalar ricci_direction(const ConformalField& field) {
  std::vector<double> psi(field.lattice().size(), 0.0);
  for (int idx : field.lattice().interior_nodes()) psi[idx] = -(field.curvature_table()[idx] - field.kbar());
  return project_mean_zero(field, std::move(psi));
}

ConformalField perturbed(const ConformalField& field, const LatticeScalar& psi, double eps) {
  const Lattice& lat = field.lattice();
  std::vector<double> rho = field.values();
  std::vector<double> gx = field.gradient_x_table(), gy = field.gradient_y_table();
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const int idx = static_cast<int>(k);
    const int b = lat.band(idx);
    if (b < 0 || b > 3) continue;
    double f, fx, fy;
    psi.value_gradient(lat.node(idx), f, fx, fy);
    rho[k] += eps * psi.values()[k];
    gx[k] += eps * fx;
    gy[k] += eps * fy;
  }
  double shift = 0.0;
  rho = normalize_area(lat, std::move(rho), &shift);
  ConformalField out(field.lattice_ptr(), std::move(rho), std::move(gx), std::move(gy));
  out.set_normalization_shift(shift);
  return out;
}

std::vector<double> hyperbolic_laplacian(const Lattice& lat, const std::vector<double>& f) {
  std::vector<double> out(lat.size(), 0.0);
  for (int idx : lat.interior_nodes()) out[idx] = stencil_laplacian(lat, f, idx);
  lat.fill_ghosts(out, 3);
  for (int idx : lat.ghosts_up_to(2)) out[idx] = stencil_laplacian(lat, f, idx);
  return out;
}

BumpProfile::BumpProfile(const SurfaceAtlas& atlas, const std::vector<DiskPoint>& centers,
                         std::vector<double> amplitudes, double width)
    : atlas_(&atlas), width_(width) {
  if (!(width > 0.0)) throw DomainError("bump width must be positive");
  if (centers.size() != amplitudes.size()) throw DomainError("one amplitude per bump centre required");
  const auto near_words = atlas.words_up_to(2);
  std::vector<MobiusMap> far_words = atlas.words_of_length(3);
  const auto len4 = atlas.words_of_length(4);
  far_words.insert(far_words.end(), len4.begin(), len4.end());
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const Complex c = reduce_to_domain(atlas, centers[j]).point.value();
    for (const auto& g : far_words) {
      if (hyperbolic_distance(Complex(0.0, 0.0), g.apply(c)) - atlas.circumradius < width) {
        throw ConstructionError("bump width " + std::to_string(width) +
                                " reaches beyond the length-2 orbit neighbourhood");
      }
    }
    if (amplitudes[j] == 0.0) continue;
    for (const auto& g : near_words) {
      orbit_points_.push_back(g.apply(c));
      orbit_amps_.push_back(amplitudes[j]);
    }
  }
}

double BumpProfile::value(Complex z) const {
  const Complex w = reduce_complex(*atlas_, z).point.value();
  double s = 0.0;
  for (std::size_t k = 0; k < orbit_points_.size(); ++k) {
    s += bump(hyperbolic_distance(w, orbit_points_[k]), orbit_amps_[k], width_);
  }
  return s;
}

Complex BumpProfile::gradient(Complex z) const {
  Complex g(0.0, 0.0);
  for (std::size_t k = 0; k < orbit_points_.size(); ++k) {
    const double d = hyperbolic_distance(z, orbit_points_[k]);
    if (d >= width_) continue;
    g += bump_slope(d, orbit_amps_[k], width_) * distance_gradient(z, orbit_points_[k]);
  }
  return g;
}

std::vector<double> sample_profile(const Lattice& lattice, const BumpProfile& profile) {
  std::vector<double> v(lattice.size(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const int idx = static_cast<int>(k);
    if (lattice.band(idx) >= 0) v[k] = profile.value(lattice.node(idx));
  }
  return v;
}

ConformalField field_from_bumps(std::shared_ptr<const Lattice> lattice, const std::vector<DiskPoint>& centers,
                                const std::vector<double>& amplitudes, double width) {
  const BumpProfile profile(lattice->atlas(), centers, amplitudes, width);
  double shift = 0.0;
  auto rho = normalize_area(*lattice, sample_profile(*lattice, profile), &shift);
  // The bump is only C^2, so differencing its gradient loses accuracy at the
  // support edge; the orbit sum has a closed-form gradient instead.
  std::vector<double> gx(lattice->size(), 0.0), gy(lattice->size(), 0.0);
  for (std::size_t k = 0; k < gx.size(); ++k) {
    const int idx = static_cast<int>(k);
    const int b = lattice->band(idx);
    if (b < 0 || b > 3) continue;
    const Complex z = lattice->node(idx);
    const Reduction red = reduce_complex(lattice->atlas(), z);
    Complex g = profile.gradient(red.point.value());
    if (red.steps > 0) g *= std::conj(1.0 / red.map.derivative(red.point.value()));
    gx[k] = g.real();
    gy[k] = g.imag();
  }
  ConformalField field(std::move(lattice), std::move(rho), std::move(gx), std::move(gy));
  field.set_normalization_shift(shift);
  if (field.k_max() >= 0.0) {
    throw CurvaturePositive("bump field has max K = " + std::to_string(field.k_max()) +
                            " >= 0; reduce the amplitude or widen the bumps");
  }
  return field;
}

void write_snapshot(const ConformalField& field, std::ostream& out) {
  const Lattice& lat = field.lattice();
  out << "# geoflow field snapshot\n";
  out << "grid_spacing = " << fmt17(lat.spacing()) << "\n";
  out << "nodes_per_side = " << lat.per_side() << "\n";
  out << "extent = " << fmt17(lat.extent()) << "\n";
  out << "margin = " << fmt17(lat.margin()) << "\n";
  out << "area = " << fmt17(field.area()) << "\n";
  out << "kbar = " << fmt17(field.kbar()) << "\n";
  out << "values\n";
  for (double v : field.values()) out << fmt17(v) << "\n";
}

void write_snapshot(const ConformalField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write snapshot " + path);
  write_snapshot(field, out);
}

ConformalField read_snapshot(std::istream& in) {
  double h = 0.0, margin = 0.0;
  long n = -1;
  std::string line;
  bool body = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "values") {
      body = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad snapshot header line: " + line);
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    const std::string val = line.substr(eq + 1);
    if (key == "grid_spacing") h = std::strtod(val.c_str(), nullptr);
    else if (key == "margin") margin = std::strtod(val.c_str(), nullptr);
    else if (key == "nodes_per_side") n = std::strtol(val.c_str(), nullptr, 10);
  }
  if (!body || h <= 0.0 || margin <= 0.0) throw ConfigError("incomplete snapshot header");
  auto lattice = make_lattice(h, margin);
  if (lattice->per_side() != n) throw ConfigError("snapshot lattice size does not match its spacing");
  std::vector<double> rho(lattice->size());
  for (auto& v : rho) {
    if (!std::getline(in, line)) throw ConfigError("snapshot truncated");
    v = std::strtod(line.c_str(), nullptr);
  }
  return ConformalField(std::move(lattice), std::move(rho), false);
}

ConformalField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot " + path);
  return read_snapshot(in);
}

}  // namespace geoflow
