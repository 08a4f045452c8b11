#include "geoflow/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
  return x;
}

DiskPoint to_point(const std::string& key, const std::string& v) {
  const auto xy = split(v, ',');
  if (xy.size() != 2) throw ConfigError(key + " expects 'x, y' pairs");
  try {
    return DiskPoint(to_double(key, xy[0]), to_double(key, xy[1]));
  } catch (const DomainError&) {
    throw ConfigError(key + " point outside the disk: '" + v + "'");
  }
}

void require_positive(const std::string& key, double x) {
  if (!(x > 0.0)) throw ConfigError(key + " must be positive");
}

}  // namespace

FlowConfig parse_config(std::istream& in, const std::string& origin) {
  FlowConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "bump_centers") {
        c.bump_centers.clear();
        if (!val.empty())
          for (const auto& p : split(val, ';')) c.bump_centers.push_back(to_point(key, p));
      } else if (key == "bump_amplitudes") {
        c.bump_amplitudes.clear();
        if (!val.empty())
          for (const auto& a : split(val, ',')) c.bump_amplitudes.push_back(to_double(key, a));
      } else if (key == "bump_width") {
        c.bump_width = to_double(key, val);
      } else if (key == "grid_spacing") {
        c.grid_spacing = to_double(key, val);
      } else if (key == "dt_flow") {
        c.dt_flow = to_double(key, val);
      } else if (key == "total_flow_time") {
        c.total_flow_time = to_double(key, val);
      } else if (key == "checkpoint_interval") {
        c.checkpoint_interval = to_double(key, val);
      } else if (key == "n_samples") {
        c.n_samples = to_uint(key, val);
      } else if (key == "burn_in") {
        c.burn_in = to_double(key, val);
      } else if (key == "dt_geodesic") {
        c.dt_geodesic = to_double(key, val);
      } else if (key == "seed") {
        c.seed = to_uint(key, val);
      } else if (key == "horizon") {
        c.horizon = to_double(key, val);
      } else if (key == "fd_epsilon") {
        c.fd_epsilon = to_double(key, val);
      } else if (key == "kappa_fd_epsilon") {
        c.kappa_fd_epsilon = to_double(key, val);
      } else if (key == "identity_samples") {
        c.identity_samples = to_uint(key, val);
      } else if (key == "pinched_samples") {
        c.pinched_samples = to_uint(key, val);
      } else if (key == "ibp_samples") {
        c.ibp_samples = to_uint(key, val);
      } else if (key == "jensen_vectors") {
        c.jensen_vectors = to_uint(key, val);
      } else if (key == "psi_center") {
        c.psi_center = to_point(key, val);
      } else if (key == "psi_width") {
        c.psi_width = to_double(key, val);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (c.bump_centers.size() != c.bump_amplitudes.size()) {
    throw ConfigError(origin + ": bump_centers and bump_amplitudes differ in length");
  }
  for (const auto& [k, x] : {std::pair<const char*, double>{"bump_width", c.bump_width},
                             {"grid_spacing", c.grid_spacing},
                             {"dt_flow", c.dt_flow},
                             {"checkpoint_interval", c.checkpoint_interval},
                             {"burn_in", c.burn_in},
                             {"dt_geodesic", c.dt_geodesic},
                             {"horizon", c.horizon},
                             {"fd_epsilon", c.fd_epsilon},
                             {"kappa_fd_epsilon", c.kappa_fd_epsilon},
                             {"psi_width", c.psi_width}}) {
    try {
      require_positive(k, x);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
  if (c.total_flow_time < 0.0) throw ConfigError(origin + ": total_flow_time must be non-negative");
  if (c.n_samples < 2) throw ConfigError(origin + ": n_samples must be at least 2");
  return c;
}

FlowConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

std::shared_ptr<const Lattice> config_lattice(const FlowConfig& cfg) { return make_lattice(cfg.grid_spacing); }

ConformalField initial_field(const FlowConfig& cfg) {
  auto lattice = config_lattice(cfg);
  if (cfg.bump_centers.empty()) return ConformalField::constant(std::move(lattice), 0.0);
  return field_from_bumps(std::move(lattice), cfg.bump_centers, cfg.bump_amplitudes, cfg.bump_width);
}

double cfl_bound(const Lattice& lat, const std::vector<double>& rho) {
  double m = 1e300;
  for (int idx : lat.interior_nodes()) {
    const double s = 1.0 - std::norm(lat.node(idx));
    m = std::min(m, std::exp(2.0 * rho[idx]) * 4.0 / (s * s));
  }
  return 0.2 * lat.spacing() * lat.spacing() * m;
}

RicciStepper::RicciStepper(std::shared_ptr<const Lattice> lattice, std::vector<double> rho)
    : lattice_(std::move(lattice)), rho_(std::move(rho)) {
  const std::size_t n = lattice_->size();
  if (rho_.size() != n) throw DomainError("rho has the wrong number of lattice values");
  lattice_->fill_ghosts(rho_, kGhostBand);
  k1_.assign(n, 0.0);
  k2_.assign(n, 0.0);
  k3_.assign(n, 0.0);
  k4_.assign(n, 0.0);
  stage_ = rho_;
}

void RicciStepper::rate(const std::vector<double>& rho, std::vector<double>& out) const {
  const Lattice& lat = *lattice_;
  const int n = lat.per_side();
  const double ih2 = 1.0 / (lat.spacing() * lat.spacing());
  for (int idx : lat.interior_nodes()) {
    const double s = 1.0 - std::norm(lat.node(idx));
    const double lap = 0.25 * s * s * (rho[idx + 1] + rho[idx - 1] + rho[idx + n] + rho[idx - n] - 4.0 * rho[idx]) * ih2;
    out[idx] = std::exp(-2.0 * rho[idx]) * (lap + 1.0) - 1.0;
  }
}

void RicciStepper::step(double dt) {
  const Lattice& lat = *lattice_;
  const double bound = cfl_bound(lat, rho_);
  if (dt > bound) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dt_flow %.3g exceeds the stability bound %.3g", dt, bound);
    throw CflViolation(buf);
  }
  const auto& interior = lat.interior_nodes();
  auto stage = [&](const std::vector<double>& k, double c) {
    for (int idx : interior) stage_[idx] = rho_[idx] + c * dt * k[idx];
    lat.fill_ghosts(stage_, 1);
  };
  rate(rho_, k1_);
  stage(k1_, 0.5);
  rate(stage_, k2_);
  stage(k2_, 0.5);
  rate(stage_, k3_);
  stage(k3_, 1.0);
  rate(stage_, k4_);
  update_norm_ = 0.0;
  for (int idx : interior) {
    const double d = dt / 6.0 * (k1_[idx] + 2.0 * k2_[idx] + 2.0 * k3_[idx] + k4_[idx]);
    rho_[idx] += d;
    update_norm_ = std::max(update_norm_, std::abs(d));
  }
  lat.fill_ghosts(rho_, kGhostBand);
  rho_ = normalize_area(lat, std::move(rho_));
  time_ += dt;
}

ConformalField RicciStepper::field() const {
  ConformalField f(lattice_, rho_, false);
  if (f.k_max() >= 0.0) throw CurvaturePositive("curvature became non-negative during the flow");
  if (std::abs(f.kbar() + 1.0) > 1e-3) throw StepFailure("mean curvature drifted from -1");
  return f;
}

ConformalField ricci_step(const ConformalField& field, double dt_flow) {
  RicciStepper s(field.lattice_ptr(), field.values());
  s.step(dt_flow);
  return s.field();
}

std::string flow_csv_header() {
  return "epsilon,h_mean,h_stderr,kappa,k_min,k_max,kbar,pinch,dh_formula,dh_fd,dkappa_formula,dkappa_fd,"
         "area_defect,dh_formula_stderr,dh_fd_stderr";
}

std::string flow_csv_row(const FlowCheckpoint& c) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                c.epsilon, c.entropy.mean, c.entropy.stderr_, c.kappa, c.k_min, c.k_max, c.kbar, c.pinching_ratio,
                c.dh_formula.mean, c.dh_fd.mean, c.dkappa_formula, c.dkappa_fd, c.area_defect, c.dh_formula.stderr_,
                c.dh_fd.stderr_);
  return buf;
}

FlowCheckpoint evaluate_checkpoint(const ConformalField& field, double epsilon, const FlowConfig& cfg,
                                   std::uint64_t seed) {
  FlowCheckpoint c;
  c.epsilon = epsilon;
  c.kappa = mean_root_curvature(field);
  c.k_min = field.k_min();
  c.k_max = field.k_max();
  c.kbar = field.kbar();
  c.pinching_ratio = field.pinching();
  c.area_defect = field.area_defect();

  EstimatorOptions opt;
  opt.n = cfg.n_samples;
  opt.seed = seed;
  opt.burn_in = cfg.burn_in;
  opt.dt = cfg.dt_geodesic;
  opt.control_variate = true;
  const StableSamples s = stable_samples(field, opt);
  c.entropy = entropy_from(field, s);
  const LatticeScalar psi = ricci_direction(field);
  c.dh_formula = entropy_derivative_from(field, psi, s);
  c.dh_fd = entropy_derivative_fd(field, psi, cfg.fd_epsilon, opt);
  c.dkappa_formula = mrc_derivative_formula(field, psi);
  c.dkappa_fd = mrc_derivative_fd(field, psi, cfg.kappa_fd_epsilon);
  return c;
}

std::vector<FlowCheckpoint> run_flow(const FlowConfig& cfg, std::ostream* csv,
                                     const std::function<void(const FlowCheckpoint&)>& on_checkpoint) {
  const ConformalField start = initial_field(cfg);
  RicciStepper stepper(start.lattice_ptr(), start.values());
  const int checkpoints = static_cast<int>(std::lround(cfg.total_flow_time / cfg.checkpoint_interval));
  const int per_interval = std::max(1, static_cast<int>(std::ceil(cfg.checkpoint_interval / cfg.dt_flow - 1e-9)));
  const double dt = cfg.checkpoint_interval / per_interval;
  if (csv) *csv << flow_csv_header() << '\n' << std::flush;
  std::vector<FlowCheckpoint> out;
  for (int k = 0; k <= checkpoints; ++k) {
    if (k > 0) {
      for (int i = 0; i < per_interval; ++i) stepper.step(dt);
    }
    // The initial field keeps its exact gradient table; later ones are differenced.
    const ConformalField field = k == 0 ? start : stepper.field();
    out.push_back(evaluate_checkpoint(field, k * cfg.checkpoint_interval, cfg, derive_seed(cfg.seed, k)));
    if (csv) *csv << flow_csv_row(out.back()) << '\n' << std::flush;
    if (on_checkpoint) on_checkpoint(out.back());
  }
  return out;
}

}  // namespace geoflow
