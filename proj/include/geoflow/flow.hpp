#pragma once

// Normalized Ricci flow on the lattice and the checkpointed experiment.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "geoflow/estimators.hpp"

namespace geoflow {

/// Run configuration. Also carries the knobs of the verification subcommands.
struct FlowConfig {
  std::vector<DiskPoint> bump_centers{DiskPoint(0.0, 0.0)};
  std::vector<double> bump_amplitudes{0.1};
  double bump_width = 1.5;
  double grid_spacing = 2.0 / 256.0;
  double dt_flow = 4e-5;
  double total_flow_time = 2.0;
  double checkpoint_interval = 0.1;
  std::size_t n_samples = 1000;
  double burn_in = 20.0;
  double dt_geodesic = 5e-3;
  std::uint64_t seed = 1;

  double horizon = 20.0;
  double fd_epsilon = 1e-2;
  double kappa_fd_epsilon = 1e-3;
  std::size_t identity_samples = 50;
  std::size_t pinched_samples = 2000;
  std::size_t ibp_samples = 2000;
  std::size_t jensen_vectors = 100000;
  /// Second perturbation used by the derivative checks: one bump, made mean-zero.
  DiskPoint psi_center{0.3, 0.2};
  double psi_width = 1.0;
};

/// `key = value` lines with `#` comments. Unknown keys and malformed values
/// raise ConfigError; a missing file raises ConfigError naming the path.
FlowConfig parse_config(std::istream& in, const std::string& origin = "<config>");
FlowConfig load_config(const std::string& path);

/// Initial field of a config (rho == 0 when there are no bump centres).
ConformalField initial_field(const FlowConfig& cfg);
std::shared_ptr<const Lattice> config_lattice(const FlowConfig& cfg);

/// 0.2 h^2 min over interior nodes of e^{2 rho} 4/(1-|z|^2)^2.
double cfl_bound(const Lattice& lattice, const std::vector<double>& rho);

/// Explicit RK4 stepper working on raw lattice values. Interior nodes evolve;
/// ghosts are refilled after every stage; the area is restored by a constant
/// shift after every step.
class RicciStepper {
 public:
  RicciStepper(std::shared_ptr<const Lattice> lattice, std::vector<double> rho);

  /// Throws CflViolation if dt exceeds cfl_bound.
  void step(double dt);
  const std::vector<double>& values() const { return rho_; }
  /// Largest |rho change| on interior nodes in the last step.
  double last_update_norm() const { return update_norm_; }
  double time() const { return time_; }

  ConformalField field() const;

 private:
  void rate(const std::vector<double>& rho, std::vector<double>& out) const;

  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> rho_;
  std::vector<double> k1_, k2_, k3_, k4_, stage_;
  double update_norm_ = 0.0;
  double time_ = 0.0;
};

/// One step of d rho / d eps = e^{-2 rho}(Delta_hyp rho + 1) - 1. Checks that
/// the new field has kbar = -1 +- 1e-3 and negative curvature.
ConformalField ricci_step(const ConformalField& field, double dt_flow);

struct FlowCheckpoint {
  double epsilon = 0.0;
  EstimatorReport entropy;
  double kappa = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  double kbar = 0.0;
  double pinching_ratio = 0.0;
  double area_defect = 0.0;
  EstimatorReport dh_formula;
  EstimatorReport dh_fd;
  double dkappa_formula = 0.0;
  double dkappa_fd = 0.0;
};

std::string flow_csv_header();
std::string flow_csv_row(const FlowCheckpoint& c);

/// Checkpoints at eps = 0, checkpoint_interval, ..., total_flow_time. Each row
/// is written and flushed as soon as it is computed, so a failure leaves the
/// finished rows in place.
std::vector<FlowCheckpoint> run_flow(const FlowConfig& cfg, std::ostream* csv = nullptr,
                                     const std::function<void(const FlowCheckpoint&)>& on_checkpoint = {});

FlowCheckpoint evaluate_checkpoint(const ConformalField& field, double epsilon, const FlowConfig& cfg,
                                   std::uint64_t seed);

}  // namespace geoflow
