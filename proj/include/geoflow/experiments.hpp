#pragma once

// The named checks behind each CLI subcommand. The acceptance binary calls the
// same functions.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "geoflow/flow.hpp"

namespace geoflow {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::vector<CheckResult> checks;
  std::string csv;  ///< full CSV text, header included
  bool ok() const;
  const CheckResult* find(const std::string& name) const;
};

/// One bump centred at cfg.psi_center, made mean-zero on `field`.
LatticeScalar bump_perturbation(const ConformalField& field, const FlowConfig& cfg);

/// max_i |r_i| / max(s_i, floor) with floor = 0.1 x median(s); s_i is the
/// largest term magnitude of the identity at sample i.
double max_relative_residual(const std::vector<double>& residual, const std::vector<double>& scale);

ExperimentResult run_entropy(const FlowConfig& cfg);
ExperimentResult run_verify_derivative(const FlowConfig& cfg);
ExperimentResult run_verify_identities(const FlowConfig& cfg);
ExperimentResult run_verify_pinched(const FlowConfig& cfg);
ExperimentResult run_jensen(const FlowConfig& cfg);
/// Rows go to `live_csv` as they are computed when it is given.
ExperimentResult run_flow_experiment(const FlowConfig& cfg, std::ostream* live_csv = nullptr,
                                     const std::function<void(const FlowCheckpoint&)>& on_checkpoint = {});

/// Checks on a finished flow run (monotonicity, invariants).
std::vector<CheckResult> flow_checks(const std::vector<FlowCheckpoint>& rows);

}  // namespace geoflow
