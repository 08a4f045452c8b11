#pragma once

// Liouville-measure sampling and the Monte Carlo functionals built on it.

#include <cstdint>
#include <string>
#include <vector>

#include "geoflow/geodesic.hpp"

namespace geoflow {

struct LiouvilleSample {
  UnitTangent v;
  double weight = 1.0;
};

/// Counter-keyed stream: the k-th draw of sample i depends only on (seed, i, k).
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index);
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Sub-seed for a labelled stage of a run (checkpoint index, perturbation id).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label);

/// Rejection sampling of base points with density e^{2 rho} dA_hyp on the
/// octagon and uniform fibre angle.
std::vector<LiouvilleSample> sample_liouville(const ConformalField& field, std::size_t n, std::uint64_t seed);

struct EstimatorReport {
  std::string quantity;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double burn_in = 0.0;
  double dt = 0.0;
  double tail_bound = 0.0;
};

/// Mean and standard error with pairwise sums.
EstimatorReport summarize(const std::string& quantity, const std::vector<double>& values, std::uint64_t seed,
                          double burn_in, double dt, double tail_bound = 0.0);

std::string report_csv_header();
std::string report_csv_row(const EstimatorReport& r);

/// sqrt(a^2 + b^2) of the two standard errors.
double combined_stderr(const EstimatorReport& a, const EstimatorReport& b);

struct EstimatorOptions {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  double burn_in = 20.0;
  double dt = 5e-3;
  /// Entropy: subtract the mean-zero Riccati term (w^2 + kbar)/(2 sqrt(-kbar)).
  /// psi-weighted averages: sample only w^s + sqrt(-K) and add the sqrt(-K)
  /// part back by quadrature.
  bool control_variate = false;
};

/// w^s and K at the base of each Liouville sample; shared by several estimators.
struct StableSamples {
  std::vector<LiouvilleSample> samples;
  std::vector<double> w;
  std::vector<double> k;
  double error_bound = 0.0;
  EstimatorOptions options;
};

StableSamples stable_samples(const ConformalField& field, const EstimatorOptions& opt);

/// (1/A) int f e^{2 rho} dA_hyp over lattice quadrature.
double area_mean(const ConformalField& field, const std::vector<double>& f);

/// kappa = (1/A) int sqrt(-K) dA. Throws CurvaturePositive if K >= 0 at a node.
double mean_root_curvature(const ConformalField& field);

struct EntropyReport {
  EstimatorReport stable;    ///< mean of -w^s
  EstimatorReport unstable;  ///< mean of +w^u on the same samples
};

EstimatorReport entropy_from(const ConformalField& field, const StableSamples& s);
EntropyReport entropy_estimate(const ConformalField& field, const EstimatorOptions& opt, bool dual = true);

/// Mean of -1/2 psi w^s.
EstimatorReport entropy_derivative_from(const ConformalField& field, const LatticeScalar& psi,
                                        const StableSamples& s);
EstimatorReport entropy_derivative_formula(const ConformalField& field, const LatticeScalar& psi,
                                           const EstimatorOptions& opt);

/// Centred difference of the entropy at rho +- eps psi with common random
/// numbers: the base samples are reused with weights e^{2(rho_eps - rho)}.
/// Always the plain estimator of -w^s.
EstimatorReport entropy_derivative_fd(const ConformalField& field, const LatticeScalar& psi, double eps,
                                      const EstimatorOptions& opt);

/// (1/A)[int Delta_0 psi / (2 sqrt(-K)) dA_0 + int psi sqrt(-K) dA_0].
double mrc_derivative_formula(const ConformalField& field, const LatticeScalar& psi);
double mrc_derivative_fd(const ConformalField& field, const LatticeScalar& psi, double eps = 1e-3);

/// Mean of (w^s)^2 + K.
EstimatorReport riccati_mean_from(const StableSamples& s);
EstimatorReport riccati_mean_check(const ConformalField& field, const EstimatorOptions& opt);

/// Mean of (K - kbar) w^s.
EstimatorReport ricci_direction_from(const ConformalField& field, const StableSamples& s);
EstimatorReport ricci_direction_sign(const ConformalField& field, const EstimatorOptions& opt);

struct IntegrationByParts {
  EstimatorReport lhs;  ///< mean of V(w^s) I_psi
  EstimatorReport rhs;  ///< mean of -1/2 psi w^s
};

IntegrationByParts verify_integration_by_parts(const ConformalField& field, const LatticeScalar& psi,
                                               const EstimatorOptions& opt, const GeodesicOptions& gopt = {});

/// sum_i w_i F_i^2 (F_i - sum_j w_j F_j). Throws NegativeInput on F_i < 0 and
/// DomainError when weights are not a probability vector.
double jensen_check(const std::vector<double>& values, const std::vector<double>& weights);

struct PinchedReport {
  EstimatorReport curvature_term;  ///< K/(2 w^3) (I_{w^2} - w I_w)^2
  EstimatorReport slope_term;      ///< -w I_w^2 (3 + K/(2 w^2))
  EstimatorReport sum;             ///< per-sample sum of the two terms
  EstimatorReport direct;          ///< -I_w I_{-K}
  double pinching = 0.0;
  /// Samples where (w^s)^2 left [K1, K2] by more than the Riccati error bound.
  std::size_t bound_violations = 0;
  double worst_bound_excess = 0.0;
};

PinchedReport pinched_positivity_check(const ConformalField& field, const EstimatorOptions& opt,
                                       const GeodesicOptions& gopt = {});

}  // namespace geoflow
