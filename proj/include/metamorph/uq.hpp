#pragma once

// Monte Carlo ensembles of stochastic metamorphosis and the pathwise studies
// used to check the stochastic schemes.

#include "metamorph/stochastics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace metamorph {

struct EnsembleConfig {
  Scheme scheme = Scheme::stratonovich_heun;
  double dt = 1e-2;
  double horizon = 1.0;
  std::size_t samples = 1024;
  std::uint64_t master_seed = 0;
  int threads = 1;
  /// Store the summary every this many steps as well as at the end; 0 keeps
  /// only the terminal summary.
  std::size_t record_every = 0;
  /// Image runs: points where n is reported. Empty means every grid node.
  Points probes;

  std::size_t steps() const;
  void validate() const;
};

/// Per-sample output. The summary vector is the landmark positions q
/// (flattened) or the image values at the probe points.
struct SampleSummary {
  std::uint64_t index = 0;
  bool ok = true;
  std::string error;
  long failed_step = -1;
  std::vector<double> terminal;
  std::vector<std::vector<double>> series;  // one row per recorded time
  /// max over the path of the total momentum norm (zero on the Noether level)
  double momentum_drift = 0.0;
};

struct EnsembleResult {
  std::uint64_t master_seed = 0;
  std::vector<double> times;  // recorded times, last one is the horizon
  std::vector<SampleSummary> samples;

  std::size_t failures() const;
};

EnsembleResult run_ensemble(const LandmarkState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const EnsembleConfig& config);
EnsembleResult run_ensemble(const ImageState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const EnsembleConfig& config);

struct EnsembleStatistics {
  std::size_t samples = 0;  // successful samples used
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::optional<Eigen::MatrixXd> covariance;  // unbiased; needs two samples
  std::vector<std::vector<double>> variance_series;  // per recorded time, per component
  double drift_q05 = 0.0, drift_q50 = 0.0, drift_q95 = 0.0;
};

/// Statistics over the successful samples; throws if there are none.
EnsembleStatistics ensemble_statistics(const EnsembleResult& result);

/// Linear-interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> data, double q);

struct OrderStudy {
  std::vector<double> dts;
  std::vector<double> errors;  // mean terminal error per level
  double slope = 0.0;          // least-squares slope of log error against log dt
};

/// Least-squares slope of log y against log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Mean terminal error of `scheme` at each dt against a reference computed on
/// the same Brownian path at (smallest dt) / 8. Paths are generated at the
/// reference step and summed to each level, so levels share one path.
OrderStudy strong_order_estimate(Scheme scheme, const LandmarkState& initial, const LagrangianSpec& spec,
                                 const NoiseBasis& noise, const std::vector<double>& dt_levels, double horizon,
                                 std::size_t paths, std::uint64_t master_seed, int threads = 1);
OrderStudy strong_order_estimate(Scheme scheme, const ImageState& initial, const LagrangianSpec& spec,
                                 const NoiseBasis& noise, const std::vector<double>& dt_levels, double horizon,
                                 std::size_t paths, std::uint64_t master_seed, int threads = 1);

/// Mean terminal distance between Heun and Euler-Maruyama driven by the same
/// path, for each dt; paths are refined as in strong_order_estimate.
OrderStudy scheme_gap_study(const LandmarkState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const std::vector<double>& dt_levels, double horizon, std::size_t paths,
                            std::uint64_t master_seed, int threads = 1);

/// Distances used by the studies: Euclidean over (q, sigma), or the grid L2
/// norm over (n, sigma).
double state_distance(const LandmarkState& a, const LandmarkState& b);
double state_distance(const ImageState& a, const ImageState& b);

struct AdvectionSeries {
  std::vector<double> times;
  std::vector<double> values;  // <g_t^* M_t, w>
  double max_relative_drift = 0.0;
};

/// Integrates along `path` while carrying tracers with the same transport and
/// evaluates c(t) = <g_t^* M_t, w>. Landmarks: tracers sit on the support of
/// M, c = sum_b (F_b^T P_b) . w(X_b). Images: tracers start on every node,
/// c = sum_X det F (F^T M(g_t X)) . w(X) dV with M interpolated spectrally.
AdvectionSeries advection_invariant_series(Scheme scheme, const LandmarkUntangledState& initial,
                                           const LagrangianSpec& spec, const NoiseBasis& noise,
                                           const BrownianPath& path, const PlaneField& w);
AdvectionSeries advection_invariant_series(Scheme scheme, const ImageState& initial, const LagrangianSpec& spec,
                                           const NoiseBasis& noise, const BrownianPath& path, const VectorField& w);

}  // namespace metamorph
