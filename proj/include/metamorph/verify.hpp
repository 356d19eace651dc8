#pragma once

// Invariant checks behind `metamorph verify` and the acceptance runner. Each
// measure returns a number; the suite compares it with a fixed threshold.

#include "metamorph/uq.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace metamorph::checks {

/// Largest relative residual of the diamond, tangent diamond, star and ad*
/// dualities on random landmark inputs with 1..max_landmarks points.
double landmark_duality_residual(std::uint64_t seed, int trials, int max_landmarks = 5);
/// Same for the grid operators (diamond, star, ad*).
double image_duality_residual(const Domain& domain, std::uint64_t seed, int trials);

/// d/dt (mu + sigma <> n) against -ad*_u (mu + sigma <> n) on random states,
/// relative to the larger side.
double landmark_coadjoint_residual(const LagrangianSpec& spec, std::uint64_t seed, int trials);
double image_coadjoint_residual(const Domain& domain, const LagrangianSpec& spec, std::uint64_t seed, int trials);

struct ConservationReport {
  double hamiltonian_drift = 0.0;  // max |h(t) - h(0)| / |h(0)|
  double el_residual = 0.0;        // max total momentum norm
  double scale = 0.0;              // norm of the template part sigma <> n at t = 0
};
ConservationReport conservation(const LandmarkState& s0, const LagrangianSpec& spec, double dt, double horizon);
ConservationReport conservation(const ImageState& s0, const LagrangianSpec& spec, double dt, double horizon);

/// Terminal |M_tangled - M_untangled| / |M(0)| after RK4 integration of both forms.
double form_equivalence(const LandmarkState& s0, const LagrangianSpec& spec, double dt, double horizon);
double form_equivalence(const ImageState& s0, const LagrangianSpec& spec, double dt, double horizon);

/// Image Ito correction against 1/2 (xi . grad)^2 applied to every field, for
/// constant noise vectors on random band-limited states.
double constant_noise_ito_residual(const Domain& domain, const Points& vectors, std::uint64_t seed);

/// Mean relative drift of <g_t^* M_t, w> over `paths` landmark paths for each
/// dt (same refined Brownian path across levels).
std::vector<double> advection_drift_study(const LandmarkUntangledState& s0, const LagrangianSpec& spec,
                                          const NoiseBasis& noise, const PlaneField& w,
                                          const std::vector<double>& dts, double horizon, std::size_t paths,
                                          std::uint64_t seed);

// ---- default cases ------------------------------------------------------------

/// Three landmarks with template momenta, on the Noether zero level.
LandmarkState default_landmarks();
/// Same configuration with momenta x4 and kernel width 0.5: stiff enough that
/// RK4 errors stay above round-off at dt = 1e-3.
LandmarkState stiff_landmarks();
LagrangianSpec stiff_spec();
/// One untangled landmark configuration with free momentum away from q.
LandmarkUntangledState default_untangled();
/// Bump noise used by the stochastic checks (first J of two bumps).
NoiseBasis default_bump_noise(std::size_t J);
/// Test field for the advection series.
PlaneField default_test_field();
/// 1D image on 64 nodes with a smooth template and template momentum.
ImageState default_image(const Domain& domain);

// ---- suite ------------------------------------------------------------------------

struct CheckOutcome {
  std::string name;
  std::string status;  // pass | fail | skipped
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifySettings {
  bool landmarks = true;
  bool images = true;
  LagrangianSpec landmark_spec;
  LandmarkState landmark_state = default_landmarks();
  NoiseBasis landmark_noise = default_bump_noise(2);
  LagrangianSpec image_spec;
  std::optional<ImageState> image_state;  // empty: default_image on a 64-point 1D grid
  Points image_noise_vectors = {Vec::Constant(1, 0.3)};
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
};

std::vector<CheckOutcome> run_verification(const VerifySettings& settings);

}  // namespace metamorph::checks
