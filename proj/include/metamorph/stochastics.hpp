#pragma once

// Cylindrical Stratonovich noise, time steppers and Lagrangian tracers.
//
// A step is driven by the transport increment u_tilde = u dt + sum_i xi_i dW_i.
// Because every equation is linear in u_tilde, one call to increment() with
// u_tilde gives dt * drift + sum_i b_i dW_i, where b_i is transport by xi_i.

#include "metamorph/core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metamorph {

enum class Scheme { deterministic_rk4, stratonovich_heun, ito_euler_maruyama };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

/// Fixed spatial correlation fields xi_i. Landmark runs use plane modes, image
/// runs use grid modes; amplitudes are folded into the fields.
struct NoiseBasis {
  std::vector<PlaneField> plane;
  std::vector<VectorField> grid;

  std::size_t size() const { return plane.empty() ? grid.size() : plane.size(); }
  bool empty() const { return plane.empty() && grid.empty(); }

  /// xi_i(x) = a_i exp(-|x - z_i|^2 / (2 lambda^2)) e_{d_i}
  static NoiseBasis gaussian_bumps(const Points& centers, const std::vector<int>& directions,
                                   const std::vector<double>& amplitudes, double length_scale);
  /// Constant plane modes xi_i = v_i.
  static NoiseBasis constant(const Points& vectors);
  /// Constant grid modes xi_i = v_i.
  static NoiseBasis constant(const Domain& domain, const Points& vectors);
  /// Lowest Fourier modes: cos then sin of each wavenumber k = 1, 2, ...; in
  /// 2D each direction e_c is paired with waves along the other axis.
  static NoiseBasis fourier(const Domain& domain, std::size_t count, const std::vector<double>& amplitudes);
};

/// Brownian increments for one trajectory, generated step-major from
/// (master_seed, index) so identical seeds give identical streams.
class BrownianPath {
 public:
  BrownianPath() = default;
  BrownianPath(std::uint64_t master_seed, std::uint64_t index, std::size_t modes, double dt, std::size_t steps);
  static BrownianPath zero(std::size_t modes, double dt, std::size_t steps);

  std::size_t modes() const { return modes_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }
  std::span<const double> increment(std::size_t step) const;
  /// Path on the grid with step factor * dt; increments are exact sums.
  BrownianPath coarsened(std::size_t factor) const;
  /// W(T) per mode.
  std::vector<double> terminal() const;

 private:
  std::size_t modes_ = 0;
  std::size_t steps_ = 0;
  double dt_ = 0.0;
  std::vector<double> dw_;
};

// ---- per-structure building blocks ---------------------------------------------

/// u dt + sum_i xi_i dW_i
PlaneField transport_velocity_increment(const LandmarkState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw);
PlaneField transport_velocity_increment(const LandmarkUntangledState& s, const LagrangianSpec& spec,
                                        const NoiseBasis& noise, double dt, std::span<const double> dw);
VectorField transport_velocity_increment(const ImageState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                         double dt, std::span<const double> dw);
VectorField transport_velocity_increment(const ImageUntangledState& s, const LagrangianSpec& spec,
                                         const NoiseBasis& noise, double dt, std::span<const double> dw);

/// Stratonovich-to-Ito drift 1/2 sum_i (D b_i) b_i, where b_i is transport by xi_i.
LandmarkRate ito_drift_correction(const LandmarkState& s, const NoiseBasis& noise);
LandmarkRate ito_drift_correction(const LandmarkUntangledState& s, const NoiseBasis& noise);
ImageRate ito_drift_correction(const ImageState& s, const NoiseBasis& noise);
ImageRate ito_drift_correction(const ImageUntangledState& s, const NoiseBasis& noise);

/// h dt + sum_i <mu, xi_i> dW_i
double stochastic_hamiltonian_increment(const LandmarkState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw);
double stochastic_hamiltonian_increment(const ImageState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw);

inline LandmarkRate deterministic_rate(const LandmarkState& s, const LagrangianSpec& spec) { return rhs_tangled(s, spec); }
inline LandmarkRate deterministic_rate(const LandmarkUntangledState& s, const LagrangianSpec& spec) {
  return rhs_untangled(s, spec);
}
inline ImageRate deterministic_rate(const ImageState& s, const LagrangianSpec& spec) { return rhs_tangled(s, spec); }
inline ImageRate deterministic_rate(const ImageUntangledState& s, const LagrangianSpec& spec) {
  return rhs_untangled(s, spec);
}

// ---- steppers ------------------------------------------------------------------

template <class State>
State step_rk4(const State& s, const LagrangianSpec& spec, double dt) {
  const auto k1 = deterministic_rate(s, spec);
  const auto k2 = deterministic_rate(advanced(s, k1, dt / 2), spec);
  const auto k3 = deterministic_rate(advanced(s, k2, dt / 2), spec);
  const auto k4 = deterministic_rate(advanced(s, k3, dt), spec);
  State out = advanced(advanced(advanced(advanced(s, k1, dt / 6), k2, dt / 3), k3, dt / 3), k4, dt / 6);
  out.t = s.t + dt;
  return out;
}

/// Forward Euler on the deterministic equations.
template <class State>
State step_euler(const State& s, const LagrangianSpec& spec, double dt) {
  State out = advanced(s, deterministic_rate(s, spec), dt);
  out.t = s.t + dt;
  return out;
}

/// Stratonovich predictor-corrector: the same dW drives both stages.
template <class State>
State step_heun(const State& s, const LagrangianSpec& spec, const NoiseBasis& noise, double dt,
                std::span<const double> dw) {
  const auto d1 = increment(s, spec, transport_velocity_increment(s, spec, noise, dt, dw), dt);
  const State predictor = advanced(s, d1, 1.0);
  const auto d2 = increment(predictor, spec, transport_velocity_increment(predictor, spec, noise, dt, dw), dt);
  State out = advanced(advanced(s, d1, 0.5), d2, 0.5);
  out.t = s.t + dt;
  return out;
}

/// Ito step: dt (drift + correction) + sum_i b_i dW_i.
template <class State>
State step_euler_maruyama(const State& s, const LagrangianSpec& spec, const NoiseBasis& noise, double dt,
                          std::span<const double> dw) {
  const auto d = increment(s, spec, transport_velocity_increment(s, spec, noise, dt, dw), dt);
  State out = advanced(s, d, 1.0);
  if (noise.size() > 0) out = advanced(out, ito_drift_correction(s, noise), dt);
  out.t = s.t + dt;
  return out;
}

template <class State>
State step(Scheme scheme, const State& s, const LagrangianSpec& spec, const NoiseBasis& noise, double dt,
           std::span<const double> dw) {
  switch (scheme) {
    case Scheme::deterministic_rk4:
      return step_rk4(s, spec, dt);
    case Scheme::stratonovich_heun:
      return step_heun(s, spec, noise, dt, dw);
    case Scheme::ito_euler_maruyama:
      return step_euler_maruyama(s, spec, noise, dt, dw);
  }
  throw InputError("unknown scheme");
}

/// Integrates `steps` steps along a Brownian path, calling observe(k, state)
/// for k = 0..steps. Throws NumericalError on the first non-finite state.
template <class State, class Observer>
State integrate(Scheme scheme, State s, const LagrangianSpec& spec, const NoiseBasis& noise, const BrownianPath& path,
                Observer&& observe) {
  if (scheme != Scheme::deterministic_rk4 && path.modes() != noise.size())
    throw InputError("brownian path mode count does not match the noise basis");
  const double dt = path.dt();
  observe(std::size_t{0}, s);
  for (std::size_t k = 0; k < path.steps(); ++k) {
    s = step(scheme, s, spec, noise, dt, path.increment(k));
    if (!s.finite()) throw NumericalError("non-finite state", static_cast<long>(k + 1));
    observe(k + 1, s);
  }
  return s;
}

template <class State>
State integrate(Scheme scheme, State s, const LagrangianSpec& spec, const NoiseBasis& noise, const BrownianPath& path) {
  return integrate(scheme, std::move(s), spec, noise, path, [](std::size_t, const State&) {});
}

// ---- tracers -------------------------------------------------------------------

/// Material points X with current positions x = g_t X and deformation
/// gradients F = dg_t/dX.
struct TracerCloud {
  Points labels;
  Points x;
  std::vector<Mat> F;

  static TracerCloud at(const Points& labels);
  std::size_t size() const { return x.size(); }
};

/// One Heun step of the tracers, using the transport of the state at the
/// start of the step for the predictor and the state at its end for the
/// corrector, with the same dW as the field solve.
TracerCloud advance_tracers(const TracerCloud& cloud, const PlaneField& transport_start,
                            const PlaneField& transport_end);
TracerCloud advance_tracers(const TracerCloud& cloud, const VectorField& transport_start,
                            const VectorField& transport_end);

template <class State>
TracerCloud advance_tracers(const TracerCloud& cloud, const State& start, const State& end, const LagrangianSpec& spec,
                            const NoiseBasis& noise, double dt, std::span<const double> dw) {
  return advance_tracers(cloud, transport_velocity_increment(start, spec, noise, dt, dw),
                         transport_velocity_increment(end, spec, noise, dt, dw));
}

}  // namespace metamorph
