#pragma once

// Boundary-value matching by shooting: the unknown is the initial template
// covector sigma0, with mu0 = -sigma0 <> n0 so every trajectory starts on the
// Noether zero level.

#include "metamorph/core.hpp"

#include <functional>
#include <vector>

namespace metamorph {

template <class State>
struct Trajectory {
  std::vector<State> states;  // uniform in time, first at t = 0
  std::vector<double> hamiltonian;
  std::vector<double> el_residual;

  const State& back() const { return states.back(); }
  std::size_t size() const { return states.size(); }
};

struct LandmarkMatchProblem {
  Points q0;
  Points q1;
  LagrangianSpec spec;
  double dt = 1e-2;

  void validate() const;
};

struct ImageMatchProblem {
  ScalarField n0;
  ScalarField n1;
  LagrangianSpec spec;
  double dt = 1e-2;
  int record_every = 1;

  void validate() const;
};

struct MatchOptions {
  double epsilon = 1e-2;
  /// Drive the endpoint mismatch to zero with an augmented Lagrangian on top
  /// of the penalty; otherwise minimise action + misfit / epsilon^2 only.
  bool exact = false;
  int max_iters = 500;
  int max_outer = 25;
  double tolerance = 1e-6;
  double fd_step = 1e-5;
  /// Highest wavenumber per axis of the image sigma0 parameterisation.
  int image_modes = 2;
  int threads = 1;

  void validate() const;
};

struct OptimizerReport {
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  // accepted iterates of the last inner solve
};

struct LandmarkMatchResult {
  Points sigma0;
  PointMomentum mu0;
  Trajectory<LandmarkState> trajectory;
  double action = 0.0;
  double misfit = 0.0;
  double objective = 0.0;
  double endpoint_residual = 0.0;
  OptimizerReport report;
};

struct ImageMatchResult {
  std::vector<double> coefficients;
  ScalarDensity sigma0;
  Trajectory<ImageState> trajectory;
  double action = 0.0;
  double misfit = 0.0;
  double objective = 0.0;
  double endpoint_residual = 0.0;
  OptimizerReport report;
};

/// Number of RK4 steps covering [0, 1]; dt must divide 1.
std::size_t unit_steps(double dt);

Trajectory<LandmarkState> shoot(const LandmarkMatchProblem& problem, const Points& sigma0);
Trajectory<ImageState> shoot(const ImageMatchProblem& problem, const ScalarDensity& sigma0);

/// Trapezoidal quadrature of l(u, n, nu) over the stored states.
double action_value(const Trajectory<LandmarkState>& trajectory, const LagrangianSpec& spec);
double action_value(const Trajectory<ImageState>& trajectory, const LagrangianSpec& spec);

LandmarkMatchResult match(const LandmarkMatchProblem& problem, const MatchOptions& options);
ImageMatchResult match(const ImageMatchProblem& problem, const MatchOptions& options);

/// Low-mode Fourier synthesis used for image sigma0: the constant mode, then
/// cos and sin of every wave vector in a half plane with |k_i| <= modes.
std::size_t image_parameter_count(const Domain& domain, int modes);
ScalarDensity image_sigma(const Domain& domain, int modes, const std::vector<double>& coefficients);

/// Monotone gradient descent with central finite-difference gradients,
/// Barzilai-Borwein trial steps and Armijo backtracking.
struct DescentResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};
DescentResult minimize(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                       double fd_step, double gradient_tolerance, int max_iters, int threads);

}  // namespace metamorph
