#pragma once

// Metamorphosis states, energies and Lie-Poisson right-hand sides.
//
// Tangled variables are (mu, sigma, n) with mu = dl/du; untangled variables
// are (M, sigma, n) with M = mu + sigma <> n. Both are provided for landmarks
// on the plane and for scalar images on a periodic grid.
//
// Every right-hand side is written as an *increment* driven by a transport
// field: with transport u_tilde and clock dt,
//
//   d mu    = -ad*_{u_tilde} mu - dt sigma <> nu + dt (dh/dn) <> n
//   d sigma = -u_tilde * sigma  - dt dh/dn
//   d n     =  u_tilde n        + dt nu
//
// The deterministic rate is the increment with u_tilde = u, dt = 1. The
// stochastic solvers reuse the same code with u_tilde = u dt + sum xi_i dW_i.

#include "metamorph/algebra.hpp"

#include <optional>
#include <vector>

namespace metamorph {

enum class Structure { landmark, image };

/// l(u, n, nu) = 1/2 <Lu, u> + 1/(2 sigma_m^2) |nu|^2 - V(n), with the optional
/// potential V(n) = kappa/2 |n - n_ref|^2.
struct LagrangianSpec {
  Kernel kernel;
  InertiaOperator inertia;
  double sigma_m_sq = 0.5;
  double potential_weight = 0.0;
  Points landmark_reference;  // empty: reference is the origin for every landmark
  std::optional<ScalarField> image_reference;

  void validate() const;
};

// ---- states ------------------------------------------------------------------

/// Tangled landmark state. mu is a sum of point masses; every support point is
/// either free (anchor -1, carried by u) or anchored to landmark a (anchor a),
/// in which case it sits at q_a and carries mass sigma_a.
struct LandmarkState {
  double t = 0.0;
  PointMomentum mu;
  std::vector<int> anchor;
  Points sigma;
  Points q;

  /// Splits mu + (sigma at q) - (sigma at q) so every landmark owns an anchored
  /// support point with mass sigma_a; the remainder stays free.
  static LandmarkState from_parts(double t, const PointMomentum& mu, const Points& sigma, const Points& q);
  /// Noether zero level: mu = -sigma <> q.
  static LandmarkState zero_level(const Points& sigma, const Points& q, double t = 0.0);

  int dim() const { return mu.dim; }
  std::size_t landmarks() const { return q.size(); }
  void check() const;
  bool finite() const;
};

/// Untangled landmark state: M is a sum of point masses carried by u.
struct LandmarkUntangledState {
  double t = 0.0;
  PointMomentum M;
  Points sigma;
  Points q;

  int dim() const { return M.dim; }
  void check() const;
  bool finite() const;
};

struct ImageState {
  double t = 0.0;
  OneFormDensity mu;
  ScalarDensity sigma;
  ScalarField n;

  static ImageState zero_level(const ScalarDensity& sigma, const ScalarField& n, double t = 0.0);
  const Domain& domain() const { return n.domain(); }
  void check() const;
  bool finite() const;
};

struct ImageUntangledState {
  double t = 0.0;
  OneFormDensity M;
  ScalarDensity sigma;
  ScalarField n;

  const Domain& domain() const { return n.domain(); }
  void check() const;
  bool finite() const;
};

/// Increment of a landmark state. mu is the structural rate (a jet functional,
/// one jet per support point, in support order); support_velocity and
/// support_mass are its realization on the support coordinates.
struct LandmarkRate {
  JetFunctional mu;
  Points support_velocity;
  Points support_mass;
  Points sigma;
  Points q;
};

struct ImageRate {
  OneFormDensity mu;  // d mu, or d M in untangled form
  ScalarDensity sigma;
  ScalarField n;
};

// ---- conversions -------------------------------------------------------------

LandmarkUntangledState untangle(const LandmarkState& s);
LandmarkState tangle(const LandmarkUntangledState& s);
ImageUntangledState untangle(const ImageState& s);
ImageState tangle(const ImageUntangledState& s);

// ---- energies ----------------------------------------------------------------

PlaneField velocity(const LandmarkState& s, const LagrangianSpec& spec);
PlaneField velocity(const LandmarkUntangledState& s, const LagrangianSpec& spec);
VectorField velocity(const ImageState& s, const LagrangianSpec& spec);
VectorField velocity(const ImageUntangledState& s, const LagrangianSpec& spec);

/// Template velocity nu = sigma_m^2 sigma.
Points template_velocity(const Points& sigma, const LagrangianSpec& spec);
ScalarField template_velocity(const ScalarDensity& sigma, const LagrangianSpec& spec);

double potential(const Points& q, const LagrangianSpec& spec);
double potential(const ScalarField& n, const LagrangianSpec& spec);
/// dV/dn, which equals dh/dn = -dl/dn.
Points potential_gradient(const Points& q, const LagrangianSpec& spec);
ScalarDensity potential_gradient(const ScalarField& n, const LagrangianSpec& spec);

struct LandmarkLegendre {
  PointMomentum mu;
  Points sigma;
  double h = 0.0;
};
struct ImageLegendre {
  OneFormDensity mu;
  ScalarDensity sigma;
  double h = 0.0;
};

/// Landmark velocities are given by their values v_a = u(q_a); u is the
/// minimal-norm kernel field with those values, so mu = sum_a p_a delta_{q_a}
/// with K(q) p = v.
LandmarkLegendre legendre(const LagrangianSpec& spec, const Points& v, const Points& nu, const Points& q);
ImageLegendre legendre(const LagrangianSpec& spec, const VectorField& u, const ScalarField& nu, const ScalarField& n);

double lagrangian(const LagrangianSpec& spec, const Points& v, const Points& nu, const Points& q);
double lagrangian(const LagrangianSpec& spec, const VectorField& u, const ScalarField& nu, const ScalarField& n);

double hamiltonian(const LandmarkState& s, const LagrangianSpec& spec);
double hamiltonian(const LandmarkUntangledState& s, const LagrangianSpec& spec);
double hamiltonian(const ImageState& s, const LagrangianSpec& spec);
double hamiltonian(const ImageUntangledState& s, const LagrangianSpec& spec);

// ---- right-hand sides --------------------------------------------------------

LandmarkRate increment(const LandmarkState& s, const LagrangianSpec& spec, const PlaneField& transport, double dt);
LandmarkRate increment(const LandmarkUntangledState& s, const LagrangianSpec& spec, const PlaneField& transport,
                       double dt);
ImageRate increment(const ImageState& s, const LagrangianSpec& spec, const VectorField& transport, double dt);
ImageRate increment(const ImageUntangledState& s, const LagrangianSpec& spec, const VectorField& transport, double dt);

LandmarkRate rhs_tangled(const LandmarkState& s, const LagrangianSpec& spec);
ImageRate rhs_tangled(const ImageState& s, const LagrangianSpec& spec);
LandmarkRate rhs_untangled(const LandmarkUntangledState& s, const LagrangianSpec& spec);
ImageRate rhs_untangled(const ImageUntangledState& s, const LagrangianSpec& spec);

/// s + h * rate on the state coordinates. The time stamp is left unchanged.
LandmarkState advanced(const LandmarkState& s, const LandmarkRate& rate, double h);
LandmarkUntangledState advanced(const LandmarkUntangledState& s, const LandmarkRate& rate, double h);
ImageState advanced(const ImageState& s, const ImageRate& rate, double h);
ImageUntangledState advanced(const ImageUntangledState& s, const ImageRate& rate, double h);

// ---- momentum map and residuals ------------------------------------------------

/// M = mu + sigma <> n
PointMomentum total_momentum(const LandmarkState& s);
OneFormDensity total_momentum(const ImageState& s);

/// Norm of the total momentum; zero exactly on the Noether zero level.
double euler_lagrange_residual(const LandmarkState& s, const LagrangianSpec& spec);
double euler_lagrange_residual(const ImageState& s, const LagrangianSpec& spec);

/// Norm of mu(1) + sigma(1) <> n1.
double endpoint_residual(const LandmarkState& s1, const Points& q1, const LagrangianSpec& spec);
double endpoint_residual(const ImageState& s1, const ScalarField& n1, const LagrangianSpec& spec);

// ---- Poisson bracket ----------------------------------------------------------

/// Functional derivative of some f(mu, sigma, n): (df/dmu, df/dsigma, df/dn).
struct LandmarkGradient {
  PlaneField d_mu;
  Points d_sigma;
  Points d_n;
};
struct ImageGradient {
  VectorField d_mu;
  ScalarField d_sigma;
  ScalarDensity d_n;
};

/// {f, h} = <df, B dh> with B the Lie-Poisson operator whose action on dh
/// is the right-hand side above.
double lie_poisson_apply(const LandmarkState& s, const LandmarkGradient& df, const LandmarkGradient& dh);
double lie_poisson_apply(const ImageState& s, const ImageGradient& df, const ImageGradient& dh);

/// Gradient of the Hamiltonian: (u, nu, dV/dn).
LandmarkGradient hamiltonian_gradient(const LandmarkState& s, const LagrangianSpec& spec);
ImageGradient hamiltonian_gradient(const ImageState& s, const LagrangianSpec& spec);

}  // namespace metamorph
