#pragma once

// Discrete Lie-algebraic operators for both data structures.
//
// Grid structure (periodic images): u n := -u . grad n, so the template
// equation reads dn/dt + u . grad n = nu. Every adjoint is built as the exact
// transpose of its primal operator under the Riemann-sum pairing.
//
// Landmark structure (points on the plane): u q := u(q), diamond and ad*
// produce distributional momenta or jet functionals.

#include "metamorph/fields.hpp"
#include "metamorph/plane.hpp"

#include <Eigen/Dense>

namespace metamorph {

/// Spectral Helmholtz-power inertia L = (1 + alpha^2 |k|^2)^s.
struct InertiaOperator {
  double alpha = 1.0;
  int power = 1;

  double symbol(double k2) const;
  void validate() const;
};

// ---- pairings -------------------------------------------------------------

double pair(const OneFormDensity& m, const VectorField& u);
double pair(const ScalarDensity& sigma, const ScalarField& f);
double pair(const PointMomentum& m, const PlaneField& u);
double pair(const PointMomentum& m, const VectorField& u);
double pair(const Points& covectors, const Points& vectors);

// ---- grid structure --------------------------------------------------------

/// u f = -u . grad f
ScalarField lie_derivative_scalar(const VectorField& u, const ScalarField& f);
/// L_xi M = (xi . grad) M + (grad xi)^T M + M div xi, assembled in conservative
/// form so it is the exact transpose of ad.
OneFormDensity lie_derivative_oneform_density(const VectorField& xi, const OneFormDensity& m);
/// ad_u v = (grad u) v - (grad v) u
VectorField ad(const VectorField& u, const VectorField& v);
OneFormDensity ad_star(const VectorField& u, const OneFormDensity& m);
/// <sigma <> n, u> = -<sigma, u n>, i.e. sigma grad n.
OneFormDensity diamond(const ScalarDensity& sigma, const ScalarField& n);
/// <sigma, u w> = <u * sigma, w>, i.e. div(sigma u).
ScalarDensity star(const VectorField& u, const ScalarDensity& sigma);
VectorField velocity_from_momentum(const OneFormDensity& mu, const InertiaOperator& inertia);
OneFormDensity momentum_from_velocity(const VectorField& u, const InertiaOperator& inertia);

// ---- landmark structure ------------------------------------------------------

/// u q = (u(q_a))_a
Points act(const PlaneField& u, const Points& q);
/// Action on tangent vectors at q: (grad u(q_a) v_a)_a
Points act_tangent(const PlaneField& u, const Points& q, const Points& v);
/// p <> q = -sum_a p_a delta_{q_a}
PointMomentum diamond(const Points& p, const Points& q);
/// sigma <> nu for a tangent vector nu at q: dipoles -sigma_a (x) nu_a at q_a.
JetFunctional diamond_tangent(const Points& sigma, const Points& q, const Points& nu);
/// (u * sigma)_a = grad u(q_a)^T sigma_a
Points star(const PlaneField& u, const Points& sigma, const Points& q);
/// ad*_u of point masses, a jet functional (masses and dipoles at the support).
JetFunctional ad_star(const PlaneField& u, const PointMomentum& m);
PlaneField velocity_from_momentum(const PointMomentum& mu, const Kernel& kernel);
/// k*d x k*d block matrix with blocks K(q_a - q_b) I_d.
Eigen::MatrixXd kernel_matrix(const Points& q, const Kernel& kernel);

/// Sup-norm of the induced velocity over the support: a norm on point masses
/// that stays linear in the momentum, so cancellations do not lose precision.
double momentum_norm(const PointMomentum& m, const Kernel& kernel);
/// Sup-norm of the induced velocity L^{-1} m over the grid.
double momentum_norm(const OneFormDensity& m, const InertiaOperator& inertia);

/// Merge masses sitting at bitwise-identical points and drop zero weights.
PointMomentum merged(const PointMomentum& m);
PointMomentum concat(const PointMomentum& a, const PointMomentum& b);

}  // namespace metamorph
