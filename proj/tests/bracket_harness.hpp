#pragma once

// Random states and functional gradients for the bracket tests, shared by the
// unit tests and the acceptance runner.

#include "support.hpp"

#include "metamorph/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

namespace metamorph::bracket {

using namespace metamorph::testing;

inline Points pts(std::initializer_list<std::pair<double, double>> xs) {
  Points out;
  for (auto [x, y] : xs) {
    Vec v(2);
    v << x, y;
    out.push_back(v);
  }
  return out;
}

inline LandmarkState random_landmark_state(std::mt19937_64& rng, std::size_t k, std::size_t free) {
  const Points q = random_points(2, k, rng);
  const Points sigma = random_points(2, k, rng, 0.7);
  PointMomentum mu = random_momentum(2, free, rng);
  return LandmarkState::from_parts(0.0, mu, sigma, q);
}

inline ImageState random_image_state(const Domain& dom, std::mt19937_64& rng) {
  ImageState s;
  s.mu = random_vector<OneFormDensity>(dom, rng, 3, 0.5);
  s.sigma = random_scalar<ScalarDensity>(dom, rng, 3, 0.5);
  s.n = random_scalar<ScalarField>(dom, rng, 3, 1.0);
  return s;
}

inline LandmarkGradient random_landmark_gradient(std::mt19937_64& rng, std::size_t k) {
  return {random_plane_field(2, rng), random_points(2, k, rng), random_points(2, k, rng)};
}

inline ImageGradient random_image_gradient(const Domain& dom, std::mt19937_64& rng) {
  return {random_vector<VectorField>(dom, rng), random_scalar<ScalarField>(dom, rng),
          random_scalar<ScalarDensity>(dom, rng)};
}

// Jacobi identity on the finite-dimensional landmark reduction. Functionals
// depend on mu only through its affine moments <mu, c + A x>, which are
// closed under the bracket because affine fields form a subalgebra. The
// coordinates are z = (moments (6), sigma (2k), q (2k)).
constexpr std::size_t zk = 2;
constexpr std::size_t zdim = 6 + 4 * zk;
using Z = Eigen::Matrix<double, zdim, 1>;

inline const Points anchor_points = pts({{1.5, 0.2}, {-0.7, 1.1}, {-0.4, -1.3}});

inline LandmarkState state_of(const Z& z) {
  PointMomentum mu(2, anchor_points, zero_points(2, 3));
  Eigen::Matrix3d A;
  for (int b = 0; b < 3; ++b) A.col(b) << 1.0, anchor_points[b](0), anchor_points[b](1);
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector3d rhs(z(i), z(2 + 2 * i), z(2 + 2 * i + 1));
    const Eigen::Vector3d p = A.fullPivLu().solve(rhs);
    for (int b = 0; b < 3; ++b) mu.weights[b](i) = p(b);
  }
  Points sigma, q;
  for (std::size_t a = 0; a < zk; ++a) {
    sigma.push_back(z.segment<2>(6 + 2 * a));
    q.push_back(z.segment<2>(6 + 2 * zk + 2 * a));
  }
  return LandmarkState::from_parts(0.0, mu, sigma, q);
}

inline LandmarkGradient gradient_of(const Z& g) {
  Vec c = g.segment<2>(0);
  Mat a(2, 2);
  a << g(2), g(3), g(4), g(5);
  LandmarkGradient out{PlaneField::affine(c, a), {}, {}};
  for (std::size_t k = 0; k < zk; ++k) {
    out.d_sigma.push_back(g.segment<2>(6 + 2 * k));
    out.d_n.push_back(g.segment<2>(6 + 2 * zk + 2 * k));
  }
  return out;
}

struct Poly {
  Z a, c;
  Eigen::Matrix<double, zdim, zdim> B;
  Z grad(const Z& z) const { return a + B * z + 0.5 * std::pow(c.dot(z), 2) * c; }
};

inline Poly random_poly(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.5);
  Poly p;
  for (std::size_t i = 0; i < zdim; ++i) {
    p.a(i) = n(rng);
    p.c(i) = n(rng);
    for (std::size_t j = 0; j < zdim; ++j) p.B(i, j) = n(rng);
  }
  p.B = 0.5 * (p.B + p.B.transpose()).eval();
  return p;
}

inline double bracket(const Z& z, const Z& gf, const Z& gh) { return lie_poisson_apply(state_of(z), gradient_of(gf), gradient_of(gh)); }

inline Z fd_gradient(const std::function<double(const Z&)>& F, const Z& z, double h) {
  Z g;
  for (std::size_t i = 0; i < zdim; ++i) {
    Z zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    g(i) = (F(zp) - F(zm)) / (2 * h);
  }
  return g;
}

/// The three cyclic terms {f, {g, h}} + ... at a random point, inner bracket
/// gradients by central differences.
struct JacobiTerms {
  double t1, t2, t3;
  double sum() const { return t1 + t2 + t3; }
  double scale() const { return std::abs(t1) + std::abs(t2) + std::abs(t3); }
};

inline JacobiTerms jacobi_terms(std::mt19937_64& rng) {
  const Poly f = random_poly(rng), g = random_poly(rng), h = random_poly(rng);
  Z z;
  std::normal_distribution<double> n(0.0, 0.6);
  for (std::size_t i = 0; i < zdim; ++i) z(i) = n(rng);
  auto inner = [](const Poly& a, const Poly& b) {
    return [a, b](const Z& y) { return bracket(y, a.grad(y), b.grad(y)); };
  };
  return {bracket(z, f.grad(z), fd_gradient(inner(g, h), z, 1e-4)),
          bracket(z, g.grad(z), fd_gradient(inner(h, f), z, 1e-4)),
          bracket(z, h.grad(z), fd_gradient(inner(f, g), z, 1e-4))};
}

/// Largest |{f, g} + {g, f}| / max(1, |{f, g}|) over random landmark and grid inputs.
inline double skew_residual(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto s = random_landmark_state(rng, 3, 2);
    const auto f = random_landmark_gradient(rng, 3);
    const auto g = random_landmark_gradient(rng, 3);
    const double fg = lie_poisson_apply(s, f, g);
    worst = std::max(worst, std::abs(fg + lie_poisson_apply(s, g, f)) / std::max(1.0, std::abs(fg)));
  }
  const Domain dom = Domain::grid(2, 16);
  for (int t = 0; t < trials; ++t) {
    const auto s = random_image_state(dom, rng);
    const auto f = random_image_gradient(dom, rng);
    const auto g = random_image_gradient(dom, rng);
    const double fg = lie_poisson_apply(s, f, g);
    worst = std::max(worst, std::abs(fg + lie_poisson_apply(s, g, f)) / std::max(1.0, std::abs(fg)));
  }
  return worst;
}

}  // namespace metamorph::bracket
