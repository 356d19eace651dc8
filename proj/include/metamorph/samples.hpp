#pragma once

// Random smooth inputs for the verification suite and the tests.

#include "metamorph/core.hpp"

#include <cmath>
#include <random>

namespace metamorph::samples {

/// Band-limited random scalar samples: sum of modes |k_i| <= kmax with
/// normal coefficients. Products of three such fields stay resolved on a
/// 64-point grid when kmax <= 6.
inline std::vector<double> random_trig(const Domain& dom, std::mt19937_64& rng, int kmax = 4, double amp = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(dom.size(), 0.0);
  const double w = two_pi / dom.length;
  if (dom.dim == 1) {
    for (int k = 0; k <= kmax; ++k) {
      const double a = normal(rng) * amp / (1 + k), b = normal(rng) * amp / (1 + k);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = dom.node(i)(0);
        out[i] += a * std::cos(w * k * x) + (k > 0 ? b * std::sin(w * k * x) : 0.0);
      }
    }
    return out;
  }
  for (int k0 = -kmax; k0 <= kmax; ++k0)
    for (int k1 = 0; k1 <= kmax; ++k1) {
      const double a = normal(rng) * amp / (1 + std::abs(k0) + k1), b = normal(rng) * amp / (1 + std::abs(k0) + k1);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec x = dom.node(i);
        const double ph = w * (k0 * x(0) + k1 * x(1));
        out[i] += a * std::cos(ph) + b * std::sin(ph);
      }
    }
  return out;
}

template <class Scalar>
Scalar random_scalar(const Domain& dom, std::mt19937_64& rng, int kmax = 4, double amp = 1.0) {
  return Scalar(dom, random_trig(dom, rng, kmax, amp));
}

template <class Vector>
Vector random_vector(const Domain& dom, std::mt19937_64& rng, int kmax = 4, double amp = 1.0) {
  Vector v(dom);
  for (int c = 0; c < dom.dim; ++c) v.component(c) = random_trig(dom, rng, kmax, amp);
  return v;
}

inline Vec random_vec(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

inline Points random_points(int dim, std::size_t count, std::mt19937_64& rng, double scale = 1.0) {
  Points p;
  for (std::size_t i = 0; i < count; ++i) p.push_back(random_vec(dim, rng, scale));
  return p;
}

inline PointMomentum random_momentum(int dim, std::size_t count, std::mt19937_64& rng) {
  return PointMomentum(dim, random_points(dim, count, rng), random_points(dim, count, rng));
}

/// A few Gaussian bumps plus an affine part.
inline PlaneField random_plane_field(int dim, std::mt19937_64& rng, int bumps = 3) {
  std::uniform_real_distribution<double> width(0.6, 1.5);
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i) a.col(i) = random_vec(dim, rng, 0.3);
  PlaneField f = PlaneField::affine(random_vec(dim, rng, 0.5), a);
  for (int b = 0; b < bumps; ++b) f.add_bump(random_vec(dim, rng), random_vec(dim, rng), Kernel{width(rng), 1.0});
  return f;
}

inline double scale_of(const Points& p) {
  double s = 0.0;
  for (const auto& v : p) s = std::max(s, v.norm());
  return s;
}

}  // namespace metamorph::samples
