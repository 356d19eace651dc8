#pragma once

#include "metamorph/spectral.hpp"
#include "metamorph/types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace metamorph {

/// Grid-sampled scalar quantity. The tag separates functions (templates n,
/// tangents nu) from densities (cotangents sigma) at the type level.
template <class Tag>
class GridScalar {
 public:
  GridScalar() = default;
  explicit GridScalar(const Domain& domain) : domain_(domain), values_(domain.size(), 0.0) {}
  GridScalar(const Domain& domain, std::vector<double> values) : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.size()) throw InputError("grid scalar: sample count does not match domain");
  }
  static GridScalar sample(const Domain& domain, const std::function<double(const Vec&)>& f) {
    GridScalar s(domain);
    for (std::size_t i = 0; i < s.values_.size(); ++i) s.values_[i] = f(domain.node(i));
    return s;
  }

  const Domain& domain() const { return domain_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  GridScalar& operator+=(const GridScalar& o) {
    require_same_domain(domain_, o.domain_, "scalar +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridScalar& operator-=(const GridScalar& o) {
    require_same_domain(domain_, o.domain_, "scalar -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridScalar& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  friend GridScalar operator+(GridScalar a, const GridScalar& b) { return a += b; }
  friend GridScalar operator-(GridScalar a, const GridScalar& b) { return a -= b; }
  friend GridScalar operator*(double s, GridScalar a) { return a *= s; }
  friend GridScalar operator-(GridScalar a) { return a *= -1.0; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  Domain domain_;
  std::vector<double> values_;
};

/// Grid-sampled d-component quantity: vector fields and covector densities.
template <class Tag>
class GridVector {
 public:
  GridVector() = default;
  explicit GridVector(const Domain& domain)
      : domain_(domain), comps_(static_cast<std::size_t>(domain.dim), std::vector<double>(domain.size(), 0.0)) {}
  static GridVector sample(const Domain& domain, const std::function<Vec(const Vec&)>& f) {
    GridVector g(domain);
    for (std::size_t i = 0; i < domain.size(); ++i) {
      const Vec v = f(domain.node(i));
      for (int c = 0; c < domain.dim; ++c) g.comps_[c][i] = v(c);
    }
    return g;
  }

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  std::size_t size() const { return domain_.size(); }
  std::vector<double>& component(int c) { return comps_[c]; }
  const std::vector<double>& component(int c) const { return comps_[c]; }
  Vec at(std::size_t i) const {
    Vec v(domain_.dim);
    for (int c = 0; c < domain_.dim; ++c) v(c) = comps_[c][i];
    return v;
  }

  GridVector& operator+=(const GridVector& o) {
    require_same_domain(domain_, o.domain_, "vector +=");
    for (int c = 0; c < dim(); ++c)
      for (std::size_t i = 0; i < size(); ++i) comps_[c][i] += o.comps_[c][i];
    return *this;
  }
  GridVector& operator-=(const GridVector& o) {
    require_same_domain(domain_, o.domain_, "vector -=");
    for (int c = 0; c < dim(); ++c)
      for (std::size_t i = 0; i < size(); ++i) comps_[c][i] -= o.comps_[c][i];
    return *this;
  }
  GridVector& operator*=(double a) {
    for (auto& comp : comps_)
      for (double& v : comp) v *= a;
    return *this;
  }
  /// this += a * o
  GridVector& axpy(double a, const GridVector& o) {
    require_same_domain(domain_, o.domain_, "vector axpy");
    for (int c = 0; c < dim(); ++c)
      for (std::size_t i = 0; i < size(); ++i) comps_[c][i] += a * o.comps_[c][i];
    return *this;
  }
  friend GridVector operator+(GridVector a, const GridVector& b) { return a += b; }
  friend GridVector operator-(GridVector a, const GridVector& b) { return a -= b; }
  friend GridVector operator*(double s, GridVector a) { return a *= s; }
  friend GridVector operator-(GridVector a) { return a *= -1.0; }

  bool all_finite() const {
    for (const auto& comp : comps_)
      for (double v : comp)
        if (!std::isfinite(v)) return false;
    return true;
  }
  /// Largest pointwise Euclidean magnitude.
  double max_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, at(i).norm());
    return m;
  }

 private:
  Domain domain_;
  std::vector<std::vector<double>> comps_;
};

struct FunctionTag;
struct DensityTag;
struct VelocityTag;
struct MomentumTag;

using ScalarField = GridScalar<FunctionTag>;     // templates n, tangents nu
using ScalarDensity = GridScalar<DensityTag>;    // cotangents sigma, dh/dn
using VectorField = GridVector<VelocityTag>;     // Eulerian velocities u, xi_i
using OneFormDensity = GridVector<MomentumTag>;  // momenta mu, M

/// Value and Jacobian (J(i, j) = d v_i / d x_j) of a vector field at a point.
struct FieldJet {
  Vec value;
  Mat jacobian;
};

/// Evaluates a grid vector field anywhere by trigonometric interpolation.
class GridFieldSampler {
 public:
  explicit GridFieldSampler(const VectorField& field);
  FieldJet evaluate(const Vec& x) const;
  Vec value(const Vec& x) const { return evaluate(x).value; }

 private:
  int dim_;
  std::vector<TrigInterpolant> comps_;
};

/// Spectral gradient of a scalar sample array, one array per axis.
std::vector<std::vector<double>> spectral_gradient(const Domain& domain, std::span<const double> f);

}  // namespace metamorph
