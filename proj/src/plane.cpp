#include "metamorph/plane.hpp"

#include <cmath>

namespace metamorph {

double Kernel::operator()(const Vec& r) const {
  return amplitude * std::exp(-r.squaredNorm() / (2.0 * length_scale * length_scale));
}

Vec Kernel::gradient(const Vec& r) const {
  const double l2 = length_scale * length_scale;
  return -(*this)(r) / l2 * r;
}

Mat Kernel::hessian(const Vec& r) const {
  const double l2 = length_scale * length_scale;
  const double k = (*this)(r);
  const int d = static_cast<int>(r.size());
  return k * (r * r.transpose() / (l2 * l2) - Mat::Identity(d, d) / l2);
}

void Kernel::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw InputError("kernel length_scale must be > 0");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw InputError("kernel amplitude must be > 0");
}

PointMomentum::PointMomentum(int d, Points pts, Points w) : dim(d), points(std::move(pts)), weights(std::move(w)) {
  if (points.size() != weights.size()) throw InputError("point momentum: points/weights size mismatch");
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].size() != d || weights[i].size() != d) throw InputError("point momentum: wrong vector dimension");
}

bool PointMomentum::all_finite() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (!points[i].allFinite() || !weights[i].allFinite()) return false;
  return true;
}

PlaneField PlaneField::constant(const Vec& c) {
  PlaneField f(static_cast<int>(c.size()));
  f.constant_ = c;
  return f;
}

PlaneField PlaneField::affine(const Vec& c, const Mat& a) {
  if (a.rows() != c.size() || a.cols() != c.size()) throw InputError("plane field affine: dimension mismatch");
  PlaneField f(static_cast<int>(c.size()));
  f.constant_ = c;
  f.linear_ = a;
  return f;
}

PlaneField PlaneField::bump(const Vec& center, const Vec& weight, const Kernel& shape) {
  PlaneField f(static_cast<int>(center.size()));
  f.add_bump(center, weight, shape);
  return f;
}

PlaneField PlaneField::kernel_sum(const Kernel& kernel, const PointMomentum& source) {
  PlaneField f(source.dim);
  f.bumps_.reserve(source.size());
  for (std::size_t b = 0; b < source.size(); ++b) f.bumps_.push_back({source.points[b], source.weights[b], kernel});
  return f;
}

PlaneField& PlaneField::add(const PlaneField& other, double scale) {
  if (other.dim_ != dim_) throw InputError("plane field add: dimension mismatch");
  constant_ += scale * other.constant_;
  linear_ += scale * other.linear_;
  for (const auto& b : other.bumps_) bumps_.push_back({b.center, scale * b.weight, b.shape});
  return *this;
}

PlaneField& PlaneField::add_bump(const Vec& center, const Vec& weight, const Kernel& shape) {
  if (center.size() != dim_ || weight.size() != dim_) throw InputError("plane field bump: dimension mismatch");
  bumps_.push_back({center, weight, shape});
  return *this;
}

PlaneField PlaneField::scaled(double s) const {
  PlaneField f(dim_);
  f.add(*this, s);
  return f;
}

Vec PlaneField::value(const Vec& x) const {
  Vec v = constant_ + linear_ * x;
  for (const auto& b : bumps_) v += b.shape(x - b.center) * b.weight;
  return v;
}

FieldJet PlaneField::evaluate(const Vec& x) const {
  FieldJet jet{constant_ + linear_ * x, linear_};
  for (const auto& b : bumps_) {
    const Vec r = x - b.center;
    const double l2 = b.shape.length_scale * b.shape.length_scale;
    const double k = b.shape(r);
    jet.value += k * b.weight;
    // d/dx_j [K(r) w_i] = -K r_j / l^2 w_i
    jet.jacobian -= (k / l2) * b.weight * r.transpose();
  }
  return jet;
}

std::array<Mat, 2> PlaneField::hessian(const Vec& x) const {
  std::array<Mat, 2> h{Mat::Zero(dim_, dim_), Mat::Zero(dim_, dim_)};
  for (const auto& b : bumps_) {
    const Mat hk = b.shape.hessian(x - b.center);
    for (int i = 0; i < dim_; ++i) h[i] += b.weight(i) * hk;
  }
  return h;
}

JetFunctional JetFunctional::from_momentum(const PointMomentum& m) {
  JetFunctional j(m.dim);
  j.jets.reserve(m.size());
  for (std::size_t b = 0; b < m.size(); ++b) j.jets.push_back({m.points[b], m.weights[b], Mat::Zero(m.dim, m.dim)});
  return j;
}

JetFunctional& JetFunctional::add(const JetFunctional& other, double scale) {
  if (other.dim != dim) throw InputError("jet functional add: dimension mismatch");
  for (const auto& j : other.jets) jets.push_back({j.point, scale * j.mass, scale * j.dipole});
  return *this;
}

double JetFunctional::pair(const PlaneField& w) const {
  double s = 0.0;
  for (const auto& j : jets) {
    const FieldJet e = w.evaluate(j.point);
    s += j.mass.dot(e.value) + (j.dipole.array() * e.jacobian.array()).sum();
  }
  return s;
}

}  // namespace metamorph
