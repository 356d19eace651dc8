#pragma once

#include "metamorph/fields.hpp"
#include "metamorph/types.hpp"

#include <array>
#include <vector>

namespace metamorph {

/// Gaussian RKHS kernel K(r) = c exp(-|r|^2 / (2 lambda^2)).
struct Kernel {
  double length_scale = 1.0;
  double amplitude = 1.0;

  double operator()(const Vec& r) const;
  Vec gradient(const Vec& r) const;
  Mat hessian(const Vec& r) const;
  void validate() const;
};

/// Distributional 1-form density sum_b p_b delta(x - y_b).
struct PointMomentum {
  int dim = 2;
  Points points;
  Points weights;

  PointMomentum() = default;
  PointMomentum(int d, Points pts, Points w);
  std::size_t size() const { return points.size(); }
  bool all_finite() const;
};

/// Smooth vector field on the plane: an affine part c + A x plus Gaussian bumps
/// sum_j K_j(x - z_j) w_j. Covers kernel velocities, noise modes and test fields.
class PlaneField {
 public:
  struct Bump {
    Vec center;
    Vec weight;
    Kernel shape;
  };

  explicit PlaneField(int dim = 2) : dim_(dim), constant_(Vec::Zero(dim)), linear_(Mat::Zero(dim, dim)) {}
  static PlaneField constant(const Vec& c);
  static PlaneField affine(const Vec& c, const Mat& a);
  static PlaneField bump(const Vec& center, const Vec& weight, const Kernel& shape);
  /// u(x) = sum_b K(x - y_b) p_b
  static PlaneField kernel_sum(const Kernel& kernel, const PointMomentum& source);

  int dim() const { return dim_; }
  const Vec& constant_part() const { return constant_; }
  const Mat& linear_part() const { return linear_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  /// this += scale * other
  PlaneField& add(const PlaneField& other, double scale = 1.0);
  PlaneField& add_bump(const Vec& center, const Vec& weight, const Kernel& shape);
  PlaneField scaled(double s) const;

  Vec value(const Vec& x) const;
  FieldJet evaluate(const Vec& x) const;
  /// H[i](j, k) = d^2 v_i / dx_j dx_k
  std::array<Mat, 2> hessian(const Vec& x) const;

 private:
  int dim_;
  Vec constant_;
  Mat linear_;
  std::vector<Bump> bumps_;
};

/// A linear functional on smooth vector fields made of point masses and
/// first-order dipoles:  <J, w> = sum_j mass_j . w(y_j) + sum_j D_j(i,k) d_k w_i(y_j).
/// Rates of distributional momenta live here.
struct PointJet {
  Vec point;
  Vec mass;
  Mat dipole;
};

struct JetFunctional {
  int dim = 2;
  std::vector<PointJet> jets;

  explicit JetFunctional(int d = 2) : dim(d) {}
  static JetFunctional from_momentum(const PointMomentum& m);
  JetFunctional& add(const JetFunctional& other, double scale = 1.0);
  double pair(const PlaneField& w) const;
};

}  // namespace metamorph
