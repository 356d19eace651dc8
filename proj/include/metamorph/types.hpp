#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace metamorph {

// Small spatial vectors and matrices. Landmarks and grids live in d <= 2.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using Points = std::vector<Vec>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Invalid configuration or mismatched arguments (CLI exit code 1).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite or otherwise broken numerical state (CLI exit code 2).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Periodic uniform grid on [0, length)^dim, or the unbounded plane used by
/// landmark-only runs (periodic == false, no grid).
struct Domain {
  int dim = 1;
  int points = 64;
  double length = two_pi;
  bool periodic = true;

  static Domain grid(int dim, int points, double length = two_pi);
  static Domain plane(int dim);

  bool has_grid() const { return periodic; }
  std::size_t size() const;
  double spacing() const { return length / points; }
  double cell_volume() const;
  /// Physical coordinates of a flattened node index (row-major, axis 0 slowest).
  Vec node(std::size_t index) const;
  void validate() const;

  friend bool operator==(const Domain&, const Domain&) = default;
};

void require_same_domain(const Domain& a, const Domain& b, const char* op);

inline Vec zero_vec(int dim) { return Vec::Zero(dim); }
inline Vec unit_vec(int dim, int axis) {
  Vec v = Vec::Zero(dim);
  v(axis) = 1.0;
  return v;
}
inline Points zero_points(int dim, std::size_t count) { return Points(count, Vec::Zero(dim)); }

}  // namespace metamorph
