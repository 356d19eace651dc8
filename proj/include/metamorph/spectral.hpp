#pragma once

#include "metamorph/types.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace metamorph {

/// FFT-backed spectral calculus on a periodic grid. Instances are immutable
/// after construction and shared through for_domain(); all methods are safe
/// to call concurrently.
///
/// Nyquist modes are discarded by differentiation and interpolation, which
/// makes every first-derivative matrix exactly skew-symmetric under the
/// Riemann-sum pairing.
class Spectral {
 public:
  explicit Spectral(const Domain& domain);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  static std::shared_ptr<const Spectral> for_domain(const Domain& domain);

  const Domain& domain() const { return domain_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  std::vector<std::complex<double>> forward(std::span<const double> f) const;
  /// Inverse transform including the 1/N normalisation.
  std::vector<double> inverse(std::vector<std::complex<double>> coeffs) const;

  /// Wavenumber along an axis for each complex coefficient; zero on that axis' Nyquist plane.
  const std::vector<double>& derivative_symbol(int axis) const { return dk_[axis]; }
  /// |k|^2 per complex coefficient (Nyquist included).
  const std::vector<double>& k_squared() const { return k2_; }
  /// True for coefficients on any Nyquist plane.
  bool is_nyquist(std::size_t c) const { return nyquist_[c] != 0; }

  std::vector<double> derivative(std::span<const double> f, int axis) const;

  /// Multiply each mode by symbol(|k|^2).
  template <class Symbol>
  std::vector<double> apply_symbol(std::span<const double> f, Symbol&& symbol) const {
    auto c = forward(f);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(k2_[i]);
    return inverse(std::move(c));
  }

 private:
  friend class TrigInterpolant;

  Domain domain_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  std::vector<double> dk_[2];
  std::vector<double> k2_;
  std::vector<char> nyquist_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Band-limited trigonometric interpolant of grid samples, evaluable anywhere.
class TrigInterpolant {
 public:
  TrigInterpolant(const Spectral& spectral, std::span<const double> f);

  double value(const Vec& x) const;
  /// Value and gradient at x.
  std::pair<double, Vec> value_and_gradient(const Vec& x) const;

 private:
  Domain domain_;
  std::vector<std::complex<double>> coeffs_;
  std::vector<double> wavenumbers_;  // signed physical wavenumber per index along an axis
  int half_ = 0;
};

}  // namespace metamorph
