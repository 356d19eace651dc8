#include "metamorph/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace metamorph {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double signed_wavenumber(int index, int points, double length) {
  const int k = index <= points / 2 ? index : index - points;
  return two_pi * k / length;
}

}  // namespace

Spectral::Spectral(const Domain& domain) : domain_(domain) {
  domain.validate();
  if (!domain.has_grid()) throw InputError("spectral operators need a periodic grid");
  const int n = domain.points;
  const int half = n / 2 + 1;
  real_size_ = domain.size();
  complex_size_ = domain.dim == 1 ? static_cast<std::size_t>(half) : static_cast<std::size_t>(n) * half;

  dk_[0].assign(complex_size_, 0.0);
  dk_[1].assign(complex_size_, 0.0);
  k2_.assign(complex_size_, 0.0);
  nyquist_.assign(complex_size_, 0);
  if (domain.dim == 1) {
    for (int i = 0; i < half; ++i) {
      const double k = two_pi * i / domain.length;
      k2_[i] = k * k;
      const bool nyq = (i == n / 2);
      dk_[0][i] = nyq ? 0.0 : k;
      nyquist_[i] = nyq;
    }
  } else {
    for (int i0 = 0; i0 < n; ++i0) {
      const double k0 = signed_wavenumber(i0, n, domain.length);
      for (int i1 = 0; i1 < half; ++i1) {
        const double k1 = two_pi * i1 / domain.length;
        const std::size_t c = static_cast<std::size_t>(i0) * half + i1;
        const bool nyq0 = (i0 == n / 2);
        const bool nyq1 = (i1 == n / 2);
        k2_[c] = k0 * k0 + k1 * k1;
        dk_[0][c] = nyq0 ? 0.0 : k0;
        dk_[1][c] = nyq1 ? 0.0 : k1;
        nyquist_[c] = nyq0 || nyq1;
      }
    }
  }

  std::vector<double> rbuf(real_size_);
  std::vector<std::complex<double>> cbuf(complex_size_);
  auto* rp = rbuf.data();
  auto* cp = reinterpret_cast<fftw_complex*>(cbuf.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  if (domain.dim == 1) {
    forward_plan_ = fftw_plan_dft_r2c_1d(n, rp, cp, flags);
    inverse_plan_ = fftw_plan_dft_c2r_1d(n, cp, rp, flags);
  } else {
    forward_plan_ = fftw_plan_dft_r2c_2d(n, n, rp, cp, flags);
    inverse_plan_ = fftw_plan_dft_c2r_2d(n, n, cp, rp, flags);
  }
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("FFTW planning failed");
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::shared_ptr<const Spectral> Spectral::for_domain(const Domain& domain) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const Spectral>> cache;
  const auto key = std::make_tuple(domain.dim, domain.points, domain.length);
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto made = std::make_shared<const Spectral>(domain);
  cache.emplace(key, made);
  return made;
}

std::vector<std::complex<double>> Spectral::forward(std::span<const double> f) const {
  if (f.size() != real_size_) throw InputError("spectral forward: sample count does not match grid");
  std::vector<double> in(f.begin(), f.end());
  std::vector<std::complex<double>> out(complex_size_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> Spectral::inverse(std::vector<std::complex<double>> coeffs) const {
  if (coeffs.size() != complex_size_) throw InputError("spectral inverse: coefficient count mismatch");
  std::vector<double> out(real_size_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(coeffs.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> Spectral::derivative(std::span<const double> f, int axis) const {
  if (axis < 0 || axis >= domain_.dim) throw InputError("derivative axis out of range");
  auto c = forward(f);
  const auto& k = dk_[axis];
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::complex<double>(0.0, k[i]);
  return inverse(std::move(c));
}

TrigInterpolant::TrigInterpolant(const Spectral& spectral, std::span<const double> f)
    : domain_(spectral.domain()), coeffs_(spectral.forward(f)) {
  const int n = domain_.points;
  half_ = n / 2 + 1;
  wavenumbers_.resize(n);
  for (int i = 0; i < n; ++i) wavenumbers_[i] = signed_wavenumber(i, n, domain_.length);
  const double scale = 1.0 / static_cast<double>(spectral.real_size());
  for (std::size_t c = 0; c < coeffs_.size(); ++c) coeffs_[c] = spectral.is_nyquist(c) ? 0.0 : coeffs_[c] * scale;
}

double TrigInterpolant::value(const Vec& x) const { return value_and_gradient(x).first; }

std::pair<double, Vec> TrigInterpolant::value_and_gradient(const Vec& x) const {
  const int n = domain_.points;
  Vec grad = Vec::Zero(domain_.dim);
  double val = 0.0;
  if (domain_.dim == 1) {
    for (int k = 0; k < half_; ++k) {
      const double w = (k == 0) ? 1.0 : 2.0;
      const double kk = wavenumbers_[k];
      const auto e = std::polar(1.0, kk * x(0));
      const auto term = coeffs_[k] * e;
      val += w * term.real();
      grad(0) += w * (term * std::complex<double>(0.0, kk)).real();
    }
    return {val, grad};
  }
  std::vector<std::complex<double>> e1(half_);
  for (int k = 0; k < half_; ++k) e1[k] = std::polar(1.0, wavenumbers_[k] * x(1));
  for (int i0 = 0; i0 < n; ++i0) {
    const double k0 = wavenumbers_[i0];
    const auto e0 = std::polar(1.0, k0 * x(0));
    std::complex<double> row(0.0), row_d1(0.0);
    const std::complex<double>* c = coeffs_.data() + static_cast<std::size_t>(i0) * half_;
    for (int i1 = 0; i1 < half_; ++i1) {
      const double w = (i1 == 0) ? 1.0 : 2.0;
      const auto t = c[i1] * e1[i1] * w;
      row += t;
      row_d1 += t * std::complex<double>(0.0, wavenumbers_[i1]);
    }
    const auto r = row * e0;
    val += r.real();
    grad(0) += (r * std::complex<double>(0.0, k0)).real();
    grad(1) += (row_d1 * e0).real();
  }
  return {val, grad};
}

}  // namespace metamorph
