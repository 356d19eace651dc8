#include "metamorph/stochastics.hpp"

#include <cmath>
#include <random>

namespace metamorph {

Scheme parse_scheme(const std::string& name) {
  if (name == "deterministic_rk4") return Scheme::deterministic_rk4;
  if (name == "stratonovich_heun") return Scheme::stratonovich_heun;
  if (name == "ito_euler_maruyama") return Scheme::ito_euler_maruyama;
  throw InputError("unknown scheme '" + name + "'");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::deterministic_rk4:
      return "deterministic_rk4";
    case Scheme::stratonovich_heun:
      return "stratonovich_heun";
    case Scheme::ito_euler_maruyama:
      return "ito_euler_maruyama";
  }
  return "unknown";
}

// ---- noise basis ---------------------------------------------------------------

NoiseBasis NoiseBasis::gaussian_bumps(const Points& centers, const std::vector<int>& directions,
                                      const std::vector<double>& amplitudes, double length_scale) {
  if (directions.size() != centers.size() || amplitudes.size() != centers.size())
    throw InputError("noise: centers, directions and amplitudes must have equal length");
  const Kernel shape{length_scale, 1.0};
  shape.validate();
  NoiseBasis basis;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const int d = static_cast<int>(centers[i].size());
    if (directions[i] < 0 || directions[i] >= d) throw InputError("noise: direction index out of range");
    basis.plane.push_back(PlaneField::bump(centers[i], amplitudes[i] * unit_vec(d, directions[i]), shape));
  }
  return basis;
}

NoiseBasis NoiseBasis::constant(const Points& vectors) {
  NoiseBasis basis;
  for (const auto& v : vectors) basis.plane.push_back(PlaneField::constant(v));
  return basis;
}

NoiseBasis NoiseBasis::constant(const Domain& domain, const Points& vectors) {
  NoiseBasis basis;
  for (const auto& v : vectors) {
    if (v.size() != domain.dim) throw InputError("noise: vector dimension does not match domain");
    basis.grid.push_back(VectorField::sample(domain, [&](const Vec&) { return v; }));
  }
  return basis;
}

NoiseBasis NoiseBasis::fourier(const Domain& domain, std::size_t count, const std::vector<double>& amplitudes) {
  if (!amplitudes.empty() && amplitudes.size() != 1 && amplitudes.size() != count)
    throw InputError("noise: amplitudes must have length 1 or J");
  const double w = two_pi / domain.length;
  NoiseBasis basis;
  for (std::size_t m = 0; m < count; ++m) {
    const double a = amplitudes.empty() ? 1.0 : amplitudes[amplitudes.size() == 1 ? 0 : m];
    const bool use_sin = m % 2 == 1;
    int axis = 0, along = 0;
    std::size_t k = 0;
    if (domain.dim == 1) {
      k = m / 2 + 1;
    } else {
      axis = static_cast<int>((m / 2) % 2);
      along = 1 - axis;
      k = m / 4 + 1;
    }
    basis.grid.push_back(VectorField::sample(domain, [&](const Vec& x) {
      const double ph = w * static_cast<double>(k) * x(along);
      return Vec(a * (use_sin ? std::sin(ph) : std::cos(ph)) * unit_vec(domain.dim, axis));
    }));
  }
  return basis;
}

// ---- Brownian paths ------------------------------------------------------------

BrownianPath::BrownianPath(std::uint64_t master_seed, std::uint64_t index, std::size_t modes, double dt,
                           std::size_t steps)
    : modes_(modes), steps_(steps), dt_(dt), dw_(modes * steps) {
  if (!(dt > 0.0)) throw InputError("dt must be > 0");
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (double& v : dw_) v = normal(rng);
}

BrownianPath BrownianPath::zero(std::size_t modes, double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw InputError("dt must be > 0");
  BrownianPath p;
  p.modes_ = modes;
  p.steps_ = steps;
  p.dt_ = dt;
  p.dw_.assign(modes * steps, 0.0);
  return p;
}

std::span<const double> BrownianPath::increment(std::size_t step) const {
  return std::span<const double>(dw_.data() + step * modes_, modes_);
}

BrownianPath BrownianPath::coarsened(std::size_t factor) const {
  if (factor == 0 || steps_ % factor != 0) throw InputError("brownian path: coarsening factor must divide the step count");
  BrownianPath p;
  p.modes_ = modes_;
  p.steps_ = steps_ / factor;
  p.dt_ = dt_ * static_cast<double>(factor);
  p.dw_.assign(p.modes_ * p.steps_, 0.0);
  for (std::size_t k = 0; k < steps_; ++k)
    for (std::size_t i = 0; i < modes_; ++i) p.dw_[(k / factor) * modes_ + i] += dw_[k * modes_ + i];
  return p;
}

std::vector<double> BrownianPath::terminal() const {
  std::vector<double> w(modes_, 0.0);
  for (std::size_t k = 0; k < steps_; ++k)
    for (std::size_t i = 0; i < modes_; ++i) w[i] += dw_[k * modes_ + i];
  return w;
}

// ---- transport increments -------------------------------------------------------

namespace {

PlaneField plane_transport(PlaneField u, const NoiseBasis& noise, double dt, std::span<const double> dw) {
  if (dw.size() != noise.plane.size()) throw InputError("noise increment count does not match J");
  PlaneField out = u.scaled(dt);
  for (std::size_t i = 0; i < dw.size(); ++i) out.add(noise.plane[i], dw[i]);
  return out;
}

VectorField grid_transport(VectorField u, const NoiseBasis& noise, double dt, std::span<const double> dw) {
  if (dw.size() != noise.grid.size()) throw InputError("noise increment count does not match J");
  u *= dt;
  for (std::size_t i = 0; i < dw.size(); ++i) u.axpy(dw[i], noise.grid[i]);
  return u;
}

}  // namespace

PlaneField transport_velocity_increment(const LandmarkState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw) {
  return plane_transport(velocity(s, spec), noise, dt, dw);
}

PlaneField transport_velocity_increment(const LandmarkUntangledState& s, const LagrangianSpec& spec,
                                        const NoiseBasis& noise, double dt, std::span<const double> dw) {
  return plane_transport(velocity(s, spec), noise, dt, dw);
}

VectorField transport_velocity_increment(const ImageState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                         double dt, std::span<const double> dw) {
  return grid_transport(velocity(s, spec), noise, dt, dw);
}

VectorField transport_velocity_increment(const ImageUntangledState& s, const LagrangianSpec& spec,
                                         const NoiseBasis& noise, double dt, std::span<const double> dw) {
  return grid_transport(velocity(s, spec), noise, dt, dw);
}

// ---- Ito corrections -----------------------------------------------------------

namespace {

// For a point x carrying a covector p under transport by xi the diffusion is
// b(x, p) = (xi(x), -grad xi(x)^T p); returns 1/2 (Db) b for both parts.
std::pair<Vec, Vec> pair_correction(const PlaneField& xi, const Vec& x, const Vec& p) {
  const FieldJet e = xi.evaluate(x);
  const auto h = xi.hessian(x);
  Vec cp = e.jacobian.transpose() * (e.jacobian.transpose() * p);
  for (int i = 0; i < static_cast<int>(p.size()); ++i) cp -= p(i) * (h[i] * e.value);
  return {0.5 * (e.jacobian * e.value), 0.5 * cp};
}

void landmark_correction(const PointMomentum& support, const Points& sigma, const Points& q, const NoiseBasis& noise,
                         LandmarkRate& rate) {
  const int d = support.dim;
  rate.mu = JetFunctional(d);
  rate.support_velocity = zero_points(d, support.size());
  rate.support_mass = zero_points(d, support.size());
  rate.sigma = zero_points(d, q.size());
  rate.q = zero_points(d, q.size());
  for (const PlaneField& xi : noise.plane) {
    for (std::size_t b = 0; b < support.size(); ++b) {
      const auto [cx, cp] = pair_correction(xi, support.points[b], support.weights[b]);
      rate.support_velocity[b] += cx;
      rate.support_mass[b] += cp;
    }
    for (std::size_t a = 0; a < q.size(); ++a) {
      const auto [cx, cp] = pair_correction(xi, q[a], sigma[a]);
      rate.q[a] += cx;
      rate.sigma[a] += cp;
    }
  }
}

ImageRate image_correction(const OneFormDensity& m, const ScalarDensity& sigma, const ScalarField& n,
                           const NoiseBasis& noise) {
  ImageRate rate{OneFormDensity(n.domain()), ScalarDensity(n.domain()), ScalarField(n.domain())};
  for (const VectorField& xi : noise.grid) {
    rate.mu.axpy(0.5, lie_derivative_oneform_density(xi, lie_derivative_oneform_density(xi, m)));
    rate.sigma += 0.5 * star(xi, star(xi, sigma));
    rate.n += 0.5 * lie_derivative_scalar(xi, lie_derivative_scalar(xi, n));
  }
  return rate;
}

}  // namespace

LandmarkRate ito_drift_correction(const LandmarkState& s, const NoiseBasis& noise) {
  LandmarkRate rate;
  landmark_correction(s.mu, s.sigma, s.q, noise, rate);
  return rate;
}

LandmarkRate ito_drift_correction(const LandmarkUntangledState& s, const NoiseBasis& noise) {
  LandmarkRate rate;
  landmark_correction(s.M, s.sigma, s.q, noise, rate);
  return rate;
}

ImageRate ito_drift_correction(const ImageState& s, const NoiseBasis& noise) {
  return image_correction(s.mu, s.sigma, s.n, noise);
}

ImageRate ito_drift_correction(const ImageUntangledState& s, const NoiseBasis& noise) {
  return image_correction(s.M, s.sigma, s.n, noise);
}

double stochastic_hamiltonian_increment(const LandmarkState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw) {
  if (dw.size() != noise.plane.size()) throw InputError("noise increment count does not match J");
  double h = hamiltonian(s, spec) * dt;
  for (std::size_t i = 0; i < dw.size(); ++i) h += pair(s.mu, noise.plane[i]) * dw[i];
  return h;
}

double stochastic_hamiltonian_increment(const ImageState& s, const LagrangianSpec& spec, const NoiseBasis& noise,
                                        double dt, std::span<const double> dw) {
  if (dw.size() != noise.grid.size()) throw InputError("noise increment count does not match J");
  double h = hamiltonian(s, spec) * dt;
  for (std::size_t i = 0; i < dw.size(); ++i) h += pair(s.mu, noise.grid[i]) * dw[i];
  return h;
}

// ---- tracers -------------------------------------------------------------------

TracerCloud TracerCloud::at(const Points& labels) {
  if (labels.empty()) throw InputError("tracer cloud needs at least one point");
  TracerCloud c;
  c.labels = labels;
  c.x = labels;
  const int d = static_cast<int>(labels.front().size());
  c.F.assign(labels.size(), Mat::Identity(d, d));
  return c;
}

namespace {

template <class Field>
TracerCloud heun_tracers(const TracerCloud& cloud, const Field& start, const Field& end) {
  TracerCloud out = cloud;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    const FieldJet e0 = start.evaluate(cloud.x[j]);
    const Vec xp = cloud.x[j] + e0.value;
    const Mat fp = cloud.F[j] + e0.jacobian * cloud.F[j];
    const FieldJet e1 = end.evaluate(xp);
    out.x[j] = cloud.x[j] + 0.5 * (e0.value + e1.value);
    out.F[j] = cloud.F[j] + 0.5 * (e0.jacobian * cloud.F[j] + e1.jacobian * fp);
    if (!out.x[j].allFinite() || !out.F[j].allFinite()) throw NumericalError("non-finite tracer");
  }
  return out;
}

}  // namespace

TracerCloud advance_tracers(const TracerCloud& cloud, const PlaneField& transport_start,
                            const PlaneField& transport_end) {
  return heun_tracers(cloud, transport_start, transport_end);
}

TracerCloud advance_tracers(const TracerCloud& cloud, const VectorField& transport_start,
                            const VectorField& transport_end) {
  return heun_tracers(cloud, GridFieldSampler(transport_start), GridFieldSampler(transport_end));
}

}  // namespace metamorph
