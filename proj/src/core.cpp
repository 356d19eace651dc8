#include "metamorph/core.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace metamorph {

namespace {

int points_dim(const Points& q, int fallback = 2) { return q.empty() ? fallback : static_cast<int>(q.front().size()); }

void require_count(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(std::string(what) + ": landmark count mismatch");
}

bool finite_points(const Points& p) {
  for (const auto& v : p)
    if (!v.allFinite()) return false;
  return true;
}

Points scaled(const Points& p, double s) {
  Points out = p;
  for (auto& v : out) v *= s;
  return out;
}

Vec reference_point(const LagrangianSpec& spec, std::size_t a, int dim) {
  if (spec.landmark_reference.empty()) return Vec::Zero(dim);
  return spec.landmark_reference[a];
}

ScalarField image_reference(const LagrangianSpec& spec, const Domain& domain) {
  if (spec.image_reference) {
    require_same_domain(spec.image_reference->domain(), domain, "potential reference");
    return *spec.image_reference;
  }
  return ScalarField(domain);
}

double dot(const Points& a, const Points& b) { return pair(a, b); }

// Realizes the jet of one support point as a (velocity, mass) pair. For a
// point mass moving with velocity v the dipole is p (x) v, so v is recovered
// by least squares whenever p != 0.
Vec dipole_velocity(const PointJet& jet, const Vec& p, const Vec& fallback) {
  const double p2 = p.squaredNorm();
  if (p2 == 0.0) return fallback;
  return jet.dipole.transpose() * p / p2;
}

}  // namespace

void LagrangianSpec::validate() const {
  kernel.validate();
  inertia.validate();
  if (!(sigma_m_sq > 0.0) || !std::isfinite(sigma_m_sq)) throw InputError("sigma_m_sq must be > 0");
  if (!(potential_weight >= 0.0) || !std::isfinite(potential_weight))
    throw InputError("potential_weight must be >= 0");
}

// ---- states ------------------------------------------------------------------

LandmarkState LandmarkState::from_parts(double t, const PointMomentum& mu, const Points& sigma, const Points& q) {
  require_count(sigma.size(), q.size(), "landmark state");
  const int d = mu.dim;
  LandmarkState s;
  s.t = t;
  s.sigma = sigma;
  s.q = q;
  const PointMomentum free = merged(concat(mu, PointMomentum(d, q, scaled(sigma, -1.0))));
  s.mu = PointMomentum(d, q, sigma);
  s.anchor.resize(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) s.anchor[a] = static_cast<int>(a);
  for (std::size_t b = 0; b < free.size(); ++b) {
    s.mu.points.push_back(free.points[b]);
    s.mu.weights.push_back(free.weights[b]);
    s.anchor.push_back(-1);
  }
  s.check();
  return s;
}

LandmarkState LandmarkState::zero_level(const Points& sigma, const Points& q, double t) {
  return from_parts(t, PointMomentum(points_dim(q), q, sigma), sigma, q);
}

void LandmarkState::check() const {
  require_count(sigma.size(), q.size(), "landmark state");
  if (anchor.size() != mu.size()) throw InputError("landmark state: anchor list does not match support");
  for (int a : anchor)
    if (a < -1 || a >= static_cast<int>(q.size())) throw InputError("landmark state: bad anchor index");
  for (std::size_t a = 0; a < q.size(); ++a)
    if (q[a].size() != mu.dim || sigma[a].size() != mu.dim) throw InputError("landmark state: dimension mismatch");
}

bool LandmarkState::finite() const { return mu.all_finite() && finite_points(sigma) && finite_points(q); }

void LandmarkUntangledState::check() const {
  require_count(sigma.size(), q.size(), "landmark state");
  for (std::size_t a = 0; a < q.size(); ++a)
    if (q[a].size() != M.dim || sigma[a].size() != M.dim) throw InputError("landmark state: dimension mismatch");
}

bool LandmarkUntangledState::finite() const { return M.all_finite() && finite_points(sigma) && finite_points(q); }

ImageState ImageState::zero_level(const ScalarDensity& sigma, const ScalarField& n, double t) {
  ImageState s{t, -diamond(sigma, n), sigma, n};
  s.check();
  return s;
}

void ImageState::check() const {
  require_same_domain(mu.domain(), n.domain(), "image state");
  require_same_domain(sigma.domain(), n.domain(), "image state");
}

bool ImageState::finite() const { return mu.all_finite() && sigma.all_finite() && n.all_finite(); }

void ImageUntangledState::check() const {
  require_same_domain(M.domain(), n.domain(), "image state");
  require_same_domain(sigma.domain(), n.domain(), "image state");
}

bool ImageUntangledState::finite() const { return M.all_finite() && sigma.all_finite() && n.all_finite(); }

// ---- conversions -------------------------------------------------------------

LandmarkUntangledState untangle(const LandmarkState& s) { return {s.t, total_momentum(s), s.sigma, s.q}; }

LandmarkState tangle(const LandmarkUntangledState& s) {
  return LandmarkState::from_parts(s.t, concat(s.M, PointMomentum(s.M.dim, s.q, s.sigma)), s.sigma, s.q);
}

ImageUntangledState untangle(const ImageState& s) { return {s.t, total_momentum(s), s.sigma, s.n}; }

ImageState tangle(const ImageUntangledState& s) { return {s.t, s.M - diamond(s.sigma, s.n), s.sigma, s.n}; }

// ---- energies ----------------------------------------------------------------

PlaneField velocity(const LandmarkState& s, const LagrangianSpec& spec) {
  return velocity_from_momentum(s.mu, spec.kernel);
}

PlaneField velocity(const LandmarkUntangledState& s, const LagrangianSpec& spec) {
  return velocity_from_momentum(concat(s.M, PointMomentum(s.M.dim, s.q, s.sigma)), spec.kernel);
}

VectorField velocity(const ImageState& s, const LagrangianSpec& spec) {
  return velocity_from_momentum(s.mu, spec.inertia);
}

VectorField velocity(const ImageUntangledState& s, const LagrangianSpec& spec) {
  return velocity_from_momentum(s.M - diamond(s.sigma, s.n), spec.inertia);
}

Points template_velocity(const Points& sigma, const LagrangianSpec& spec) { return scaled(sigma, spec.sigma_m_sq); }

ScalarField template_velocity(const ScalarDensity& sigma, const LagrangianSpec& spec) {
  ScalarField nu(sigma.domain(), sigma.values());
  nu *= spec.sigma_m_sq;
  return nu;
}

double potential(const Points& q, const LagrangianSpec& spec) {
  if (spec.potential_weight == 0.0) return 0.0;
  double v = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a)
    v += (q[a] - reference_point(spec, a, static_cast<int>(q[a].size()))).squaredNorm();
  return 0.5 * spec.potential_weight * v;
}

double potential(const ScalarField& n, const LagrangianSpec& spec) {
  if (spec.potential_weight == 0.0) return 0.0;
  const ScalarField r = n - image_reference(spec, n.domain());
  double v = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) v += r[i] * r[i];
  return 0.5 * spec.potential_weight * v * n.domain().cell_volume();
}

Points potential_gradient(const Points& q, const LagrangianSpec& spec) {
  Points g(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) {
    const int d = static_cast<int>(q[a].size());
    g[a] = spec.potential_weight == 0.0 ? Vec(Vec::Zero(d))
                                        : Vec(spec.potential_weight * (q[a] - reference_point(spec, a, d)));
  }
  return g;
}

ScalarDensity potential_gradient(const ScalarField& n, const LagrangianSpec& spec) {
  ScalarDensity g(n.domain());
  if (spec.potential_weight == 0.0) return g;
  const ScalarField ref = image_reference(spec, n.domain());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = spec.potential_weight * (n[i] - ref[i]);
  return g;
}

LandmarkLegendre legendre(const LagrangianSpec& spec, const Points& v, const Points& nu, const Points& q) {
  spec.validate();
  require_count(v.size(), q.size(), "legendre");
  require_count(nu.size(), q.size(), "legendre");
  const int d = points_dim(q);
  const int k = static_cast<int>(q.size());
  Eigen::VectorXd rhs(k * d);
  for (int a = 0; a < k; ++a) rhs.segment(a * d, d) = v[a];
  const Eigen::VectorXd p = kernel_matrix(q, spec.kernel).completeOrthogonalDecomposition().solve(rhs);
  Points weights(k);
  for (int a = 0; a < k; ++a) weights[a] = p.segment(a * d, d);

  LandmarkLegendre out;
  out.mu = PointMomentum(d, q, weights);
  out.sigma = scaled(nu, 1.0 / spec.sigma_m_sq);
  out.h = 0.5 * dot(weights, v) + 0.5 * spec.sigma_m_sq * dot(out.sigma, out.sigma) + potential(q, spec);
  return out;
}

ImageLegendre legendre(const LagrangianSpec& spec, const VectorField& u, const ScalarField& nu, const ScalarField& n) {
  spec.validate();
  require_same_domain(u.domain(), n.domain(), "legendre");
  require_same_domain(nu.domain(), n.domain(), "legendre");
  ImageLegendre out;
  out.mu = momentum_from_velocity(u, spec.inertia);
  out.sigma = ScalarDensity(nu.domain(), nu.values());
  out.sigma *= 1.0 / spec.sigma_m_sq;
  out.h = 0.5 * pair(out.mu, u) + 0.5 * spec.sigma_m_sq * pair(out.sigma, ScalarField(n.domain(), out.sigma.values())) +
          potential(n, spec);
  return out;
}

double lagrangian(const LagrangianSpec& spec, const Points& v, const Points& nu, const Points& q) {
  const LandmarkLegendre leg = legendre(spec, v, nu, q);
  return 0.5 * dot(leg.mu.weights, v) + 0.5 / spec.sigma_m_sq * dot(nu, nu) - potential(q, spec);
}

double lagrangian(const LagrangianSpec& spec, const VectorField& u, const ScalarField& nu, const ScalarField& n) {
  spec.validate();
  const OneFormDensity mu = momentum_from_velocity(u, spec.inertia);
  double nu2 = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) nu2 += nu[i] * nu[i];
  nu2 *= n.domain().cell_volume();
  return 0.5 * pair(mu, u) + 0.5 / spec.sigma_m_sq * nu2 - potential(n, spec);
}

double hamiltonian(const LandmarkState& s, const LagrangianSpec& spec) {
  const PlaneField u = velocity(s, spec);
  return 0.5 * pair(s.mu, u) + 0.5 * spec.sigma_m_sq * dot(s.sigma, s.sigma) + potential(s.q, spec);
}

double hamiltonian(const LandmarkUntangledState& s, const LagrangianSpec& spec) {
  const PointMomentum mu = concat(s.M, PointMomentum(s.M.dim, s.q, s.sigma));
  const PlaneField u = velocity_from_momentum(mu, spec.kernel);
  return 0.5 * pair(mu, u) + 0.5 * spec.sigma_m_sq * dot(s.sigma, s.sigma) + potential(s.q, spec);
}

double hamiltonian(const ImageState& s, const LagrangianSpec& spec) {
  const VectorField u = velocity(s, spec);
  const double s2 = pair(s.sigma, ScalarField(s.domain(), s.sigma.values()));
  return 0.5 * pair(s.mu, u) + 0.5 * spec.sigma_m_sq * s2 + potential(s.n, spec);
}

double hamiltonian(const ImageUntangledState& s, const LagrangianSpec& spec) { return hamiltonian(tangle(s), spec); }

// ---- right-hand sides --------------------------------------------------------

namespace {

// Shared by both landmark forms: sigma and q rows.
void landmark_template_rows(const Points& sigma, const Points& q, const PlaneField& transport, double dt,
                            const Points& nu, const Points& grad_v, LandmarkRate& rate) {
  rate.sigma = star(transport, sigma, q);
  rate.q = act(transport, q);
  for (std::size_t a = 0; a < q.size(); ++a) {
    rate.sigma[a] = -rate.sigma[a];
    if (dt != 0.0) {
      rate.sigma[a] -= dt * grad_v[a];
      rate.q[a] += dt * nu[a];
    }
  }
}

}  // namespace

LandmarkRate increment(const LandmarkState& s, const LagrangianSpec& spec, const PlaneField& transport, double dt) {
  const int d = s.dim();
  const Points nu = template_velocity(s.sigma, spec);
  const Points grad_v = potential_gradient(s.q, spec);

  LandmarkRate rate;
  rate.mu = JetFunctional(d);
  landmark_template_rows(s.sigma, s.q, transport, dt, nu, grad_v, rate);

  const std::size_t nsupport = s.mu.size();
  rate.mu.jets.reserve(nsupport);
  rate.support_velocity.reserve(nsupport);
  rate.support_mass.reserve(nsupport);
  for (std::size_t b = 0; b < nsupport; ++b) {
    const Vec& y = s.mu.points[b];
    const Vec& p = s.mu.weights[b];
    const FieldJet e = transport.evaluate(y);
    // -ad*_u (p delta_y): mass -(grad u)^T p, dipole p (x) u(y)
    PointJet jet{y, -(e.jacobian.transpose() * p), p * e.value.transpose()};
    Vec fallback = e.value;
    const int a = s.anchor[b];
    if (a >= 0) {
      if (dt != 0.0) {
        // -sigma <> nu and (dh/dn) <> n both live at q_a
        jet.dipole += s.sigma[a] * (dt * nu[a]).transpose();
        jet.mass -= dt * grad_v[a];
      }
      fallback = rate.q[a];
    }
    rate.support_velocity.push_back(dipole_velocity(jet, p, fallback));
    rate.support_mass.push_back(jet.mass);
    rate.mu.jets.push_back(std::move(jet));
  }
  return rate;
}

LandmarkRate increment(const LandmarkUntangledState& s, const LagrangianSpec& spec, const PlaneField& transport,
                       double dt) {
  const int d = s.dim();
  const Points nu = template_velocity(s.sigma, spec);
  const Points grad_v = potential_gradient(s.q, spec);

  LandmarkRate rate;
  rate.mu = JetFunctional(d);
  landmark_template_rows(s.sigma, s.q, transport, dt, nu, grad_v, rate);
  for (std::size_t b = 0; b < s.M.size(); ++b) {
    const FieldJet e = transport.evaluate(s.M.points[b]);
    const Vec& p = s.M.weights[b];
    PointJet jet{s.M.points[b], -(e.jacobian.transpose() * p), p * e.value.transpose()};
    rate.support_velocity.push_back(e.value);
    rate.support_mass.push_back(jet.mass);
    rate.mu.jets.push_back(std::move(jet));
  }
  return rate;
}

namespace {

void image_template_rows(const ScalarDensity& sigma, const ScalarField& n, const LagrangianSpec& spec,
                         const VectorField& transport, double dt, const ScalarDensity& grad_v, ImageRate& rate) {
  rate.sigma = -star(transport, sigma);
  rate.n = lie_derivative_scalar(transport, n);
  if (dt != 0.0) {
    ScalarField nu = template_velocity(sigma, spec);
    nu *= dt;
    rate.n += nu;
    if (spec.potential_weight != 0.0) rate.sigma -= dt * grad_v;
  }
}

}  // namespace

ImageRate increment(const ImageState& s, const LagrangianSpec& spec, const VectorField& transport, double dt) {
  const ScalarDensity grad_v = potential_gradient(s.n, spec);
  ImageRate rate;
  image_template_rows(s.sigma, s.n, spec, transport, dt, grad_v, rate);
  rate.mu = -ad_star(transport, s.mu);
  if (dt != 0.0) {
    rate.mu.axpy(-dt, diamond(s.sigma, template_velocity(s.sigma, spec)));
    if (spec.potential_weight != 0.0) rate.mu.axpy(dt, diamond(grad_v, s.n));
  }
  return rate;
}

ImageRate increment(const ImageUntangledState& s, const LagrangianSpec& spec, const VectorField& transport, double dt) {
  const ScalarDensity grad_v = potential_gradient(s.n, spec);
  ImageRate rate;
  image_template_rows(s.sigma, s.n, spec, transport, dt, grad_v, rate);
  rate.mu = -ad_star(transport, s.M);
  return rate;
}

LandmarkRate rhs_tangled(const LandmarkState& s, const LagrangianSpec& spec) {
  return increment(s, spec, velocity(s, spec), 1.0);
}

ImageRate rhs_tangled(const ImageState& s, const LagrangianSpec& spec) {
  return increment(s, spec, velocity(s, spec), 1.0);
}

LandmarkRate rhs_untangled(const LandmarkUntangledState& s, const LagrangianSpec& spec) {
  return increment(s, spec, velocity(s, spec), 1.0);
}

ImageRate rhs_untangled(const ImageUntangledState& s, const LagrangianSpec& spec) {
  return increment(s, spec, velocity(s, spec), 1.0);
}

namespace {

void advance_points(Points& x, const Points& dx, double h) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * dx[i];
}

void advance_support(PointMomentum& m, const LandmarkRate& rate, double h) {
  if (rate.support_velocity.size() != m.size()) throw InputError("advance: rate does not match support");
  advance_points(m.points, rate.support_velocity, h);
  advance_points(m.weights, rate.support_mass, h);
}

}  // namespace

LandmarkState advanced(const LandmarkState& s, const LandmarkRate& rate, double h) {
  LandmarkState out = s;
  advance_support(out.mu, rate, h);
  advance_points(out.sigma, rate.sigma, h);
  advance_points(out.q, rate.q, h);
  return out;
}

LandmarkUntangledState advanced(const LandmarkUntangledState& s, const LandmarkRate& rate, double h) {
  LandmarkUntangledState out = s;
  advance_support(out.M, rate, h);
  advance_points(out.sigma, rate.sigma, h);
  advance_points(out.q, rate.q, h);
  return out;
}

ImageState advanced(const ImageState& s, const ImageRate& rate, double h) {
  ImageState out = s;
  out.mu.axpy(h, rate.mu);
  out.sigma += h * rate.sigma;
  out.n += h * rate.n;
  return out;
}

ImageUntangledState advanced(const ImageUntangledState& s, const ImageRate& rate, double h) {
  ImageUntangledState out = s;
  out.M.axpy(h, rate.mu);
  out.sigma += h * rate.sigma;
  out.n += h * rate.n;
  return out;
}

// ---- momentum map and residuals ------------------------------------------------

PointMomentum total_momentum(const LandmarkState& s) { return merged(concat(s.mu, diamond(s.sigma, s.q))); }

OneFormDensity total_momentum(const ImageState& s) { return s.mu + diamond(s.sigma, s.n); }

double euler_lagrange_residual(const LandmarkState& s, const LagrangianSpec& spec) {
  return momentum_norm(total_momentum(s), spec.kernel);
}

double euler_lagrange_residual(const ImageState& s, const LagrangianSpec& spec) {
  return momentum_norm(total_momentum(s), spec.inertia);
}

double endpoint_residual(const LandmarkState& s1, const Points& q1, const LagrangianSpec& spec) {
  require_count(q1.size(), s1.q.size(), "endpoint_residual");
  return momentum_norm(merged(concat(s1.mu, diamond(s1.sigma, q1))), spec.kernel);
}

double endpoint_residual(const ImageState& s1, const ScalarField& n1, const LagrangianSpec& spec) {
  return momentum_norm(s1.mu + diamond(s1.sigma, n1), spec.inertia);
}

// ---- Poisson bracket ----------------------------------------------------------

double lie_poisson_apply(const LandmarkState& s, const LandmarkGradient& df, const LandmarkGradient& dh) {
  require_count(df.d_sigma.size(), s.q.size(), "lie_poisson_apply");
  require_count(df.d_n.size(), s.q.size(), "lie_poisson_apply");
  require_count(dh.d_sigma.size(), s.q.size(), "lie_poisson_apply");
  require_count(dh.d_n.size(), s.q.size(), "lie_poisson_apply");
  // mu row: <-ad*_{h_mu} mu - sigma <> h_sigma + h_n <> n, f_mu>
  double v = -ad_star(dh.d_mu, s.mu).pair(df.d_mu);
  v -= diamond_tangent(s.sigma, s.q, dh.d_sigma).pair(df.d_mu);
  v += pair(diamond(dh.d_n, s.q), df.d_mu);
  // sigma row: <-h_mu * sigma - h_n, f_sigma>
  v -= pair(star(dh.d_mu, s.sigma, s.q), df.d_sigma);
  v -= pair(dh.d_n, df.d_sigma);
  // n row: <f_n, h_mu n + h_sigma>
  v += pair(df.d_n, act(dh.d_mu, s.q));
  v += pair(df.d_n, dh.d_sigma);
  return v;
}

double lie_poisson_apply(const ImageState& s, const ImageGradient& df, const ImageGradient& dh) {
  require_same_domain(df.d_mu.domain(), s.domain(), "lie_poisson_apply");
  require_same_domain(dh.d_mu.domain(), s.domain(), "lie_poisson_apply");
  double v = -pair(ad_star(dh.d_mu, s.mu), df.d_mu);
  v -= pair(diamond(s.sigma, dh.d_sigma), df.d_mu);
  v += pair(diamond(dh.d_n, s.n), df.d_mu);
  v -= pair(star(dh.d_mu, s.sigma), df.d_sigma);
  v -= pair(dh.d_n, df.d_sigma);
  v += pair(df.d_n, lie_derivative_scalar(dh.d_mu, s.n));
  v += pair(df.d_n, dh.d_sigma);
  return v;
}

LandmarkGradient hamiltonian_gradient(const LandmarkState& s, const LagrangianSpec& spec) {
  return {velocity(s, spec), template_velocity(s.sigma, spec), potential_gradient(s.q, spec)};
}

ImageGradient hamiltonian_gradient(const ImageState& s, const LagrangianSpec& spec) {
  return {velocity(s, spec), template_velocity(s.sigma, spec), potential_gradient(s.n, spec)};
}

}  // namespace metamorph
