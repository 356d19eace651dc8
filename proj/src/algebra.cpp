#include "metamorph/algebra.hpp"

#include <cmath>
#include <map>

namespace metamorph {

double InertiaOperator::symbol(double k2) const {
  const double base = 1.0 + alpha * alpha * k2;
  return power == 1 ? base : base * base;
}

void InertiaOperator::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("inertia alpha must be >= 0");
  if (power != 1 && power != 2) throw InputError("inertia power must be 1 or 2");
}

// ---- pairings -------------------------------------------------------------

double pair(const OneFormDensity& m, const VectorField& u) {
  require_same_domain(m.domain(), u.domain(), "pair");
  double s = 0.0;
  for (int c = 0; c < m.dim(); ++c) {
    const auto& a = m.component(c);
    const auto& b = u.component(c);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  }
  return s * m.domain().cell_volume();
}

double pair(const ScalarDensity& sigma, const ScalarField& f) {
  require_same_domain(sigma.domain(), f.domain(), "pair");
  double s = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) s += sigma[i] * f[i];
  return s * sigma.domain().cell_volume();
}

double pair(const PointMomentum& m, const PlaneField& u) {
  if (m.dim != u.dim()) throw InputError("pair: dimension mismatch");
  double s = 0.0;
  for (std::size_t b = 0; b < m.size(); ++b) s += m.weights[b].dot(u.value(m.points[b]));
  return s;
}

double pair(const PointMomentum& m, const VectorField& u) {
  if (m.dim != u.dim()) throw InputError("pair: dimension mismatch");
  const GridFieldSampler sampler(u);
  double s = 0.0;
  for (std::size_t b = 0; b < m.size(); ++b) s += m.weights[b].dot(sampler.value(m.points[b]));
  return s;
}

double pair(const Points& covectors, const Points& vectors) {
  if (covectors.size() != vectors.size()) throw InputError("pair: landmark count mismatch");
  double s = 0.0;
  for (std::size_t a = 0; a < covectors.size(); ++a) s += covectors[a].dot(vectors[a]);
  return s;
}

// ---- grid structure --------------------------------------------------------

ScalarField lie_derivative_scalar(const VectorField& u, const ScalarField& f) {
  require_same_domain(u.domain(), f.domain(), "lie_derivative_scalar");
  const auto grad = spectral_gradient(f.domain(), f.values());
  ScalarField out(f.domain());
  for (int c = 0; c < u.dim(); ++c) {
    const auto& uc = u.component(c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= uc[i] * grad[c][i];
  }
  return out;
}

OneFormDensity lie_derivative_oneform_density(const VectorField& xi, const OneFormDensity& m) {
  require_same_domain(xi.domain(), m.domain(), "lie_derivative_oneform_density");
  const Domain& dom = xi.domain();
  auto spectral = Spectral::for_domain(dom);
  const int d = dom.dim;
  const std::size_t n = dom.size();
  // grad_xi[j][a] = d xi_j / d x_a
  std::vector<std::vector<std::vector<double>>> grad_xi(d);
  for (int j = 0; j < d; ++j) grad_xi[j] = spectral_gradient(dom, xi.component(j));

  OneFormDensity out(dom);
  std::vector<double> flux(n);
  for (int i = 0; i < d; ++i) {
    auto& oi = out.component(i);
    // (grad xi)^T M: sum_j d_i xi_j M_j
    for (int j = 0; j < d; ++j) {
      const auto& mj = m.component(j);
      const auto& g = grad_xi[j][i];
      for (std::size_t k = 0; k < n; ++k) oi[k] += g[k] * mj[k];
    }
    // div(M_i xi) = (xi . grad) M_i + M_i div xi
    for (int j = 0; j < d; ++j) {
      const auto& mi = m.component(i);
      const auto& xj = xi.component(j);
      for (std::size_t k = 0; k < n; ++k) flux[k] = mi[k] * xj[k];
      const auto dflux = spectral->derivative(flux, j);
      for (std::size_t k = 0; k < n; ++k) oi[k] += dflux[k];
    }
  }
  return out;
}

VectorField ad(const VectorField& u, const VectorField& v) {
  require_same_domain(u.domain(), v.domain(), "ad");
  const Domain& dom = u.domain();
  const int d = dom.dim;
  const std::size_t n = dom.size();
  VectorField out(dom);
  for (int i = 0; i < d; ++i) {
    const auto gu = spectral_gradient(dom, u.component(i));
    const auto gv = spectral_gradient(dom, v.component(i));
    auto& oi = out.component(i);
    for (int j = 0; j < d; ++j) {
      const auto& vj = v.component(j);
      const auto& uj = u.component(j);
      for (std::size_t k = 0; k < n; ++k) oi[k] += gu[j][k] * vj[k] - gv[j][k] * uj[k];
    }
  }
  return out;
}

OneFormDensity ad_star(const VectorField& u, const OneFormDensity& m) { return lie_derivative_oneform_density(u, m); }

OneFormDensity diamond(const ScalarDensity& sigma, const ScalarField& n) {
  require_same_domain(sigma.domain(), n.domain(), "diamond");
  const auto grad = spectral_gradient(n.domain(), n.values());
  OneFormDensity out(n.domain());
  for (int c = 0; c < n.domain().dim; ++c) {
    auto& oc = out.component(c);
    for (std::size_t i = 0; i < oc.size(); ++i) oc[i] = sigma[i] * grad[c][i];
  }
  return out;
}

ScalarDensity star(const VectorField& u, const ScalarDensity& sigma) {
  require_same_domain(u.domain(), sigma.domain(), "star");
  const Domain& dom = u.domain();
  auto spectral = Spectral::for_domain(dom);
  ScalarDensity out(dom);
  std::vector<double> flux(dom.size());
  for (int c = 0; c < dom.dim; ++c) {
    const auto& uc = u.component(c);
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = sigma[i] * uc[i];
    const auto df = spectral->derivative(flux, c);
    for (std::size_t i = 0; i < flux.size(); ++i) out[i] += df[i];
  }
  return out;
}

VectorField velocity_from_momentum(const OneFormDensity& mu, const InertiaOperator& inertia) {
  inertia.validate();
  auto spectral = Spectral::for_domain(mu.domain());
  VectorField u(mu.domain());
  for (int c = 0; c < mu.dim(); ++c)
    u.component(c) = spectral->apply_symbol(mu.component(c), [&](double k2) { return 1.0 / inertia.symbol(k2); });
  return u;
}

OneFormDensity momentum_from_velocity(const VectorField& u, const InertiaOperator& inertia) {
  inertia.validate();
  auto spectral = Spectral::for_domain(u.domain());
  OneFormDensity m(u.domain());
  for (int c = 0; c < u.dim(); ++c)
    m.component(c) = spectral->apply_symbol(u.component(c), [&](double k2) { return inertia.symbol(k2); });
  return m;
}

// ---- landmark structure ------------------------------------------------------

Points act(const PlaneField& u, const Points& q) {
  Points out;
  out.reserve(q.size());
  for (const auto& x : q) out.push_back(u.value(x));
  return out;
}

Points act_tangent(const PlaneField& u, const Points& q, const Points& v) {
  if (q.size() != v.size()) throw InputError("act_tangent: landmark count mismatch");
  Points out;
  out.reserve(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) out.push_back(u.evaluate(q[a]).jacobian * v[a]);
  return out;
}

PointMomentum diamond(const Points& p, const Points& q) {
  if (p.size() != q.size()) throw InputError("diamond: landmark count mismatch");
  const int d = q.empty() ? 2 : static_cast<int>(q.front().size());
  Points w;
  w.reserve(p.size());
  for (const auto& pa : p) w.push_back(-pa);
  return PointMomentum(d, q, std::move(w));
}

JetFunctional diamond_tangent(const Points& sigma, const Points& q, const Points& nu) {
  if (sigma.size() != q.size() || nu.size() != q.size()) throw InputError("diamond_tangent: landmark count mismatch");
  const int d = q.empty() ? 2 : static_cast<int>(q.front().size());
  JetFunctional j(d);
  for (std::size_t a = 0; a < q.size(); ++a) j.jets.push_back({q[a], Vec::Zero(d), -(sigma[a] * nu[a].transpose())});
  return j;
}

Points star(const PlaneField& u, const Points& sigma, const Points& q) {
  if (sigma.size() != q.size()) throw InputError("star: landmark count mismatch");
  Points out;
  out.reserve(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) out.push_back(u.evaluate(q[a]).jacobian.transpose() * sigma[a]);
  return out;
}

JetFunctional ad_star(const PlaneField& u, const PointMomentum& m) {
  JetFunctional j(m.dim);
  j.jets.reserve(m.size());
  for (std::size_t b = 0; b < m.size(); ++b) {
    const FieldJet e = u.evaluate(m.points[b]);
    // <ad*_u (p delta_y), w> = p . [(grad u) w - (grad w) u](y)
    j.jets.push_back({m.points[b], e.jacobian.transpose() * m.weights[b], -(m.weights[b] * e.value.transpose())});
  }
  return j;
}

PlaneField velocity_from_momentum(const PointMomentum& mu, const Kernel& kernel) {
  kernel.validate();
  return PlaneField::kernel_sum(kernel, mu);
}

Eigen::MatrixXd kernel_matrix(const Points& q, const Kernel& kernel) {
  const int k = static_cast<int>(q.size());
  const int d = k == 0 ? 1 : static_cast<int>(q.front().size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k * d, k * d);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      const double kab = kernel(q[a] - q[b]);
      for (int i = 0; i < d; ++i) out(a * d + i, b * d + i) = kab;
    }
  return out;
}

double momentum_norm(const PointMomentum& m, const Kernel& kernel) {
  const PlaneField u = PlaneField::kernel_sum(kernel, m);
  double best = 0.0;
  for (const auto& y : m.points) best = std::max(best, u.value(y).norm());
  return best;
}

double momentum_norm(const OneFormDensity& m, const InertiaOperator& inertia) {
  return velocity_from_momentum(m, inertia).max_norm();
}

PointMomentum merged(const PointMomentum& m) {
  PointMomentum out;
  out.dim = m.dim;
  for (std::size_t b = 0; b < m.size(); ++b) {
    bool found = false;
    for (std::size_t c = 0; c < out.size(); ++c) {
      if (out.points[c] == m.points[b]) {
        out.weights[c] += m.weights[b];
        found = true;
        break;
      }
    }
    if (!found) {
      out.points.push_back(m.points[b]);
      out.weights.push_back(m.weights[b]);
    }
  }
  PointMomentum pruned;
  pruned.dim = m.dim;
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (out.weights[c].squaredNorm() == 0.0) continue;
    pruned.points.push_back(out.points[c]);
    pruned.weights.push_back(out.weights[c]);
  }
  return pruned;
}

PointMomentum concat(const PointMomentum& a, const PointMomentum& b) {
  if (a.dim != b.dim) throw InputError("concat: dimension mismatch");
  PointMomentum out = a;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  out.weights.insert(out.weights.end(), b.weights.begin(), b.weights.end());
  return out;
}

}  // namespace metamorph
