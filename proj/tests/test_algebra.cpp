#include "doctest.h"
#include "support.hpp"

#include "metamorph/algebra.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace metamorph;
using namespace metamorph::testing;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b, double scale) { return std::abs(a - b) / scale; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Flow of a grid velocity field for time eps, with its Jacobian, by RK4 on
// the trajectory and the variational equation together.
struct FlowPoint {
  Vec x;
  Mat jac;
};

FlowPoint flow(const GridFieldSampler& u, const Vec& x0, double eps, int substeps = 8) {
  const int d = static_cast<int>(x0.size());
  FlowPoint s{x0, Mat::Identity(d, d)};
  const double h = eps / substeps;
  auto rate = [&](const FlowPoint& p) {
    const FieldJet e = u.evaluate(p.x);
    return FlowPoint{e.value, e.jacobian * p.jac};
  };
  auto step = [](const FlowPoint& p, const FlowPoint& k, double c) { return FlowPoint{p.x + c * k.x, p.jac + c * k.jac}; };
  for (int i = 0; i < substeps; ++i) {
    const FlowPoint k1 = rate(s);
    const FlowPoint k2 = rate(step(s, k1, h / 2));
    const FlowPoint k3 = rate(step(s, k2, h / 2));
    const FlowPoint k4 = rate(step(s, k3, h));
    s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.jac += h / 6 * (k1.jac + 2 * k2.jac + 2 * k3.jac + k4.jac);
  }
  return s;
}

// Pullback of a scalar function: f(phi(x)).
std::vector<double> pullback_scalar(const ScalarField& f, const VectorField& u, double eps) {
  const Domain& dom = f.domain();
  const GridFieldSampler sampler(u);
  const TrigInterpolant interp(*Spectral::for_domain(dom), f.values());
  std::vector<double> out(dom.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = interp.value(flow(sampler, dom.node(i), eps).x);
  return out;
}

// Pullback of a 1-form density: (grad phi)^T M(phi(x)) det(grad phi).
OneFormDensity pullback_density(const OneFormDensity& m, const VectorField& xi, double eps) {
  const Domain& dom = m.domain();
  const GridFieldSampler sampler(xi);
  VectorField as_field(dom);
  for (int c = 0; c < dom.dim; ++c) as_field.component(c) = m.component(c);
  const GridFieldSampler msampler(as_field);
  OneFormDensity out(dom);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const FlowPoint p = flow(sampler, dom.node(i), eps);
    const Vec v = p.jac.transpose() * msampler.value(p.x) * p.jac.determinant();
    for (int c = 0; c < dom.dim; ++c) out.component(c)[i] = v(c);
  }
  return out;
}

}  // namespace

TEST_SUITE("algebra") {
  TEST_CASE("pairing examples") {
    const Domain d1 = Domain::grid(1, 64);
    VectorField u = VectorField::sample(d1, [](const Vec&) { return Vec::Ones(1); });
    CHECK(pair(OneFormDensity(d1), u) == 0.0);
    OneFormDensity m = OneFormDensity::sample(d1, [](const Vec&) { return Vec::Ones(1); });
    CHECK(pair(m, u) == doctest::Approx(2 * pi).epsilon(1e-14));

    const PointMomentum lm(2, {Vec::Zero(2)}, {unit_vec(2, 0)});
    CHECK(pair(lm, PlaneField::constant(unit_vec(2, 0))) == doctest::Approx(1.0));
  }

  TEST_CASE("lie derivative of a scalar: closed form and flow oracle") {
    const Domain dom = Domain::grid(1, 64);
    const VectorField one = VectorField::sample(dom, [](const Vec&) { return Vec::Ones(1); });
    const ScalarField f = ScalarField::sample(dom, [](const Vec& x) { return std::sin(x(0)); });
    const ScalarField g = lie_derivative_scalar(one, f);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(-std::cos(dom.node(i)(0))).epsilon(1e-12));
    CHECK(lie_derivative_scalar(VectorField(dom), f).max_abs() == 0.0);

    for (int dim : {1, 2}) {
      const Domain grid = Domain::grid(dim, dim == 1 ? 64 : 16);
      std::mt19937_64 rng(11 + dim);
      const auto u = random_vector<VectorField>(grid, rng, 2, 0.5);
      const auto h = random_scalar<ScalarField>(grid, rng, 2);
      const auto exact = lie_derivative_scalar(u, h);
      double err[2];
      for (int level = 0; level < 2; ++level) {
        const double eps = 1e-2 / (1 << level);
        const auto fp = pullback_scalar(h, u, eps);
        const auto fm = pullback_scalar(h, u, -eps);
        std::vector<double> fd(fp.size());
        for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = -(fp[i] - fm[i]) / (2 * eps);
        err[level] = max_abs_diff(fd, exact.values()) / exact.max_abs();
      }
      CHECK(err[0] < 1e-3);
      // O(eps^2): halving eps divides the error by about four
      CHECK(err[0] / err[1] > 3.5);
      CHECK(err[0] / err[1] < 4.5);
    }
  }

  TEST_CASE("lie derivative of a 1-form density") {
    const Domain dom = Domain::grid(2, 16);
    const VectorField e1 = VectorField::sample(dom, [](const Vec&) { return unit_vec(2, 0); });
    std::mt19937_64 rng(5);
    const auto m = random_vector<OneFormDensity>(dom, rng, 3);
    const auto lm = lie_derivative_oneform_density(e1, m);
    const auto s = Spectral::for_domain(dom);
    for (int c = 0; c < 2; ++c) CHECK(max_abs_diff(lm.component(c), s->derivative(m.component(c), 0)) < 1e-12);
    CHECK(lie_derivative_oneform_density(e1, OneFormDensity(dom)).max_norm() == 0.0);

    for (int dim : {1, 2}) {
      const Domain grid = Domain::grid(dim, dim == 1 ? 64 : 16);
      const auto xi = random_vector<VectorField>(grid, rng, 2, 0.5);
      const auto mm = random_vector<OneFormDensity>(grid, rng, 2);
      const auto exact = lie_derivative_oneform_density(xi, mm);
      double err[2];
      for (int level = 0; level < 2; ++level) {
        const double eps = 1e-2 / (1 << level);
        const auto fd = (1.0 / (2 * eps)) * (pullback_density(mm, xi, eps) - pullback_density(mm, xi, -eps));
        err[level] = (fd - exact).max_norm() / exact.max_norm();
      }
      CHECK(err[0] < 1e-3);
      CHECK(err[0] / err[1] > 3.5);
      CHECK(err[0] / err[1] < 4.5);
    }
  }

  TEST_CASE("ad: closed form, antisymmetry and Jacobi") {
    const Domain d1 = Domain::grid(1, 64);
    const VectorField s = VectorField::sample(d1, [](const Vec& x) { return Vec::Constant(1, std::sin(x(0))); });
    const VectorField one = VectorField::sample(d1, [](const Vec&) { return Vec::Ones(1); });
    const VectorField a = ad(s, one);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.component(0)[i] == doctest::Approx(std::cos(d1.node(i)(0))).epsilon(1e-12));
    CHECK(ad(one, 2.0 * one).max_norm() == 0.0);

    const Domain dom = Domain::grid(2, 64);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 3; ++trial) {
      const auto u = random_vector<VectorField>(dom, rng, 3);
      const auto v = random_vector<VectorField>(dom, rng, 3);
      const auto w = random_vector<VectorField>(dom, rng, 3);
      const double scale = u.max_norm() * v.max_norm();
      CHECK((ad(u, v) + ad(v, u)).max_norm() <= 1e-12 * scale);
      const auto jac = ad(u, ad(v, w)) + ad(v, ad(w, u)) + ad(w, ad(u, v));
      CHECK(jac.max_norm() <= 1e-8 * scale * w.max_norm());
    }
  }

  TEST_CASE("ad* is the transpose of ad") {
    const Domain dom = Domain::grid(2, 64);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = random_vector<VectorField>(dom, rng, 4);
      const auto v = random_vector<VectorField>(dom, rng, 4);
      const auto m = random_vector<OneFormDensity>(dom, rng, 4);
      const double lhs = pair(ad_star(u, m), v);
      const double rhs = pair(m, ad(u, v));
      const double scale = std::abs(pair(m, u)) + m.max_norm() * u.max_norm() * v.max_norm() * dom.length * dom.length;
      CHECK(rel(lhs, rhs, scale) <= 1e-10);
    }
    const VectorField c = VectorField::sample(dom, [](const Vec&) { return Vec::Ones(2); });
    const OneFormDensity mc = OneFormDensity::sample(dom, [](const Vec&) { return Vec::Ones(2); });
    CHECK(ad_star(c, mc).max_norm() < 1e-14);
  }

  TEST_CASE("diamond and star dualities, image structure") {
    const Domain dom = Domain::grid(2, 64);
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      const auto sigma = random_scalar<ScalarDensity>(dom, rng);
      const auto n = random_scalar<ScalarField>(dom, rng);
      const auto w = random_scalar<ScalarField>(dom, rng);
      const auto u = random_vector<VectorField>(dom, rng);
      const double scale = sigma.max_abs() * n.max_abs() * u.max_norm() * dom.length * dom.length;
      CHECK(std::abs(pair(diamond(sigma, n), u) + pair(sigma, lie_derivative_scalar(u, n))) <= 1e-10 * scale);
      CHECK(std::abs(pair(sigma, lie_derivative_scalar(u, w)) - pair(star(u, sigma), w)) <= 1e-10 * scale);
    }
    const ScalarField flat = ScalarField::sample(dom, [](const Vec&) { return 3.0; });
    CHECK(diamond(random_scalar<ScalarDensity>(dom, rng), flat).max_norm() < 1e-12);
    // divergence-free u with constant sigma
    const VectorField rot = VectorField::sample(dom, [](const Vec& x) {
      Vec v(2);
      v << std::sin(x(1)), std::cos(x(0));
      return v;
    });
    const ScalarDensity one = ScalarDensity::sample(dom, [](const Vec&) { return 1.0; });
    CHECK(star(rot, one).max_abs() < 1e-12);
  }

  TEST_CASE("diamond and star dualities, landmark structure") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t k = 1 + trial % 5;
      const Points q = random_points(2, k, rng), p = random_points(2, k, rng), w = random_points(2, k, rng);
      const PlaneField u = random_plane_field(2, rng);
      const double scale = scale_of(p) * (scale_of(act(u, q)) + 1.0);
      CHECK(std::abs(pair(diamond(p, q), u) + pair(p, act(u, q))) <= 1e-12 * scale);
      CHECK(std::abs(pair(p, act_tangent(u, q, w)) - pair(star(u, p, q), w)) <= 1e-12 * scale * (scale_of(w) + 1));
      CHECK(std::abs(diamond_tangent(p, q, w).pair(u) + pair(p, act_tangent(u, q, w))) <= 1e-12 * scale * (scale_of(w) + 1));
    }
    const PointMomentum d = diamond(Points{unit_vec(2, 0)}, Points{Vec::Zero(2)});
    CHECK(pair(d, PlaneField::constant(unit_vec(2, 0))) == doctest::Approx(-1.0));
    const Points st = star(PlaneField::constant(Vec::Ones(2)), Points{Vec::Ones(2)}, Points{Vec::Zero(2)});
    CHECK(st[0].norm() == 0.0);
  }

  TEST_CASE("landmark ad* pairs with ad") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 5; ++trial) {
      const PointMomentum m = random_momentum(2, 3, rng);
      const PlaneField u = random_plane_field(2, rng), v = random_plane_field(2, rng);
      double expected = 0.0;
      for (std::size_t b = 0; b < m.size(); ++b) {
        const FieldJet eu = u.evaluate(m.points[b]), ev = v.evaluate(m.points[b]);
        expected += m.weights[b].dot(eu.jacobian * ev.value - ev.jacobian * eu.value);
      }
      CHECK(ad_star(u, m).pair(v) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("inertia operator") {
    const InertiaOperator op{1.0, 1};
    const Domain d1 = Domain::grid(1, 64);
    for (int k : {1, 3, 7}) {
      const VectorField u = VectorField::sample(d1, [&](const Vec& x) { return Vec::Constant(1, std::sin(k * x(0))); });
      const auto m = momentum_from_velocity(u, op);
      for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(m.component(0)[i] == doctest::Approx((1.0 + k * k) * u.component(0)[i]).epsilon(1e-11).scale(1.0));
    }
    CHECK(velocity_from_momentum(OneFormDensity(d1), op).max_norm() == 0.0);

    const Domain dom = Domain::grid(2, 64);
    std::mt19937_64 rng(23);
    for (const InertiaOperator& L : {InertiaOperator{1.0, 1}, InertiaOperator{0.5, 2}}) {
      const auto mu = random_vector<OneFormDensity>(dom, rng, 6);
      const auto back = momentum_from_velocity(velocity_from_momentum(mu, L), L);
      // round-off in the highest mode is amplified by the condition number of L
      const double kmax = dom.points / 2 * two_pi / dom.length;
      const double cond = L.symbol(2 * kmax * kmax);
      CHECK((back - mu).max_norm() <= 1e-12 * std::max(1.0, cond / 2049.0) * mu.max_norm());
      const auto u = random_vector<VectorField>(dom, rng, 6), v = random_vector<VectorField>(dom, rng, 6);
      const double luv = pair(momentum_from_velocity(u, L), v), lvu = pair(momentum_from_velocity(v, L), u);
      CHECK(std::abs(luv - lvu) <= 1e-12 * (std::abs(luv) + 1.0));
      CHECK(pair(momentum_from_velocity(u, L), u) > 0.0);
    }
    CHECK_THROWS_AS(InertiaOperator({1.0, 3}).validate(), InputError);
  }

  TEST_CASE("kernel velocity and kernel matrix") {
    const Kernel k;
    const PlaneField u = velocity_from_momentum(PointMomentum(2, {Vec::Zero(2)}, {unit_vec(2, 0)}), k);
    CHECK((u.value(Vec::Zero(2)) - unit_vec(2, 0)).norm() == 0.0);
    CHECK(k.gradient(Vec::Zero(2)).norm() == 0.0);

    const Eigen::MatrixXd one = kernel_matrix({Vec::Zero(2)}, Kernel{1.0, 2.5});
    CHECK(one.rows() == 2);
    CHECK(one(0, 0) == 2.5);
    CHECK(one(1, 1) == 2.5);
    CHECK(one(0, 1) == 0.0);
    const Eigen::MatrixXd coincident = kernel_matrix({Vec::Ones(2), Vec::Ones(2)}, k);
    CHECK((coincident - Eigen::MatrixXd::Identity(2, 2).replicate(2, 2)).norm() == 0.0);

    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::MatrixXd km = kernel_matrix(random_points(2, 5, rng), k);
      CHECK((km - km.transpose()).norm() == 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(km).eigenvalues().minCoeff() >= -1e-12);
    }
  }

  TEST_CASE("domain mismatch is rejected") {
    const VectorField a(Domain::grid(1, 64)), b(Domain::grid(1, 32));
    CHECK_THROWS_AS(ad(a, b), InputError);
    CHECK_THROWS_AS(Domain::grid(1, 4), InputError);
  }
}
