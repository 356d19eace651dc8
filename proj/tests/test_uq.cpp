#include "doctest.h"
#include "support.hpp"

#include "metamorph/uq.hpp"
#include "metamorph/verify.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace metamorph;
using namespace metamorph::testing;

namespace {

Points pts(std::initializer_list<std::pair<double, double>> xs) {
  Points out;
  for (auto [x, y] : xs) {
    Vec v(2);
    v << x, y;
    out.push_back(v);
  }
  return out;
}

std::vector<double> flat(const Points& q) {
  std::vector<double> out;
  for (const auto& v : q)
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

EnsembleConfig config(Scheme scheme, double dt, std::size_t samples, std::uint64_t seed) {
  EnsembleConfig c;
  c.scheme = scheme;
  c.dt = dt;
  c.horizon = 1.0;
  c.samples = samples;
  c.master_seed = seed;
  return c;
}

SampleSummary summary(std::uint64_t i, std::vector<double> terminal) {
  SampleSummary s;
  s.index = i;
  s.terminal = std::move(terminal);
  return s;
}

}  // namespace

TEST_CASE("ensemble: no noise gives the deterministic trajectory in every sample") {
  LagrangianSpec spec;
  const auto s0 = checks::default_landmarks();
  const auto r = run_ensemble(s0, spec, NoiseBasis{}, config(Scheme::stratonovich_heun, 0.01, 8, 1));
  const auto det = integrate(Scheme::stratonovich_heun, s0, spec, NoiseBasis{}, BrownianPath::zero(0, 0.01, 100));
  for (const auto& s : r.samples) CHECK(s.terminal == flat(det.q));
  const auto st = ensemble_statistics(r);
  REQUIRE(st.covariance);
  // identical samples: only the rounding of the mean remains
  CHECK(st.covariance->cwiseAbs().maxCoeff() <= 1e-28);
}

TEST_CASE("ensemble: a single sample is the direct stepper run with the same seed") {
  LagrangianSpec spec;
  const auto s0 = checks::default_landmarks();
  const NoiseBasis noise = checks::default_bump_noise(2);
  for (Scheme scheme : {Scheme::stratonovich_heun, Scheme::ito_euler_maruyama}) {
    const auto r = run_ensemble(s0, spec, noise, config(scheme, 0.01, 1, 77));
    const auto direct = integrate(scheme, s0, spec, noise, BrownianPath(77, 0, 2, 0.01, 100));
    CHECK(r.samples[0].terminal == flat(direct.q));
    const auto st = ensemble_statistics(r);
    CHECK_FALSE(st.covariance.has_value());
  }
}

TEST_CASE("ensemble: Brownian translation law of a landmark at rest") {
  LagrangianSpec spec;
  const Points q0 = pts({{0.3, -0.2}});
  const auto s0 = LandmarkState::zero_level(pts({{0.0, 0.0}}), q0);
  const NoiseBasis noise = NoiseBasis::constant(pts({{0.6, 0.8}}));
  const std::size_t n = 10000;
  const auto r = run_ensemble(s0, spec, noise, config(Scheme::stratonovich_heun, 0.02, n, 5));
  const auto st = ensemble_statistics(r);
  REQUIRE(st.covariance);
  const Eigen::MatrixXd& c = *st.covariance;
  // exact law: q(T) = q0 + xi W_T, so cov = xi xi^T T
  const double vx = 0.36, vy = 0.64;
  CHECK(std::abs(c(0, 0) - vx) <= 3 * vx * std::sqrt(2.0 / (n - 1)));
  CHECK(std::abs(c(1, 1) - vy) <= 3 * vy * std::sqrt(2.0 / (n - 1)));
  const double trace = c.trace();
  // trace = |xi|^2 W^2, whose sample variance is 2 |xi|^4 T^2 / (n - 1)
  CHECK(std::abs(trace - 1.0) <= 3 * std::sqrt(2.0 / (n - 1)));
  CHECK(std::abs(st.mean[0] - q0[0](0)) <= 3 * st.standard_error[0]);
  CHECK(std::abs(st.mean[1] - q0[0](1)) <= 3 * st.standard_error[1]);
}

TEST_CASE("ensemble statistics: hand computed example") {
  EnsembleResult r;
  r.samples = {summary(0, {1.0, 2.0}), summary(1, {3.0, 0.0}), summary(2, {2.0, 4.0})};
  SampleSummary bad = summary(3, {});
  bad.ok = false;
  bad.error = "non-finite state";
  r.samples.push_back(bad);
  CHECK(r.failures() == 1);
  const auto st = ensemble_statistics(r);
  CHECK(st.samples == 3);
  CHECK(st.mean[0] == doctest::Approx(2.0));
  CHECK(st.mean[1] == doctest::Approx(2.0));
  REQUIRE(st.covariance);
  // unbiased: deviations (-1, 0), (1, -2), (0, 2)
  CHECK((*st.covariance)(0, 0) == doctest::Approx(1.0));
  CHECK((*st.covariance)(1, 1) == doctest::Approx(4.0));
  CHECK((*st.covariance)(0, 1) == doctest::Approx(-1.0));
  CHECK((*st.covariance)(0, 1) == (*st.covariance)(1, 0));
  CHECK(st.standard_error[1] == doctest::Approx(std::sqrt(4.0 / 3.0)));

  EnsembleResult none;
  none.samples = {bad};
  CHECK_THROWS_AS(ensemble_statistics(none), InputError);
}

TEST_CASE("ensemble statistics: covariance is symmetric and positive semidefinite") {
  LagrangianSpec spec;
  const auto r = run_ensemble(checks::default_landmarks(), spec, checks::default_bump_noise(2),
                              config(Scheme::stratonovich_heun, 0.02, 64, 9));
  const auto st = ensemble_statistics(r);
  const Eigen::MatrixXd& c = *st.covariance;
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  CHECK(st.drift_q05 <= st.drift_q50);
  CHECK(st.drift_q50 <= st.drift_q95);
  // the Noether level is kept along stochastic paths as well
  CHECK(st.drift_q95 <= 1e-6);
}

TEST_CASE("ensemble: output does not depend on the thread count") {
  LagrangianSpec spec;
  auto cfg = config(Scheme::stratonovich_heun, 0.02, 24, 3);
  cfg.record_every = 10;
  const auto a = run_ensemble(checks::default_landmarks(), spec, checks::default_bump_noise(2), cfg);
  cfg.threads = 4;
  const auto b = run_ensemble(checks::default_landmarks(), spec, checks::default_bump_noise(2), cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].index == i);
    CHECK(a.samples[i].terminal == b.samples[i].terminal);
    CHECK(a.samples[i].series == b.samples[i].series);
    CHECK(a.samples[i].momentum_drift == b.samples[i].momentum_drift);
  }
  CHECK(a.times == b.times);
  // rows at steps 10, 20, 30, 40, 50; the initial state is not a row
  CHECK(a.times.size() == 5);
  CHECK(a.times.back() == doctest::Approx(1.0));
}

TEST_CASE("ensemble: failing samples are reported by index") {
  LagrangianSpec spec;
  const auto blowup = LandmarkState::zero_level(pts({{1e200, 0.0}, {0.0, 1e200}}), pts({{0.0, 0.0}, {0.5, 0.0}}));
  const auto r = run_ensemble(blowup, spec, checks::default_bump_noise(1), config(Scheme::stratonovich_heun, 0.1, 3, 1));
  CHECK(r.failures() == 3);
  for (const auto& s : r.samples) {
    CHECK_FALSE(s.ok);
    CHECK(s.failed_step >= 1);
    CHECK_FALSE(s.error.empty());
  }
}

TEST_CASE("ensemble: image probes and validation") {
  const Domain dom = Domain::grid(1, 32);
  LagrangianSpec spec;
  const ImageState s0 = checks::default_image(dom);
  auto cfg = config(Scheme::stratonovich_heun, 0.05, 4, 2);
  cfg.probes = {Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  const auto r = run_ensemble(s0, spec, NoiseBasis::fourier(dom, 2, {0.1, 0.1}), cfg);
  CHECK(r.samples[0].terminal.size() == 2);
  cfg.probes.clear();
  const auto all = run_ensemble(s0, spec, NoiseBasis{}, cfg);
  CHECK(all.samples[0].terminal.size() == dom.size());

  cfg.dt = 0.3;
  CHECK_THROWS_AS(run_ensemble(s0, spec, NoiseBasis{}, cfg), InputError);
  cfg.dt = 0.05;
  cfg.samples = 0;
  CHECK_THROWS_AS(run_ensemble(s0, spec, NoiseBasis{}, cfg), InputError);
}

TEST_CASE("ito mean test: Euler-Maruyama noise terms have zero mean") {
  LagrangianSpec spec;
  const auto s = checks::default_landmarks();
  const NoiseBasis noise = checks::default_bump_noise(2);
  const std::size_t n = 10000;
  const std::size_t m = 2 * s.q.size() * 2;
  std::vector<double> sum(m, 0.0), sum2(m, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const BrownianPath path(4, p, 2, 1e-2, 1);
    PlaneField noise_only(2);
    for (std::size_t i = 0; i < 2; ++i) noise_only.add(noise.plane[i], path.increment(0)[i]);
    const LandmarkRate b = increment(s, spec, noise_only, 0.0);
    std::vector<double> v = flat(b.q);
    for (double x : flat(b.sigma)) v.push_back(x);
    for (std::size_t j = 0; j < m; ++j) {
      sum[j] += v[j];
      sum2[j] += v[j] * v[j];
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double mean = sum[j] / n;
    const double se = std::sqrt((sum2[j] / n - mean * mean) / (n - 1));
    CHECK(std::abs(mean) <= 3 * se);
  }
}

TEST_CASE("weak consistency: Heun and Euler-Maruyama terminal means agree") {
  LagrangianSpec spec;
  const auto s0 = checks::default_landmarks();
  const NoiseBasis noise = checks::default_bump_noise(2);
  const std::size_t n = 256;
  auto cfg = config(Scheme::stratonovich_heun, 1e-3, n, 11);
  const auto heun = ensemble_statistics(run_ensemble(s0, spec, noise, cfg));
  cfg.scheme = Scheme::ito_euler_maruyama;
  cfg.master_seed = 12;
  const auto em = ensemble_statistics(run_ensemble(s0, spec, noise, cfg));
  for (std::size_t j = 0; j < heun.mean.size(); ++j) {
    const double se = std::hypot(heun.standard_error[j], em.standard_error[j]);
    CHECK(std::abs(heun.mean[j] - em.mean[j]) <= 3 * se);
  }
}

TEST_CASE("order studies: RK4, noise-free Heun and stochastic Heun") {
  const auto s0 = checks::stiff_landmarks();
  const LagrangianSpec spec = checks::stiff_spec();
  const std::vector<double> dts{8e-3, 4e-3, 2e-3, 1e-3};
  const auto rk4 = strong_order_estimate(Scheme::deterministic_rk4, s0, spec, NoiseBasis{}, dts, 1.0, 1, 0);
  CHECK(rk4.slope == doctest::Approx(4.0).epsilon(0.125));
  const auto heun0 = strong_order_estimate(Scheme::stratonovich_heun, s0, spec, NoiseBasis{}, dts, 1.0, 1, 0);
  CHECK(heun0.slope == doctest::Approx(2.0).epsilon(0.25));
  const auto heun = strong_order_estimate(Scheme::stratonovich_heun, s0, spec, checks::default_bump_noise(1), dts, 1.0,
                                          32, 21);
  CHECK(heun.slope >= 0.4);
  CHECK(heun.dts == dts);
  for (std::size_t k = 1; k < heun.errors.size(); ++k) CHECK(heun.errors[k] < heun.errors[k - 1]);

  CHECK_THROWS_AS(strong_order_estimate(Scheme::stratonovich_heun, s0, spec, NoiseBasis{}, {4e-3, 2e-3}, 1.0, 1, 0),
                  InputError);
}

TEST_CASE("quantile and log slope") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.25) == doctest::Approx(2.5));
  CHECK(quantile({4.0}, 0.95) == 4.0);
  CHECK(log_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
}

TEST_CASE("advection series: zero momentum and deterministic EPDiff") {
  LagrangianSpec spec;
  LandmarkUntangledState zero = checks::default_untangled();
  zero.M.weights = zero_points(2, zero.M.size());
  zero.sigma = zero_points(2, zero.q.size());
  const NoiseBasis noise = checks::default_bump_noise(2);
  const auto zs = advection_invariant_series(Scheme::stratonovich_heun, zero, spec, noise, BrownianPath(1, 0, 2, 0.01, 100),
                                             checks::default_test_field());
  for (double v : zs.values) CHECK(v == 0.0);

  LandmarkUntangledState ep = checks::default_untangled();
  ep.sigma = zero_points(2, ep.q.size());
  const auto det = advection_invariant_series(Scheme::stratonovich_heun, ep, spec, NoiseBasis{},
                                              BrownianPath::zero(0, 1e-3, 1000), checks::default_test_field());
  CHECK(std::abs(det.values.front()) > 1e-2);
  CHECK(det.max_relative_drift <= 1e-4);

  const Domain dom = Domain::grid(1, 32);
  ImageState img;
  img.mu = OneFormDensity::sample(dom, [](const Vec& x) { return Vec::Constant(1, 0.3 * std::sin(x(0))); });
  img.sigma = ScalarDensity(dom);
  img.n = ScalarField::sample(dom, [](const Vec& x) { return std::cos(x(0)); });
  const VectorField w = VectorField::sample(dom, [](const Vec& x) { return Vec::Constant(1, 1.0 + 0.5 * std::sin(x(0))); });
  LagrangianSpec ispec;
  ispec.inertia = InertiaOperator{0.5, 1};
  const auto idet = advection_invariant_series(Scheme::deterministic_rk4, img, ispec, NoiseBasis{},
                                               BrownianPath::zero(0, 1e-2, 100), w);
  CHECK(std::abs(idet.values.front()) > 1e-2);
  CHECK(idet.max_relative_drift <= 1e-4);
  ImageState izero = img;
  izero.mu = OneFormDensity(dom);
  const auto iz = advection_invariant_series(Scheme::deterministic_rk4, izero, ispec, NoiseBasis{},
                                             BrownianPath::zero(0, 1e-2, 10), w);
  for (double v : iz.values) CHECK(v == 0.0);
}
