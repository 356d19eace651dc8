#include "metamorph/verify.hpp"

#include "metamorph/samples.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace metamorph::checks {

using namespace metamorph::samples;

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double grid_norm(const std::vector<double>& v, const Domain& dom) { return norm2(v) * std::sqrt(dom.cell_volume()); }

template <class G>
double vector_norm(const G& g) {
  double s = 0.0;
  for (int c = 0; c < g.dim(); ++c) s += std::pow(grid_norm(g.component(c), g.domain()), 2);
  return std::sqrt(s);
}

double ratio(double residual, double scale) { return scale > 0.0 ? residual / scale : residual; }

// ⟨m, u⟩ with the sum of absolute term sizes, used as the residual scale.
double abs_pair(const Points& p, const Points& v) {
  double s = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) s += p[a].norm() * v[a].norm();
  return s;
}

}  // namespace

double landmark_duality_residual(std::uint64_t seed, int trials, int max_landmarks) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % std::max(1, max_landmarks));
    const Points q = random_points(2, k, rng), p = random_points(2, k, rng), w = random_points(2, k, rng);
    const PlaneField u = random_plane_field(2, rng), v = random_plane_field(2, rng);
    const Points uq = act(u, q), uw = act_tangent(u, q, w);
    // <p <> q, u> = -<p, u q>
    worst = std::max(worst, ratio(std::abs(pair(diamond(p, q), u) + pair(p, uq)), abs_pair(p, uq)));
    // <p, u w> = <u * p, w>
    worst = std::max(worst, ratio(std::abs(pair(p, uw) - pair(star(u, p, q), w)), abs_pair(p, uw)));
    // <p <> w, u> = -<p, u w> on the tangent bundle
    worst = std::max(worst, ratio(std::abs(diamond_tangent(p, q, w).pair(u) + pair(p, uw)), abs_pair(p, uw)));
    // <ad*_u m, v> = <m, ad_u v>
    const PointMomentum m(2, q, p);
    double direct = 0.0, scale = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
      const FieldJet eu = u.evaluate(q[b]), ev = v.evaluate(q[b]);
      const Vec a = eu.jacobian * ev.value - ev.jacobian * eu.value;
      direct += p[b].dot(a);
      scale += p[b].norm() * ((eu.jacobian * ev.value).norm() + (ev.jacobian * eu.value).norm());
    }
    worst = std::max(worst, ratio(std::abs(ad_star(u, m).pair(v) - direct), scale));
  }
  return worst;
}

double image_duality_residual(const Domain& domain, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto sigma = random_scalar<ScalarDensity>(domain, rng);
    const auto n = random_scalar<ScalarField>(domain, rng);
    const auto w = random_scalar<ScalarField>(domain, rng);
    const auto u = random_vector<VectorField>(domain, rng);
    const auto v = random_vector<VectorField>(domain, rng);
    const auto m = random_vector<OneFormDensity>(domain, rng);
    const ScalarField un = lie_derivative_scalar(u, n), uw = lie_derivative_scalar(u, w);
    const VectorField uv = ad(u, v);
    worst = std::max(worst, ratio(std::abs(pair(diamond(sigma, n), u) + pair(sigma, un)),
                                  grid_norm(sigma.values(), domain) * grid_norm(un.values(), domain)));
    worst = std::max(worst, ratio(std::abs(pair(sigma, uw) - pair(star(u, sigma), w)),
                                  grid_norm(sigma.values(), domain) * grid_norm(uw.values(), domain)));
    worst = std::max(worst, ratio(std::abs(pair(ad_star(u, m), v) - pair(m, uv)), vector_norm(m) * vector_norm(uv)));
  }
  return worst;
}

double landmark_coadjoint_residual(const LagrangianSpec& spec, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % 4);
    const Points q = random_points(2, k, rng), sigma = random_points(2, k, rng);
    const PointMomentum free = random_momentum(2, 2, rng);
    LagrangianSpec sp = spec;
    sp.landmark_reference.clear();
    const LandmarkState s = LandmarkState::from_parts(0.0, concat(free, PointMomentum(2, q, sigma)), sigma, q);
    const LandmarkRate r = rhs_tangled(s, sp);
    // d/dt (mu + sigma <> q) = d mu - sum_a (d sigma_a) delta_{q_a} + dipoles sigma_a (x) dq_a
    JetFunctional lhs = r.mu;
    for (std::size_t a = 0; a < k; ++a) lhs.jets.push_back({q[a], -r.sigma[a], -(sigma[a] * r.q[a].transpose())});
    const JetFunctional rhs = ad_star(velocity(s, sp), total_momentum(s));
    for (int probe = 0; probe < 4; ++probe) {
      const PlaneField w = random_plane_field(2, rng);
      const double a = lhs.pair(w), b = -rhs.pair(w);
      worst = std::max(worst, ratio(std::abs(a - b), std::abs(a) + std::abs(b)));
    }
  }
  return worst;
}

double image_coadjoint_residual(const Domain& domain, const LagrangianSpec& spec, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  LagrangianSpec sp = spec;
  if (sp.image_reference && !(sp.image_reference->domain() == domain)) sp.image_reference.reset();
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ImageState s{0.0, random_vector<OneFormDensity>(domain, rng), random_scalar<ScalarDensity>(domain, rng),
                       random_scalar<ScalarField>(domain, rng)};
    const ImageRate r = rhs_tangled(s, sp);
    const OneFormDensity lhs = r.mu + diamond(r.sigma, s.n) + diamond(s.sigma, r.n);
    const OneFormDensity rhs = -ad_star(velocity(s, sp), total_momentum(s));
    worst = std::max(worst, ratio((lhs - rhs).max_norm(), std::max(lhs.max_norm(), rhs.max_norm())));
  }
  return worst;
}

namespace {

std::size_t step_count(double dt, double horizon) {
  EnsembleConfig c;
  c.dt = dt;
  c.horizon = horizon;
  return c.steps();
}

template <class State>
ConservationReport conserve(const State& s0, const LagrangianSpec& spec, double dt, double horizon, double scale) {
  ConservationReport rep;
  rep.scale = scale;
  const double h0 = hamiltonian(s0, spec);
  const NoiseBasis none;
  integrate(Scheme::deterministic_rk4, s0, spec, none, BrownianPath::zero(0, dt, step_count(dt, horizon)),
            [&](std::size_t, const State& s) {
              rep.hamiltonian_drift = std::max(rep.hamiltonian_drift, ratio(std::abs(hamiltonian(s, spec) - h0), std::abs(h0)));
              rep.el_residual = std::max(rep.el_residual, euler_lagrange_residual(s, spec));
            });
  return rep;
}

}  // namespace

ConservationReport conservation(const LandmarkState& s0, const LagrangianSpec& spec, double dt, double horizon) {
  return conserve(s0, spec, dt, horizon, momentum_norm(diamond(s0.sigma, s0.q), spec.kernel));
}

ConservationReport conservation(const ImageState& s0, const LagrangianSpec& spec, double dt, double horizon) {
  return conserve(s0, spec, dt, horizon, momentum_norm(diamond(s0.sigma, s0.n), spec.inertia));
}

double form_equivalence(const LandmarkState& s0, const LagrangianSpec& spec, double dt, double horizon) {
  const NoiseBasis none;
  const BrownianPath path = BrownianPath::zero(0, dt, step_count(dt, horizon));
  const LandmarkState a = integrate(Scheme::deterministic_rk4, s0, spec, none, path);
  const LandmarkUntangledState b = integrate(Scheme::deterministic_rk4, untangle(s0), spec, none, path);
  PointMomentum minus_b = b.M;
  for (auto& w : minus_b.weights) w = -w;
  const double scale = std::max(momentum_norm(total_momentum(s0), spec.kernel),
                                momentum_norm(diamond(s0.sigma, s0.q), spec.kernel));
  return ratio(momentum_norm(concat(total_momentum(a), minus_b), spec.kernel), scale);
}

double form_equivalence(const ImageState& s0, const LagrangianSpec& spec, double dt, double horizon) {
  const NoiseBasis none;
  const BrownianPath path = BrownianPath::zero(0, dt, step_count(dt, horizon));
  const ImageState a = integrate(Scheme::deterministic_rk4, s0, spec, none, path);
  const ImageUntangledState b = integrate(Scheme::deterministic_rk4, untangle(s0), spec, none, path);
  const double scale = std::max(momentum_norm(total_momentum(s0), spec.inertia),
                                momentum_norm(diamond(s0.sigma, s0.n), spec.inertia));
  return ratio(momentum_norm(total_momentum(a) - b.M, spec.inertia), scale);
}

double constant_noise_ito_residual(const Domain& domain, const Points& vectors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const NoiseBasis noise = NoiseBasis::constant(domain, vectors);
  const ImageState s{0.0, random_vector<OneFormDensity>(domain, rng), random_scalar<ScalarDensity>(domain, rng),
                     random_scalar<ScalarField>(domain, rng)};
  const ImageRate corr = ito_drift_correction(s, noise);
  const auto spectral = Spectral::for_domain(domain);
  // 1/2 sum_i (xi_i . grad)^2 f, spectrally
  auto expected = [&](const std::vector<double>& f) {
    std::vector<double> out(f.size(), 0.0);
    for (const Vec& xi : vectors) {
      auto directional = [&](const std::vector<double>& g) {
        std::vector<double> r(g.size(), 0.0);
        for (int c = 0; c < domain.dim; ++c) {
          const auto dg = spectral->derivative(g, c);
          for (std::size_t i = 0; i < r.size(); ++i) r[i] += xi(c) * dg[i];
        }
        return r;
      };
      const auto twice = directional(directional(f));
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * twice[i];
    }
    return out;
  };
  auto residual = [](const std::vector<double>& got, const std::vector<double>& want) {
    double err = 0.0, size = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      err = std::max(err, std::abs(got[i] - want[i]));
      size = std::max(size, std::abs(want[i]));
    }
    return ratio(err, size);
  };
  double worst = residual(corr.n.values(), expected(s.n.values()));
  worst = std::max(worst, residual(corr.sigma.values(), expected(s.sigma.values())));
  for (int c = 0; c < domain.dim; ++c)
    worst = std::max(worst, residual(corr.mu.component(c), expected(s.mu.component(c))));
  return worst;
}

std::vector<double> advection_drift_study(const LandmarkUntangledState& s0, const LagrangianSpec& spec,
                                          const NoiseBasis& noise, const PlaneField& w,
                                          const std::vector<double>& dts, double horizon, std::size_t paths,
                                          std::uint64_t seed) {
  if (dts.empty()) throw InputError("advection study: no dt levels");
  const double finest = *std::min_element(dts.begin(), dts.end());
  const std::size_t steps = step_count(finest, horizon);
  std::vector<double> drift(dts.size(), 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    const BrownianPath fine = noise.empty() ? BrownianPath::zero(0, finest, steps)
                                            : BrownianPath(seed, p, noise.size(), finest, steps);
    for (std::size_t l = 0; l < dts.size(); ++l) {
      const auto factor = static_cast<std::size_t>(std::round(dts[l] / finest));
      const AdvectionSeries series =
          advection_invariant_series(Scheme::stratonovich_heun, s0, spec, noise, fine.coarsened(factor), w);
      drift[l] += series.max_relative_drift / static_cast<double>(paths);
    }
  }
  return drift;
}

// ---- default cases ------------------------------------------------------------

namespace {

Points pts(std::initializer_list<std::pair<double, double>> xs) {
  Points out;
  for (auto [a, b] : xs) {
    Vec v(2);
    v << a, b;
    out.push_back(v);
  }
  return out;
}

}  // namespace

LandmarkState default_landmarks() {
  return LandmarkState::zero_level(pts({{0.5, 0.3}, {-0.4, 0.2}, {0.1, -0.6}}), pts({{-1, 0}, {1, 0}, {0, 1}}));
}

LandmarkState stiff_landmarks() {
  return LandmarkState::zero_level(pts({{2.0, 1.2}, {-1.6, 0.8}, {0.4, -2.4}}), pts({{-1, 0}, {1, 0}, {0, 1}}));
}

LagrangianSpec stiff_spec() {
  LagrangianSpec spec;
  spec.kernel.length_scale = 0.5;
  return spec;
}

LandmarkUntangledState default_untangled() {
  return LandmarkUntangledState{0.0, PointMomentum(2, pts({{0.2, -0.5}, {-0.6, 0.4}}), pts({{0.4, 0.1}, {-0.2, 0.3}})),
                                pts({{0.5, 0.3}, {-0.4, 0.2}, {0.1, -0.6}}), pts({{-1, 0}, {1, 0}, {0, 1}})};
}

NoiseBasis default_bump_noise(std::size_t J) {
  const Points centers = pts({{0.3, 0.2}, {-0.4, 0.5}});
  const std::vector<int> dirs{0, 1};
  const std::vector<double> amps{0.5, 0.5};
  J = std::min<std::size_t>(J, 2);
  return NoiseBasis::gaussian_bumps(Points(centers.begin(), centers.begin() + J),
                                    std::vector<int>(dirs.begin(), dirs.begin() + J),
                                    std::vector<double>(amps.begin(), amps.begin() + J), 1.0);
}

PlaneField default_test_field() {
  Vec c(2);
  c << 0.3, -0.7;
  Mat a(2, 2);
  a << 0.2, 0.1, -0.3, 0.4;
  PlaneField w = PlaneField::affine(c, a);
  w.add_bump(Vec::Zero(2), Vec::Ones(2), Kernel{});
  return w;
}

ImageState default_image(const Domain& domain) {
  const ScalarField n = ScalarField::sample(domain, [](const Vec& x) {
    double v = 0.0;
    for (int i = 0; i < x.size(); ++i) v += std::cos(x(i));
    return std::exp(v);
  });
  const ScalarDensity sigma = ScalarDensity::sample(domain, [](const Vec& x) {
    double v = 0.0;
    for (int i = 0; i < x.size(); ++i) v += 0.3 * std::sin(2 * x(i) + 0.5 * i);
    return v;
  });
  return ImageState::zero_level(sigma, n);
}

// ---- suite ------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

CheckOutcome below(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold ? "pass" : "fail", value, threshold,
          detail.empty() ? "value " + fmt(value) + " <= " + fmt(threshold) : std::move(detail)};
}

CheckOutcome above(std::string name, double value, double threshold, std::string detail) {
  return {std::move(name), value >= threshold ? "pass" : "fail", value, threshold, std::move(detail)};
}

CheckOutcome skipped(std::string name, std::string why) { return {std::move(name), "skipped", 0.0, 0.0, std::move(why)}; }

}  // namespace

std::vector<CheckOutcome> run_verification(const VerifySettings& st) {
  std::vector<CheckOutcome> out;
  const std::uint64_t seed = st.seed;

  if (st.landmarks) {
    const LandmarkState& s0 = st.landmark_state;
    out.push_back(below("landmark.adjoint_identities", landmark_duality_residual(seed, 20), 1e-10));
    out.push_back(below("landmark.coadjoint_motion", landmark_coadjoint_residual(st.landmark_spec, seed + 1, 20), 1e-8));
    const ConservationReport c = conservation(s0, st.landmark_spec, st.dt, st.horizon);
    out.push_back(below("landmark.hamiltonian_conservation", c.hamiltonian_drift, 1e-8,
                        "relative drift " + fmt(c.hamiltonian_drift) + " at dt " + fmt(st.dt)));
    const double noether = ratio(c.el_residual, c.scale);
    out.push_back(below("landmark.noether_zero_level", noether, 1e-6,
                        "max momentum map " + fmt(c.el_residual) + " relative " + fmt(noether)));
    // the form comparison needs M != 0: add a free momentum beside the landmarks
    PointMomentum extra(2, Points{Vec::Constant(2, 0.5)}, Points{Vec::Constant(2, 0.3)});
    const LandmarkState with_m =
        LandmarkState::from_parts(0.0, concat(total_momentum(s0), extra), s0.sigma, s0.q);
    out.push_back(below("landmark.form_equivalence", form_equivalence(with_m, st.landmark_spec, st.dt, st.horizon), 1e-6));

    if (st.landmark_noise.empty()) {
      out.push_back(skipped("landmark.ito_stratonovich_consistency", "no noise modes (J = 0)"));
      out.push_back(skipped("landmark.stochastic_advection", "no noise modes (J = 0)"));
    } else {
      // Euler-Maruyama is strong order 1/2, so the same-path gap is expected
      // to shrink by about sqrt(2) per halving; 1.25 leaves room for sampling.
      const OrderStudy gap = scheme_gap_study(s0, st.landmark_spec, st.landmark_noise, {4e-3, 2e-3, 1e-3}, 1.0, 32, seed);
      const double r = std::min(gap.errors[0] / gap.errors[1], gap.errors[1] / gap.errors[2]);
      out.push_back(above("landmark.ito_stratonovich_consistency", r, 1.25,
                          "gaps " + fmt(gap.errors[0]) + " " + fmt(gap.errors[1]) + " " + fmt(gap.errors[2]) +
                              ", smallest halving ratio " + fmt(r)));
      const auto drift = advection_drift_study(default_untangled(), st.landmark_spec, st.landmark_noise,
                                               default_test_field(), {1e-3, 2e-3, 4e-3}, 1.0, 16, seed);
      const double q = std::min(drift[1] / drift[0], drift[2] / drift[1]);
      out.push_back(above("landmark.stochastic_advection", q, 1.8,
                          "drifts " + fmt(drift[0]) + " " + fmt(drift[1]) + " " + fmt(drift[2]) +
                              ", smallest halving ratio " + fmt(q)));
    }
    const NoiseBasis none;
    LandmarkUntangledState epdiff = default_untangled();
    epdiff.sigma = zero_points(2, epdiff.q.size());
    const double det = advection_invariant_series(Scheme::stratonovich_heun, epdiff, st.landmark_spec, none,
                                                  BrownianPath::zero(0, 1e-3, 1000), default_test_field())
                           .max_relative_drift;
    out.push_back(below("landmark.deterministic_advection", det, 1e-4));
  }

  if (st.images) {
    const ImageState s0 = st.image_state ? *st.image_state : default_image(Domain::grid(1, 64));
    const Domain& dom = s0.domain();
    out.push_back(below("image.adjoint_identities", image_duality_residual(dom, seed + 2, 20), 1e-10));
    out.push_back(below("image.coadjoint_motion", image_coadjoint_residual(dom, st.image_spec, seed + 3, 20), 1e-8));
    const ConservationReport c = conservation(s0, st.image_spec, st.dt, st.horizon);
    out.push_back(below("image.hamiltonian_conservation", c.hamiltonian_drift, 1e-8,
                        "relative drift " + fmt(c.hamiltonian_drift) + " at dt " + fmt(st.dt)));
    const double noether = ratio(c.el_residual, c.scale);
    out.push_back(below("image.noether_zero_level", noether, 1e-6,
                        "max momentum map " + fmt(c.el_residual) + " relative " + fmt(noether)));
    ImageState with_m = s0;
    with_m.mu += OneFormDensity::sample(dom, [](const Vec& x) { return Vec::Constant(x.size(), 0.2 * std::cos(x(0))); });
    out.push_back(below("image.form_equivalence", form_equivalence(with_m, st.image_spec, st.dt, st.horizon), 1e-6));
    if (st.image_noise_vectors.empty())
      out.push_back(skipped("image.ito_correction", "no noise modes (J = 0)"));
    else
      out.push_back(below("image.ito_correction", constant_noise_ito_residual(dom, st.image_noise_vectors, seed + 4), 1e-10));
  }
  return out;
}

}  // namespace metamorph::checks
