#include "metamorph/matching.hpp"

#include "metamorph/parallel.hpp"
#include "metamorph/stochastics.hpp"

#include <cmath>
#include <numeric>

namespace metamorph {

void LandmarkMatchProblem::validate() const {
  spec.validate();
  if (q0.empty()) throw InputError("match: at least one landmark is required");
  if (q0.size() != q1.size()) throw InputError("match: n0 and n1 have different landmark counts");
  for (std::size_t a = 0; a < q0.size(); ++a)
    if (q0[a].size() != q1[a].size() || q0[a].size() != q0.front().size())
      throw InputError("match: landmark dimension mismatch");
  if (!(dt > 0.0 && dt <= 0.1)) throw InputError("match: dt must lie in (0, 0.1]");
  unit_steps(dt);
}

void ImageMatchProblem::validate() const {
  spec.validate();
  require_same_domain(n0.domain(), n1.domain(), "match");
  if (!(dt > 0.0 && dt <= 0.1)) throw InputError("match: dt must lie in (0, 0.1]");
  if (record_every < 1) throw InputError("match: record_every must be >= 1");
  unit_steps(dt);
}

void MatchOptions::validate() const {
  if (!(epsilon > 0.0)) throw InputError("match: epsilon must be > 0");
  if (max_iters < 1 || max_outer < 1) throw InputError("match: iteration limits must be >= 1");
  if (!(tolerance > 0.0)) throw InputError("match: tolerance must be > 0");
  if (!(fd_step > 0.0)) throw InputError("match: fd_step must be > 0");
  if (image_modes < 0) throw InputError("match: image_modes must be >= 0");
}

std::size_t unit_steps(double dt) {
  const double n = std::round(1.0 / dt);
  if (n < 1.0 || std::abs(n * dt - 1.0) > 1e-9) throw InputError("dt must divide the unit time horizon");
  return static_cast<std::size_t>(n);
}

// ---- shooting ------------------------------------------------------------------

Trajectory<LandmarkState> shoot(const LandmarkMatchProblem& problem, const Points& sigma0) {
  if (sigma0.size() != problem.q0.size()) throw InputError("shoot: sigma0 has the wrong landmark count");
  const LagrangianSpec& spec = problem.spec;
  Trajectory<LandmarkState> traj;
  const NoiseBasis none;
  integrate(Scheme::deterministic_rk4, LandmarkState::zero_level(sigma0, problem.q0), spec, none,
            BrownianPath::zero(0, problem.dt, unit_steps(problem.dt)), [&](std::size_t, const LandmarkState& s) {
              traj.states.push_back(s);
              traj.hamiltonian.push_back(hamiltonian(s, spec));
              traj.el_residual.push_back(euler_lagrange_residual(s, spec));
            });
  return traj;
}

Trajectory<ImageState> shoot(const ImageMatchProblem& problem, const ScalarDensity& sigma0) {
  require_same_domain(sigma0.domain(), problem.n0.domain(), "shoot");
  const LagrangianSpec& spec = problem.spec;
  const std::size_t steps = unit_steps(problem.dt);
  const auto every = static_cast<std::size_t>(problem.record_every);
  Trajectory<ImageState> traj;
  const NoiseBasis none;
  integrate(Scheme::deterministic_rk4, ImageState::zero_level(sigma0, problem.n0), spec, none,
            BrownianPath::zero(0, problem.dt, steps), [&](std::size_t k, const ImageState& s) {
              if (k % every != 0 && k != steps) return;
              traj.states.push_back(s);
              traj.hamiltonian.push_back(hamiltonian(s, spec));
              traj.el_residual.push_back(euler_lagrange_residual(s, spec));
            });
  return traj;
}

namespace {

template <class State, class Lagrangian>
double trapezoid(const Trajectory<State>& traj, Lagrangian&& ell) {
  if (traj.states.size() < 2) return 0.0;
  double s = 0.0;
  double prev = ell(traj.states.front());
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double cur = ell(traj.states[k]);
    s += 0.5 * (traj.states[k].t - traj.states[k - 1].t) * (prev + cur);
    prev = cur;
  }
  return s;
}

}  // namespace

double action_value(const Trajectory<LandmarkState>& trajectory, const LagrangianSpec& spec) {
  return trapezoid(trajectory, [&](const LandmarkState& s) {
    return 0.5 * pair(s.mu, velocity(s, spec)) + 0.5 * spec.sigma_m_sq * pair(s.sigma, s.sigma) - potential(s.q, spec);
  });
}

double action_value(const Trajectory<ImageState>& trajectory, const LagrangianSpec& spec) {
  return trapezoid(trajectory, [&](const ImageState& s) {
    const double s2 = pair(s.sigma, ScalarField(s.domain(), s.sigma.values()));
    return 0.5 * pair(s.mu, velocity(s, spec)) + 0.5 * spec.sigma_m_sq * s2 - potential(s.n, spec);
  });
}

// ---- optimizer -----------------------------------------------------------------

DescentResult minimize(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                       double fd_step, double gradient_tolerance, int max_iters, int threads) {
  const std::size_t n = x0.size();
  auto gradient = [&](const std::vector<double>& x) {
    std::vector<double> g(n);
    parallel_for(n, threads, [&](std::size_t i) {
      const double h = fd_step * std::max(1.0, std::abs(x[i]));
      std::vector<double> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (f(xp) - f(xm)) / (2.0 * h);
    });
    return g;
  };
  auto norm2 = [](const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); };

  DescentResult r;
  r.x = std::move(x0);
  r.value = f(r.x);
  r.history.push_back(r.value);
  if (n == 0) {
    r.converged = true;
    return r;
  }
  std::vector<double> g = gradient(r.x);
  double alpha = 1.0 / std::max(1.0, std::sqrt(norm2(g)));
  for (r.iterations = 0; r.iterations < max_iters; ++r.iterations) {
    const double gg = norm2(g);
    if (std::sqrt(gg) <= gradient_tolerance) {
      r.converged = true;
      break;
    }
    // Armijo backtracking from the Barzilai-Borwein trial step
    std::vector<double> trial(n);
    double ftrial = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = r.x[i] - alpha * g[i];
      ftrial = f(trial);
      if (std::isfinite(ftrial) && ftrial <= r.value - 1e-4 * alpha * gg) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // -g is no descent direction at any step down to 2^-60: the gradient
      // is at the finite-difference noise level, i.e. the point is stationary
      r.converged = true;
      break;
    }
    const std::vector<double> gnew = gradient(trial);
    double ss = 0.0, sy = 0.0, xmax = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = trial[i] - r.x[i], y = gnew[i] - g[i];
      ss += s * s;
      sy += s * y;
      xmax = std::max(xmax, std::abs(trial[i]));
    }
    alpha = sy > 0.0 ? ss / sy : 2.0 * alpha;
    // finite-difference gradients bottom out near fd_step^2 and round-off,
    // so a vanishing step with no decrease also counts as stationary
    const bool stalled = std::sqrt(ss) <= 1e-10 * xmax && r.value - ftrial <= 1e-14 * std::max(1.0, std::abs(ftrial));
    r.x = std::move(trial);
    r.value = ftrial;
    r.history.push_back(r.value);
    g = gnew;
    if (stalled) {
      ++r.iterations;
      r.converged = true;
      break;
    }
  }
  if (!r.converged) r.converged = std::sqrt(norm2(g)) <= gradient_tolerance;
  return r;
}

// ---- matching ------------------------------------------------------------------

namespace {

struct Evaluation {
  double action = 0.0;
  std::vector<double> mismatch;  // endpoint constraint, n(1) - n1
  double weight = 1.0;           // quadrature weight of the misfit sum
};

struct Solution {
  std::vector<double> x;
  OptimizerReport report;
};

double misfit_of(const Evaluation& e) {
  double s = 0.0;
  for (double c : e.mismatch) s += c * c;
  return e.weight * s;
}

// Penalty objective, optionally wrapped in augmented-Lagrangian outer
// iterations that drive the mismatch itself to zero.
template <class Evaluate, class Residual>
Solution solve(Evaluate&& evaluate, Residual&& endpoint_residual, std::vector<double> x0, const MatchOptions& opt) {
  const double inv_eps2 = 1.0 / (opt.epsilon * opt.epsilon);
  std::vector<double> lambda;
  Solution sol;
  sol.x = std::move(x0);
  const int outer = opt.exact ? opt.max_outer : 1;
  const double gtol = 1e-3 * opt.tolerance;
  for (int o = 0; o < outer; ++o) {
    auto objective = [&](const std::vector<double>& x) {
      const Evaluation e = evaluate(x);
      double j = e.action + inv_eps2 * misfit_of(e);
      for (std::size_t i = 0; i < lambda.size(); ++i) j += e.weight * lambda[i] * e.mismatch[i];
      return j;
    };
    DescentResult inner = minimize(objective, sol.x, opt.fd_step, gtol, opt.max_iters, opt.threads);
    sol.x = inner.x;
    sol.report.iterations += inner.iterations;
    sol.report.outer_iterations = o + 1;
    sol.report.objective_history = inner.history;
    sol.report.converged = inner.converged;
    if (!opt.exact) break;
    const Evaluation e = evaluate(sol.x);
    double cmax = 0.0;
    for (double c : e.mismatch) cmax = std::max(cmax, std::abs(c));
    const double residual = endpoint_residual(sol.x);
    if (cmax <= opt.tolerance && residual <= opt.tolerance) {
      sol.report.converged = true;
      break;
    }
    sol.report.converged = false;
    if (lambda.empty()) lambda.assign(e.mismatch.size(), 0.0);
    for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] += 2.0 * inv_eps2 * e.mismatch[i];
  }
  return sol;
}

Points unflatten(const std::vector<double>& x, int dim) {
  Points p(x.size() / dim, Vec::Zero(dim));
  for (std::size_t a = 0; a < p.size(); ++a)
    for (int i = 0; i < dim; ++i) p[a](i) = x[a * dim + i];
  return p;
}

}  // namespace

LandmarkMatchResult match(const LandmarkMatchProblem& problem, const MatchOptions& options) {
  problem.validate();
  options.validate();
  const int d = static_cast<int>(problem.q0.front().size());
  auto evaluate = [&](const std::vector<double>& x) {
    const auto traj = shoot(problem, unflatten(x, d));
    Evaluation e;
    e.action = action_value(traj, problem.spec);
    for (std::size_t a = 0; a < problem.q1.size(); ++a)
      for (int i = 0; i < d; ++i) e.mismatch.push_back(traj.back().q[a](i) - problem.q1[a](i));
    return e;
  };
  auto residual = [&](const std::vector<double>& x) {
    return endpoint_residual(shoot(problem, unflatten(x, d)).back(), problem.q1, problem.spec);
  };
  const Solution sol = solve(evaluate, residual, std::vector<double>(problem.q0.size() * d, 0.0), options);

  LandmarkMatchResult r;
  r.sigma0 = unflatten(sol.x, d);
  r.trajectory = shoot(problem, r.sigma0);
  r.mu0 = r.trajectory.states.front().mu;
  r.action = action_value(r.trajectory, problem.spec);
  const Evaluation e = evaluate(sol.x);
  r.misfit = misfit_of(e);
  r.objective = r.action + r.misfit / (options.epsilon * options.epsilon);
  r.endpoint_residual = endpoint_residual(r.trajectory.back(), problem.q1, problem.spec);
  r.report = sol.report;
  return r;
}

// ---- image parameterisation ------------------------------------------------------

namespace {

std::vector<std::pair<int, int>> half_plane_waves(const Domain& domain, int modes) {
  std::vector<std::pair<int, int>> waves;
  if (domain.dim == 1) {
    for (int k = 1; k <= modes; ++k) waves.emplace_back(k, 0);
    return waves;
  }
  for (int k0 = 0; k0 <= modes; ++k0)
    for (int k1 = -modes; k1 <= modes; ++k1)
      if (k0 > 0 || k1 > 0) waves.emplace_back(k0, k1);
  return waves;
}

}  // namespace

std::size_t image_parameter_count(const Domain& domain, int modes) {
  return 1 + 2 * half_plane_waves(domain, modes).size();
}

ScalarDensity image_sigma(const Domain& domain, int modes, const std::vector<double>& coefficients) {
  const auto waves = half_plane_waves(domain, modes);
  if (coefficients.size() != 1 + 2 * waves.size()) throw InputError("image sigma: wrong coefficient count");
  const double w = two_pi / domain.length;
  return ScalarDensity::sample(domain, [&](const Vec& x) {
    double v = coefficients[0];
    for (std::size_t m = 0; m < waves.size(); ++m) {
      const double ph = w * (waves[m].first * x(0) + (domain.dim == 2 ? waves[m].second * x(1) : 0.0));
      v += coefficients[1 + 2 * m] * std::cos(ph) + coefficients[2 + 2 * m] * std::sin(ph);
    }
    return v;
  });
}

ImageMatchResult match(const ImageMatchProblem& problem, const MatchOptions& options) {
  problem.validate();
  options.validate();
  const Domain& dom = problem.n0.domain();
  const int modes = options.image_modes;
  auto evaluate = [&](const std::vector<double>& x) {
    const auto traj = shoot(problem, image_sigma(dom, modes, x));
    Evaluation e;
    e.action = action_value(traj, problem.spec);
    e.weight = dom.cell_volume();
    const ScalarField diff = traj.back().n - problem.n1;
    e.mismatch = diff.values();
    return e;
  };
  auto residual = [&](const std::vector<double>& x) {
    return endpoint_residual(shoot(problem, image_sigma(dom, modes, x)).back(), problem.n1, problem.spec);
  };
  const Solution sol = solve(evaluate, residual, std::vector<double>(image_parameter_count(dom, modes), 0.0), options);

  ImageMatchResult r;
  r.coefficients = sol.x;
  r.sigma0 = image_sigma(dom, modes, sol.x);
  r.trajectory = shoot(problem, r.sigma0);
  r.action = action_value(r.trajectory, problem.spec);
  const Evaluation e = evaluate(sol.x);
  r.misfit = misfit_of(e);
  r.objective = r.action + r.misfit / (options.epsilon * options.epsilon);
  r.endpoint_residual = endpoint_residual(r.trajectory.back(), problem.n1, problem.spec);
  r.report = sol.report;
  return r;
}

}  // namespace metamorph
