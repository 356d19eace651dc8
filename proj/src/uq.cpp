#include "metamorph/uq.hpp"

#include "metamorph/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace metamorph {

std::size_t EnsembleConfig::steps() const {
  const double n = std::round(horizon / dt);
  if (n < 1.0 || std::abs(n * dt - horizon) > 1e-9 * std::max(1.0, horizon))
    throw InputError("ensemble: dt must divide the horizon");
  return static_cast<std::size_t>(n);
}

void EnsembleConfig::validate() const {
  if (!(dt > 0.0)) throw InputError("ensemble: dt must be > 0");
  if (!(horizon > 0.0)) throw InputError("ensemble: horizon must be > 0");
  if (samples < 1) throw InputError("ensemble: n_samples must be >= 1");
  if (threads < 1) throw InputError("ensemble: threads must be >= 1");
  steps();
}

std::size_t EnsembleResult::failures() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return !s.ok; }));
}

namespace {

std::vector<double> summary_of(const LandmarkState& s, const EnsembleConfig&) {
  std::vector<double> out;
  for (const Vec& q : s.q) out.insert(out.end(), q.data(), q.data() + q.size());
  return out;
}

std::vector<double> summary_of(const ImageState& s, const EnsembleConfig& config) {
  if (config.probes.empty()) return s.n.values();
  const auto spectral = Spectral::for_domain(s.domain());
  const TrigInterpolant interp(*spectral, s.n.values());
  std::vector<double> out;
  out.reserve(config.probes.size());
  for (const Vec& x : config.probes) out.push_back(interp.value(x));
  return out;
}

double momentum_size(const LandmarkState& s, const LagrangianSpec& spec) { return euler_lagrange_residual(s, spec); }
double momentum_size(const ImageState& s, const LagrangianSpec& spec) { return euler_lagrange_residual(s, spec); }

template <class State>
EnsembleResult run(const State& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                   const EnsembleConfig& config) {
  config.validate();
  spec.validate();
  initial.check();
  const std::size_t steps = config.steps();
  EnsembleResult result;
  result.master_seed = config.master_seed;
  for (std::size_t k = 1; k <= steps; ++k)
    if ((config.record_every > 0 && k % config.record_every == 0) || k == steps)
      result.times.push_back(initial.t + k * config.dt);
  result.samples.resize(config.samples);

  parallel_for(config.samples, config.threads, [&](std::size_t i) {
    SampleSummary& out = result.samples[i];
    out.index = i;
    const BrownianPath path = config.scheme == Scheme::deterministic_rk4
                                  ? BrownianPath::zero(noise.size(), config.dt, steps)
                                  : BrownianPath(config.master_seed, i, noise.size(), config.dt, steps);
    try {
      const State terminal =
          integrate(config.scheme, initial, spec, noise, path, [&](std::size_t k, const State& s) {
            out.momentum_drift = std::max(out.momentum_drift, momentum_size(s, spec));
            if (k == 0) return;
            if ((config.record_every > 0 && k % config.record_every == 0) || k == steps)
              out.series.push_back(summary_of(s, config));
          });
      out.terminal = summary_of(terminal, config);
    } catch (const NumericalError& e) {
      out.ok = false;
      out.error = e.what();
      out.failed_step = e.step();
      out.series.clear();
    }
  });
  return result;
}

}  // namespace

EnsembleResult run_ensemble(const LandmarkState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const EnsembleConfig& config) {
  return run(initial, spec, noise, config);
}

EnsembleResult run_ensemble(const ImageState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const EnsembleConfig& config) {
  return run(initial, spec, noise, config);
}

double quantile(std::vector<double> data, double q) {
  if (data.empty()) throw InputError("quantile of an empty sample");
  std::sort(data.begin(), data.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(data.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, data.size() - 1);
  return data[lo] + (pos - static_cast<double>(lo)) * (data[hi] - data[lo]);
}

EnsembleStatistics ensemble_statistics(const EnsembleResult& result) {
  std::vector<const SampleSummary*> ok;
  for (const auto& s : result.samples)
    if (s.ok) ok.push_back(&s);
  if (ok.empty()) throw InputError("ensemble statistics: no successful samples");
  const std::size_t n = ok.size();
  const std::size_t m = ok.front()->terminal.size();

  EnsembleStatistics st;
  st.samples = n;
  // accumulate in index order so the result does not depend on threading
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (const auto* s : ok) mean += Eigen::Map<const Eigen::VectorXd>(s->terminal.data(), static_cast<Eigen::Index>(m));
  mean /= static_cast<double>(n);
  st.mean.assign(mean.data(), mean.data() + m);
  st.standard_error.assign(m, 0.0);
  if (n >= 2) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (const auto* s : ok) {
      const Eigen::VectorXd d =
          Eigen::Map<const Eigen::VectorXd>(s->terminal.data(), static_cast<Eigen::Index>(m)) - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(n - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    for (std::size_t j = 0; j < m; ++j)
      st.standard_error[j] = std::sqrt(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) / n);
    st.covariance = std::move(cov);

    const std::size_t rows = ok.front()->series.size();
    st.variance_series.assign(rows, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < m; ++j) {
        double mu = 0.0;
        for (const auto* s : ok) mu += s->series[r][j];
        mu /= static_cast<double>(n);
        double v = 0.0;
        for (const auto* s : ok) v += (s->series[r][j] - mu) * (s->series[r][j] - mu);
        st.variance_series[r][j] = v / static_cast<double>(n - 1);
      }
  }
  std::vector<double> drifts;
  for (const auto* s : ok) drifts.push_back(s->momentum_drift);
  st.drift_q05 = quantile(drifts, 0.05);
  st.drift_q50 = quantile(drifts, 0.5);
  st.drift_q95 = quantile(drifts, 0.95);
  return st;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("log slope: need two or more matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double state_distance(const LandmarkState& a, const LandmarkState& b) {
  if (a.q.size() != b.q.size()) throw InputError("state distance: landmark count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.q.size(); ++i) s += (a.q[i] - b.q[i]).squaredNorm() + (a.sigma[i] - b.sigma[i]).squaredNorm();
  return std::sqrt(s);
}

double state_distance(const ImageState& a, const ImageState& b) {
  require_same_domain(a.domain(), b.domain(), "state distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.n.size(); ++i) {
    const double dn = a.n[i] - b.n[i], ds = a.sigma[i] - b.sigma[i];
    s += dn * dn + ds * ds;
  }
  return std::sqrt(s * a.domain().cell_volume());
}

namespace {

struct Levels {
  std::vector<double> dts;           // as given, sorted descending
  std::vector<std::size_t> factors;  // reference steps per level step
  double reference_dt = 0.0;
  std::size_t reference_steps = 0;
};

Levels make_levels(std::vector<double> dts, double horizon, std::size_t refinement) {
  if (dts.size() < 3) throw InputError("order study: at least three dt levels are required");
  std::sort(dts.begin(), dts.end(), std::greater<>());
  Levels lv;
  lv.dts = dts;
  lv.reference_dt = dts.back() / static_cast<double>(refinement);
  EnsembleConfig probe;
  probe.dt = lv.reference_dt;
  probe.horizon = horizon;
  lv.reference_steps = probe.steps();
  for (double dt : dts) {
    const double f = std::round(dt / lv.reference_dt);
    if (f < 1.0 || std::abs(f * lv.reference_dt - dt) > 1e-9 * dt)
      throw InputError("order study: dt levels must be integer multiples of the reference step");
    lv.factors.push_back(static_cast<std::size_t>(f));
    if (lv.reference_steps % lv.factors.back() != 0) throw InputError("order study: dt must divide the horizon");
  }
  return lv;
}

template <class State>
OrderStudy order_study(Scheme scheme, const State& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                       const std::vector<double>& dt_levels, double horizon, std::size_t paths,
                       std::uint64_t master_seed, int threads) {
  if (paths < 1) throw InputError("order study: at least one path is required");
  const Levels lv = make_levels(dt_levels, horizon, 8);
  const bool deterministic = scheme == Scheme::deterministic_rk4 || noise.empty();
  std::vector<std::vector<double>> err(paths, std::vector<double>(lv.dts.size(), 0.0));
  parallel_for(paths, threads, [&](std::size_t p) {
    const BrownianPath fine = deterministic ? BrownianPath::zero(noise.size(), lv.reference_dt, lv.reference_steps)
                                            : BrownianPath(master_seed, p, noise.size(), lv.reference_dt,
                                                           lv.reference_steps);
    const State ref = integrate(scheme, initial, spec, noise, fine);
    for (std::size_t l = 0; l < lv.dts.size(); ++l)
      err[p][l] = state_distance(integrate(scheme, initial, spec, noise, fine.coarsened(lv.factors[l])), ref);
  });
  OrderStudy out;
  out.dts = lv.dts;
  out.errors.assign(lv.dts.size(), 0.0);
  for (const auto& row : err)
    for (std::size_t l = 0; l < row.size(); ++l) out.errors[l] += row[l] / static_cast<double>(paths);
  out.slope = log_slope(out.dts, out.errors);
  return out;
}

}  // namespace

OrderStudy strong_order_estimate(Scheme scheme, const LandmarkState& initial, const LagrangianSpec& spec,
                                 const NoiseBasis& noise, const std::vector<double>& dt_levels, double horizon,
                                 std::size_t paths, std::uint64_t master_seed, int threads) {
  return order_study(scheme, initial, spec, noise, dt_levels, horizon, paths, master_seed, threads);
}

OrderStudy strong_order_estimate(Scheme scheme, const ImageState& initial, const LagrangianSpec& spec,
                                 const NoiseBasis& noise, const std::vector<double>& dt_levels, double horizon,
                                 std::size_t paths, std::uint64_t master_seed, int threads) {
  return order_study(scheme, initial, spec, noise, dt_levels, horizon, paths, master_seed, threads);
}

OrderStudy scheme_gap_study(const LandmarkState& initial, const LagrangianSpec& spec, const NoiseBasis& noise,
                            const std::vector<double>& dt_levels, double horizon, std::size_t paths,
                            std::uint64_t master_seed, int threads) {
  if (paths < 1) throw InputError("gap study: at least one path is required");
  const Levels lv = make_levels(dt_levels, horizon, 1);
  std::vector<std::vector<double>> gap(paths, std::vector<double>(lv.dts.size(), 0.0));
  parallel_for(paths, threads, [&](std::size_t p) {
    const BrownianPath fine(master_seed, p, noise.size(), lv.reference_dt, lv.reference_steps);
    for (std::size_t l = 0; l < lv.dts.size(); ++l) {
      const BrownianPath path = fine.coarsened(lv.factors[l]);
      gap[p][l] = state_distance(integrate(Scheme::stratonovich_heun, initial, spec, noise, path),
                                 integrate(Scheme::ito_euler_maruyama, initial, spec, noise, path));
    }
  });
  OrderStudy out;
  out.dts = lv.dts;
  out.errors.assign(lv.dts.size(), 0.0);
  for (const auto& row : gap)
    for (std::size_t l = 0; l < row.size(); ++l) out.errors[l] += row[l] / static_cast<double>(paths);
  out.slope = log_slope(out.dts, out.errors);
  return out;
}

// ---- advection of the total momentum ---------------------------------------------

namespace {

double relative_drift(const std::vector<double>& values) {
  const double c0 = values.front();
  double m = 0.0;
  for (double c : values) m = std::max(m, std::abs(c - c0));
  return std::abs(c0) > 0.0 ? m / std::abs(c0) : m;
}

double pulled_back_pairing(const PointMomentum& M, const TracerCloud& cloud, const PlaneField& w) {
  double c = 0.0;
  for (std::size_t b = 0; b < M.size(); ++b) c += M.weights[b].dot(cloud.F[b] * w.value(cloud.labels[b]));
  return c;
}

double pulled_back_pairing(const OneFormDensity& M, const TracerCloud& cloud, const VectorField& w) {
  const Domain& dom = M.domain();
  VectorField as_field(dom);
  for (int c = 0; c < dom.dim; ++c) as_field.component(c) = M.component(c);
  const GridFieldSampler sampler(as_field);
  double c = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    c += cloud.F[i].determinant() * sampler.value(cloud.x[i]).dot(cloud.F[i] * w.at(i));
  return c * dom.cell_volume();
}

}  // namespace

AdvectionSeries advection_invariant_series(Scheme scheme, const LandmarkUntangledState& initial,
                                           const LagrangianSpec& spec, const NoiseBasis& noise,
                                           const BrownianPath& path, const PlaneField& w) {
  initial.check();
  AdvectionSeries out;
  LandmarkUntangledState s = initial;
  TracerCloud cloud = TracerCloud::at(initial.M.points);
  out.times.push_back(s.t);
  out.values.push_back(pulled_back_pairing(s.M, cloud, w));
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const auto dw = path.increment(k);
    LandmarkUntangledState next = step(scheme, s, spec, noise, path.dt(), dw);
    if (!next.finite()) throw NumericalError("non-finite state", static_cast<long>(k + 1));
    cloud = advance_tracers(cloud, s, next, spec, noise, path.dt(), dw);
    s = std::move(next);
    out.times.push_back(s.t);
    out.values.push_back(pulled_back_pairing(s.M, cloud, w));
  }
  out.max_relative_drift = relative_drift(out.values);
  return out;
}

AdvectionSeries advection_invariant_series(Scheme scheme, const ImageState& initial, const LagrangianSpec& spec,
                                           const NoiseBasis& noise, const BrownianPath& path, const VectorField& w) {
  initial.check();
  require_same_domain(initial.domain(), w.domain(), "advection series");
  const Domain& dom = initial.domain();
  Points labels;
  for (std::size_t i = 0; i < dom.size(); ++i) labels.push_back(dom.node(i));
  AdvectionSeries out;
  ImageState s = initial;
  TracerCloud cloud = TracerCloud::at(labels);
  out.times.push_back(s.t);
  out.values.push_back(pulled_back_pairing(total_momentum(s), cloud, w));
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const auto dw = path.increment(k);
    ImageState next = step(scheme, s, spec, noise, path.dt(), dw);
    if (!next.finite()) throw NumericalError("non-finite state", static_cast<long>(k + 1));
    cloud = advance_tracers(cloud, s, next, spec, noise, path.dt(), dw);
    s = std::move(next);
    out.times.push_back(s.t);
    out.values.push_back(pulled_back_pairing(total_momentum(s), cloud, w));
  }
  out.max_relative_drift = relative_drift(out.values);
  return out;
}

}  // namespace metamorph
