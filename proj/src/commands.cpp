#include "metamorph/commands.hpp"

#include "metamorph/matching.hpp"
#include "metamorph/uq.hpp"
#include "metamorph/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace metamorph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void prepare(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InputError("cannot create output directory '" + out.string() + "'");
}

json points_json(const Points& p) {
  json a = json::array();
  for (const Vec& v : p) a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return a;
}

json manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "metamorph";
  m["version"] = version_string;
  m["command"] = command;
  m["config_sha256"] = c.hash;
  m["seed"] = c.seed;
  m["structure"] = structure_name(c.structure);
  m["scheme"] = to_string(c.scheme);
  m["dt"] = c.dt;
  m["horizon"] = c.horizon;
  m["noise_modes"] = c.noise.J;
  m["outputs"] = outputs;
  m["config"] = c.document;
  return m;
}

// ---- trajectory tables -------------------------------------------------------------

std::vector<std::string> landmark_columns(std::size_t k, int d, std::string& notes) {
  std::vector<std::string> cols{"t"};
  const char* axis[] = {"x", "y"};
  for (std::size_t a = 0; a < k; ++a)
    for (int i = 0; i < d; ++i) cols.push_back("q" + std::to_string(a) + "_" + axis[i]);
  for (std::size_t a = 0; a < k; ++a)
    for (int i = 0; i < d; ++i) cols.push_back("sigma" + std::to_string(a) + "_" + axis[i]);
  cols.push_back("h");
  cols.push_back("momentum_map");
  notes = "t time; qA_x/qA_y landmark A position; sigmaA_* template covector of landmark A; h Hamiltonian; "
          "momentum_map sup norm of the velocity of mu + sigma<>q (zero on the Noether level)";
  return cols;
}

std::vector<double> landmark_row(const LandmarkState& s, const LagrangianSpec& spec) {
  std::vector<double> r{s.t};
  for (const Vec& q : s.q) r.insert(r.end(), q.data(), q.data() + q.size());
  for (const Vec& v : s.sigma) r.insert(r.end(), v.data(), v.data() + v.size());
  r.push_back(hamiltonian(s, spec));
  r.push_back(euler_lagrange_residual(s, spec));
  return r;
}

std::vector<std::string> image_columns(std::string& notes) {
  notes = "t time; n_min/n_max extremes of the image; n_integral integral of n; sigma_l2 L2 norm of sigma; "
          "u_max largest velocity magnitude; h Hamiltonian; momentum_map sup norm of the velocity of mu + sigma<>n";
  return {"t", "n_min", "n_max", "n_integral", "sigma_l2", "u_max", "h", "momentum_map"};
}

std::vector<double> image_row(const ImageState& s, const LagrangianSpec& spec) {
  const auto& n = s.n.values();
  double integral = 0.0, s2 = 0.0;
  for (double v : n) integral += v;
  for (double v : s.sigma.values()) s2 += v * v;
  const double dv = s.domain().cell_volume();
  return {s.t,
          *std::min_element(n.begin(), n.end()),
          *std::max_element(n.begin(), n.end()),
          integral * dv,
          std::sqrt(s2 * dv),
          velocity(s, spec).max_norm(),
          hamiltonian(s, spec),
          euler_lagrange_residual(s, spec)};
}

template <class State>
std::vector<std::string> columns_for(const State& s, std::string& notes) {
  if constexpr (std::is_same_v<State, LandmarkState>)
    return landmark_columns(s.q.size(), s.dim(), notes);
  else
    return image_columns(notes);
}

template <class State>
std::vector<double> row_for(const State& s, const LagrangianSpec& spec) {
  if constexpr (std::is_same_v<State, LandmarkState>)
    return landmark_row(s, spec);
  else
    return image_row(s, spec);
}

template <class State>
State simulate_to(const RunConfig& c, const State& initial, CsvWriter& csv) {
  const NoiseBasis noise = c.noise_basis();
  EnsembleConfig steps_of;
  steps_of.dt = c.dt;
  steps_of.horizon = c.horizon;
  const std::size_t steps = steps_of.steps();
  const BrownianPath path = c.scheme == Scheme::deterministic_rk4 ? BrownianPath::zero(noise.size(), c.dt, steps)
                                                                  : BrownianPath(c.seed, 0, noise.size(), c.dt, steps);
  return integrate(c.scheme, initial, c.spec, noise, path, [&](std::size_t k, const State& s) {
    if (k % c.record_every == 0 || k == steps) csv.row(row_for(s, c.spec));
  });
}

template <class State>
void write_trajectory(const fs::path& path, const std::string& kind, const RunConfig& c,
                      const std::vector<State>& states) {
  std::string notes;
  CsvWriter csv(path, kind, c.hash, c.seed, columns_for(states.front(), notes), notes);
  for (const State& s : states) csv.row(row_for(s, c.spec));
  csv.close();
}

}  // namespace

// ---- simulate ----------------------------------------------------------------------

int cmd_simulate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  prepare(out);
  std::vector<std::string> outputs{"trajectory.csv"};
  std::string notes;
  if (c.structure == Structure::landmark) {
    const LandmarkState s0 = c.landmark_state();
    CsvWriter csv(out / "trajectory.csv", "simulate", c.hash, c.seed, columns_for(s0, notes), notes);
    const LandmarkState s1 = simulate_to(c, s0, csv);
    csv.close();
    log << "simulate: " << s0.q.size() << " landmarks to t = " << s1.t << ", h = " << hamiltonian(s1, c.spec) << "\n";
  } else {
    const ImageState s0 = c.image_state();
    CsvWriter csv(out / "trajectory.csv", "simulate", c.hash, c.seed, columns_for(s0, notes), notes);
    const ImageState s1 = simulate_to(c, s0, csv);
    csv.close();
    write_raw_grid(out / "n_final.f64", s1.domain(), s1.n.values(), c.hash, c.seed);
    write_raw_grid(out / "sigma_final.f64", s1.domain(), s1.sigma.values(), c.hash, c.seed);
    outputs.insert(outputs.end(), {"n_final.f64", "sigma_final.f64"});
    log << "simulate: image to t = " << s1.t << ", h = " << hamiltonian(s1, c.spec) << "\n";
  }
  outputs.push_back("manifest.json");
  write_json(out / "manifest.json", manifest(c, "simulate", outputs));
  return exit_ok;
}

// ---- match -------------------------------------------------------------------------

int cmd_match(const RunConfig& c, const fs::path& out, int threads, std::ostream& log) {
  MatchOptions opt = c.match;
  opt.threads = threads;
  prepare(out);
  json r;
  r["config_sha256"] = c.hash;
  r["seed"] = c.seed;
  r["structure"] = structure_name(c.structure);
  r["epsilon"] = opt.epsilon;
  r["exact"] = opt.exact;
  r["tolerance"] = opt.tolerance;
  std::vector<std::string> outputs{"match_result.json", "trajectory.csv"};
  bool converged = false;
  if (c.structure == Structure::landmark) {
    if (c.q1.empty()) throw InputError("config: key 'target.landmarks': required for match");
    LandmarkMatchProblem p{c.q0, c.q1, c.spec, c.dt};
    const LandmarkMatchResult m = match(p, opt);
    r["sigma0"] = points_json(m.sigma0);
    r["mu0"] = {{"points", points_json(m.mu0.points)}, {"weights", points_json(m.mu0.weights)}};
    r["q_final"] = points_json(m.trajectory.back().q);
    r["action"] = m.action;
    r["misfit"] = m.misfit;
    r["objective"] = m.objective;
    r["endpoint_residual"] = m.endpoint_residual;
    r["endpoint_satisfied"] = m.endpoint_residual <= opt.tolerance;
    r["converged"] = converged = m.report.converged;
    r["iterations"] = m.report.iterations;
    r["outer_iterations"] = m.report.outer_iterations;
    r["objective_history"] = m.report.objective_history;
    write_trajectory(out / "trajectory.csv", "match", c, m.trajectory.states);
    log << "match: action " << m.action << ", endpoint residual " << m.endpoint_residual << ", "
        << m.report.iterations << " iterations\n";
  } else {
    if (!c.n1) throw InputError("config: key 'target.n': required for match");
    ImageMatchProblem p{*c.n0, *c.n1, c.spec, c.dt, static_cast<int>(c.record_every)};
    const ImageMatchResult m = match(p, opt);
    r["coefficients"] = m.coefficients;
    r["image_modes"] = opt.image_modes;
    r["action"] = m.action;
    r["misfit"] = m.misfit;
    r["objective"] = m.objective;
    r["endpoint_residual"] = m.endpoint_residual;
    r["endpoint_satisfied"] = m.endpoint_residual <= opt.tolerance;
    r["converged"] = converged = m.report.converged;
    r["iterations"] = m.report.iterations;
    r["outer_iterations"] = m.report.outer_iterations;
    r["objective_history"] = m.report.objective_history;
    write_trajectory(out / "trajectory.csv", "match", c, m.trajectory.states);
    write_raw_grid(out / "sigma0.f64", m.sigma0.domain(), m.sigma0.values(), c.hash, c.seed);
    write_raw_grid(out / "n_final.f64", m.sigma0.domain(), m.trajectory.back().n.values(), c.hash, c.seed);
    outputs.insert(outputs.end(), {"sigma0.f64", "n_final.f64"});
    log << "match: action " << m.action << ", misfit " << m.misfit << ", " << m.report.iterations << " iterations\n";
  }
  write_json(out / "match_result.json", r);
  outputs.push_back("manifest.json");
  write_json(out / "manifest.json", manifest(c, "match", outputs));
  if (!converged) {
    log << "match: optimizer did not converge\n";
    return exit_numerical;
  }
  return exit_ok;
}

// ---- uq ----------------------------------------------------------------------------

int cmd_uq(const RunConfig& c, const fs::path& out, int threads, std::ostream& log) {
  EnsembleConfig e;
  e.scheme = c.scheme;
  e.dt = c.dt;
  e.horizon = c.horizon;
  e.samples = c.n_samples;
  e.master_seed = c.seed;
  e.threads = threads;
  e.record_every = c.uq_record_every;
  e.probes = c.probes;
  const NoiseBasis noise = c.noise_basis();
  prepare(out);
  const EnsembleResult res = c.structure == Structure::landmark ? run_ensemble(c.landmark_state(), c.spec, noise, e)
                                                                : run_ensemble(c.image_state(), c.spec, noise, e);
  std::vector<std::string> names;
  if (c.structure == Structure::landmark) {
    const char* axis[] = {"x", "y"};
    for (std::size_t a = 0; a < c.q0.size(); ++a)
      for (int i = 0; i < c.domain.dim; ++i) names.push_back("q" + std::to_string(a) + "_" + axis[i]);
  } else {
    const std::size_t m = c.probes.empty() ? c.domain.size() : c.probes.size();
    for (std::size_t j = 0; j < m; ++j) names.push_back("n" + std::to_string(j));
  }

  std::vector<std::string> cols{"index", "ok"};
  cols.insert(cols.end(), names.begin(), names.end());
  cols.push_back("momentum_drift");
  CsvWriter samples(out / "samples.csv", "uq", c.hash, c.seed, cols,
                    "index sample number (also its Brownian stream); ok 1 if the path stayed finite; terminal "
                    "summary (landmark positions, or n at the probe points); momentum_drift max momentum map norm "
                    "along the path");
  json failures = json::array();
  for (const auto& s : res.samples) {
    std::vector<double> row{static_cast<double>(s.index), s.ok ? 1.0 : 0.0};
    if (s.ok)
      row.insert(row.end(), s.terminal.begin(), s.terminal.end());
    else
      row.insert(row.end(), names.size(), std::nan(""));
    row.push_back(s.ok ? s.momentum_drift : std::nan(""));
    samples.row(row);
    if (!s.ok) failures.push_back({{"index", s.index}, {"step", s.failed_step}, {"error", s.error}});
  }
  samples.close();

  json st;
  st["config_sha256"] = c.hash;
  st["seed"] = c.seed;
  st["structure"] = structure_name(c.structure);
  st["scheme"] = to_string(c.scheme);
  st["n_samples"] = c.n_samples;
  st["failures"] = failures;
  st["columns"] = names;
  std::vector<std::string> outputs{"samples.csv", "statistics.json"};
  if (res.failures() < res.samples.size()) {
    const EnsembleStatistics s = ensemble_statistics(res);
    st["samples_used"] = s.samples;
    st["mean"] = s.mean;
    st["standard_error"] = s.standard_error;
    st["covariance_available"] = s.covariance.has_value();
    if (s.covariance) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < s.covariance->rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(s.covariance->cols()));
        for (Eigen::Index j = 0; j < s.covariance->cols(); ++j) row[static_cast<std::size_t>(j)] = (*s.covariance)(i, j);
        rows.push_back(row);
      }
      st["covariance"] = rows;
    } else {
      st["covariance"] = nullptr;
    }
    st["momentum_drift_quantiles"] = {{"q05", s.drift_q05}, {"q50", s.drift_q50}, {"q95", s.drift_q95}};
    if (!s.variance_series.empty()) {
      std::vector<std::string> vcols{"t"};
      for (const auto& n : names) vcols.push_back("var_" + n);
      CsvWriter var(out / "variance.csv", "uq", c.hash, c.seed, vcols,
                    "t time; var_* unbiased sample variance of each summary component across the ensemble");
      for (std::size_t r = 0; r < s.variance_series.size(); ++r) {
        std::vector<double> row{res.times[r]};
        row.insert(row.end(), s.variance_series[r].begin(), s.variance_series[r].end());
        var.row(row);
      }
      var.close();
      outputs.push_back("variance.csv");
    }
  } else {
    st["samples_used"] = 0;
    st["covariance_available"] = false;
    st["covariance"] = nullptr;
  }
  write_json(out / "statistics.json", st);
  outputs.push_back("manifest.json");
  write_json(out / "manifest.json", manifest(c, "uq", outputs));
  log << "uq: " << res.samples.size() << " samples, " << res.failures() << " failed\n";
  return res.failures() > 0 ? exit_numerical : exit_ok;
}

// ---- verify ------------------------------------------------------------------------

int cmd_verify(const std::optional<RunConfig>& config, const std::optional<fs::path>& out, std::ostream& log) {
  checks::VerifySettings st;
  if (config) {
    const RunConfig& c = *config;
    st.dt = c.dt;
    st.horizon = c.horizon;
    st.seed = c.seed;
    const NoiseBasis noise = c.noise_basis();
    if (c.structure == Structure::landmark) {
      if (c.domain.dim != 2) throw InputError("verify: landmark checks need planar (2D) landmarks");
      st.images = false;
      st.landmark_spec = c.spec;
      st.landmark_state = c.landmark_state();
      st.landmark_noise = noise;
    } else {
      st.landmarks = false;
      st.image_spec = c.spec;
      st.image_state = c.image_state();
      if (c.noise.J == 0)
        st.image_noise_vectors.clear();
      else if (c.noise.kind == "constant")
        st.image_noise_vectors = c.noise.vectors;
      else
        st.image_noise_vectors = {Vec::Constant(c.domain.dim, c.noise.amplitudes.front())};
    }
  }
  const auto results = checks::run_verification(st);
  bool failed = false;
  json report = json::array();
  log << "check                                   status   value        threshold    detail\n";
  for (const auto& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "%-40s %-8s %-12.3e %-12.3e ", r.name.c_str(), r.status.c_str(), r.value,
                  r.threshold);
    log << line << r.detail << "\n";
    failed = failed || r.status == "fail";
    report.push_back({{"name", r.name}, {"status", r.status}, {"value", r.value}, {"threshold", r.threshold},
                      {"detail", r.detail}});
  }
  log << (failed ? "verify: FAILED\n" : "verify: all checks passed\n");
  if (out) {
    prepare(*out);
    json doc;
    doc["tool"] = "metamorph";
    doc["version"] = version_string;
    doc["config_sha256"] = config ? config->hash : "default";
    doc["seed"] = config ? config->seed : 0;
    doc["passed"] = !failed;
    doc["checks"] = report;
    write_json(*out / "verify.json", doc);
  }
  return failed ? exit_verification : exit_ok;
}

}  // namespace metamorph
