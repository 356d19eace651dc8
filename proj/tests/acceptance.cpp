// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are fixed
// here and not configurable.
//
//   acceptance [--only N]... [--skip N]...

#include "bracket_harness.hpp"

#include "metamorph/commands.hpp"
#include "metamorph/matching.hpp"
#include "metamorph/uq.hpp"
#include "metamorph/verify.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

using namespace metamorph;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

// tolerances
constexpr double duality_tol = 1e-10;
constexpr double coadjoint_tol = 1e-8;
constexpr double hamiltonian_tol = 1e-8;
constexpr double noether_tol = 1e-6;
constexpr double form_tol = 1e-6;
constexpr double match_sigma_tol = 1e-6;
constexpr double match_endpoint_tol = 1e-6;
constexpr double ito_tol = 1e-10;
constexpr double gap_ratio_min = 1.8;
constexpr double heun_slope_min = 0.4;
constexpr double rk4_slope = 4.0, rk4_slope_tol = 0.5;
constexpr double advection_ratio_min = 1.8;
constexpr double translation_se = 3.0;
constexpr double skew_tol = 1e-12;
constexpr double jacobi_tol = 1e-4;

Verdict duality() {
  const double l = checks::landmark_duality_residual(1, 20, 5);
  const double i1 = checks::image_duality_residual(Domain::grid(1, 64), 2, 20);
  const double i2 = checks::image_duality_residual(Domain::grid(2, 64), 3, 20);
  const double worst = std::max({l, i1, i2});
  return {worst <= duality_tol,
          "landmarks " + fmt(l) + ", grid 1D " + fmt(i1) + ", grid 2D " + fmt(i2) + " (tol " + fmt(duality_tol) + ")"};
}

Verdict coadjoint() {
  LagrangianSpec spec;
  const double l = checks::landmark_coadjoint_residual(spec, 4, 20);
  const double i1 = checks::image_coadjoint_residual(Domain::grid(1, 64), spec, 5, 20);
  const double i2 = checks::image_coadjoint_residual(Domain::grid(2, 64), spec, 6, 20);
  const double worst = std::max({l, i1, i2});
  return {worst <= coadjoint_tol,
          "landmarks " + fmt(l) + ", grid 1D " + fmt(i1) + ", grid 2D " + fmt(i2) + " (tol " + fmt(coadjoint_tol) + ")"};
}

Verdict hamiltonian_conservation() {
  const auto c = checks::conservation(checks::default_landmarks(), LagrangianSpec{}, 1e-3, 1.0);
  return {c.hamiltonian_drift <= hamiltonian_tol,
          "3 landmarks, RK4 dt 1e-3: max |h(t) - h(0)| / |h(0)| = " + fmt(c.hamiltonian_drift)};
}

Verdict noether_level() {
  LagrangianSpec spec;
  const auto l = checks::conservation(checks::default_landmarks(), spec, 1e-3, 1.0);
  const auto i = checks::conservation(checks::default_image(Domain::grid(1, 64)), spec, 1e-3, 1.0);
  const double rl = l.el_residual / l.scale, ri = i.el_residual / i.scale;
  return {rl <= noether_tol && ri <= noether_tol,
          "momentum map / scale: landmarks " + fmt(rl) + ", image " + fmt(ri)};
}

Verdict forms() {
  const LandmarkState s0 = checks::default_landmarks();
  PointMomentum extra(2, Points{Vec::Constant(2, 0.5)}, Points{Vec::Constant(2, 0.3)});
  const LandmarkState with_m = LandmarkState::from_parts(0.0, concat(total_momentum(s0), extra), s0.sigma, s0.q);
  const double r = checks::form_equivalence(with_m, LagrangianSpec{}, 1e-3, 1.0);
  return {r <= form_tol, "terminal |M_tangled - M_untangled| / |M(0)| = " + fmt(r)};
}

Verdict matching_oracle() {
  const LandmarkMatchProblem p{bracket::pts({{0.0, 0.0}}), bracket::pts({{1.0, 0.0}}), LagrangianSpec{}, 0.01};
  MatchOptions opt;
  opt.exact = true;
  opt.tolerance = 1e-7;
  const LandmarkMatchResult m = match(p, opt);
  const double err = (m.sigma0[0] - (Vec(2) << 2.0 / 3.0, 0.0).finished()).norm();
  return {err <= match_sigma_tol && m.endpoint_residual <= match_endpoint_tol,
          "|sigma0 - (2/3, 0)| = " + fmt(err) + ", endpoint residual " + fmt(m.endpoint_residual)};
}

Verdict ito_oracle() {
  const double r1 = checks::constant_noise_ito_residual(Domain::grid(1, 64), {Vec::Constant(1, 0.3)}, 7);
  Vec a(2), b(2);
  a << 0.3, -0.2;
  b << 0.1, 0.25;
  const double r2 = checks::constant_noise_ito_residual(Domain::grid(2, 64), {a, b}, 8);
  return {std::max(r1, r2) <= ito_tol, "spectral residual grid 1D " + fmt(r1) + ", grid 2D " + fmt(r2)};
}

Verdict scheme_consistency() {
  const OrderStudy gap = scheme_gap_study(checks::default_landmarks(), LagrangianSpec{}, checks::default_bump_noise(2),
                                          {4e-3, 2e-3, 1e-3}, 1.0, 64, 9);
  const double r1 = gap.errors[0] / gap.errors[1], r2 = gap.errors[1] / gap.errors[2];
  return {std::min(r1, r2) >= gap_ratio_min, "Heun vs Euler-Maruyama gaps " + fmt(gap.errors[0]) + " " +
                                                 fmt(gap.errors[1]) + " " + fmt(gap.errors[2]) + ", ratios " +
                                                 fmt(r1) + " " + fmt(r2) + " (need >= " + fmt(gap_ratio_min) + ")"};
}

Verdict strong_order() {
  const std::vector<double> dts{8e-3, 4e-3, 2e-3, 1e-3};
  const LandmarkState s0 = checks::stiff_landmarks();
  const LagrangianSpec spec = checks::stiff_spec();
  const OrderStudy heun =
      strong_order_estimate(Scheme::stratonovich_heun, s0, spec, checks::default_bump_noise(1), dts, 1.0, 256, 10);
  const OrderStudy rk4 = strong_order_estimate(Scheme::deterministic_rk4, s0, spec, NoiseBasis{}, dts, 1.0, 1, 0);
  return {heun.slope >= heun_slope_min && std::abs(rk4.slope - rk4_slope) <= rk4_slope_tol,
          "Heun slope " + fmt(heun.slope) + " (256 paths), RK4 slope " + fmt(rk4.slope)};
}

Verdict stochastic_advection() {
  const auto d = checks::advection_drift_study(checks::default_untangled(), LagrangianSpec{}, checks::default_bump_noise(2),
                                               checks::default_test_field(), {1e-3, 2e-3, 4e-3}, 1.0, 16, 11);
  const double r1 = d[1] / d[0], r2 = d[2] / d[1];
  return {std::min(r1, r2) >= advection_ratio_min, "mean relative drift " + fmt(d[2]) + " " + fmt(d[1]) + " " +
                                                       fmt(d[0]) + " at dt 4e-3 2e-3 1e-3, ratios " + fmt(r2) + " " +
                                                       fmt(r1)};
}

Verdict brownian_translation() {
  const LandmarkState s0 = LandmarkState::zero_level(bracket::pts({{0.0, 0.0}}), bracket::pts({{0.3, -0.2}}));
  const NoiseBasis noise = NoiseBasis::constant(bracket::pts({{0.6, 0.8}}));
  EnsembleConfig cfg;
  cfg.scheme = Scheme::stratonovich_heun;
  cfg.dt = 0.02;
  cfg.horizon = 1.0;
  cfg.samples = 10000;
  cfg.master_seed = 12;
  const EnsembleResult r = run_ensemble(s0, LagrangianSpec{}, noise, cfg);
  const auto st = ensemble_statistics(r);
  // total variance of the terminal position and its standard error from the
  // per-sample squared deviations
  std::vector<double> d2;
  for (const auto& s : r.samples) d2.push_back(std::pow(s.terminal[0] - st.mean[0], 2) + std::pow(s.terminal[1] - st.mean[1], 2));
  const double n = static_cast<double>(d2.size());
  double m = 0.0, v = 0.0;
  for (double x : d2) m += x;
  m /= n;
  for (double x : d2) v += (x - m) * (x - m);
  const double variance = m * n / (n - 1);
  const double se = std::sqrt(v / (n - 1) / n) * n / (n - 1);
  const double expected = 1.0;  // |xi|^2 T
  const double z = std::abs(variance - expected) / se;
  return {z <= translation_se, "terminal variance " + fmt(variance) + " vs |xi|^2 T = 1, " + fmt(z) + " SE"};
}

Verdict bracket_structure() {
  const double skew = bracket::skew_residual(13, 20);
  std::mt19937_64 rng(14);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto j = bracket::jacobi_terms(rng);
    worst = std::max(worst, std::abs(j.sum()) / j.scale());
  }
  return {skew <= skew_tol && worst <= jacobi_tol, "skew residual " + fmt(skew) + ", Jacobi residual / scale " + fmt(worst)};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), dir).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

Verdict reproducibility() {
  const fs::path root = fs::temp_directory_path() / "metamorph_acceptance_13";
  fs::remove_all(root);
  const RunConfig landmark = parse_config(nlohmann::json::parse(R"({
    "structure": "landmark",
    "initial": {"landmarks": [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                "sigma": [[0.5, 0.3], [-0.4, 0.2], [0.1, -0.6]]},
    "target": {"landmarks": [[-0.8, 0.2], [1.1, 0.1], [0.0, 1.3]]},
    "noise": {"kind": "bumps", "centers": [[0.0, 0.0], [0.5, 0.5]], "directions": [0, 1],
              "amplitudes": [0.2, 0.2]},
    "dt": 0.02, "seed": 2024,
    "match": {"max_iters": 40},
    "uq": {"n_samples": 64, "record_every": 10}
  })"));
  const RunConfig image = parse_config(nlohmann::json::parse(R"({
    "structure": "image",
    "domain": {"dim": 1, "points": 32},
    "initial": {"n": {"gaussian": {"center": [[3.0]], "width": 0.8}}},
    "noise": {"kind": "fourier", "J": 2, "amplitudes": [0.1]},
    "dt": 0.02, "seed": 7,
    "uq": {"n_samples": 16, "probes": [[1.0], [3.0]], "record_every": 10}
  })"));
  std::ostringstream log;
  auto run_all = [&](const std::string& name, int threads) {
    const fs::path d = root / name;
    cmd_simulate(landmark, d / "simulate", log);
    cmd_match(landmark, d / "match", threads, log);
    cmd_uq(landmark, d / "uq", threads, log);
    cmd_simulate(image, d / "image_simulate", log);
    cmd_uq(image, d / "image_uq", threads, log);
    return read_tree(d);
  };
  const auto a = run_all("a", 1);
  const auto b = run_all("b", 1);
  const auto c = run_all("c", 3);
  std::vector<std::string> differing;
  for (const auto& [file, bytes] : a) {
    if (b.count(file) == 0 || b.at(file) != bytes) differing.push_back(file + " (rerun)");
    if (c.count(file) == 0 || c.at(file) != bytes) differing.push_back(file + " (3 threads)");
  }
  const bool same_sets = a.size() == b.size() && a.size() == c.size();
  fs::remove_all(root);
  std::string detail = std::to_string(a.size()) + " files compared across reruns and thread counts 1, 3";
  if (!differing.empty()) detail += "; differing: " + differing.front();
  return {same_sets && differing.empty() && a.size() >= 12, detail};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, skip;
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--skip", skip, "skip these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "duality identities", duality},
      {2, "coadjoint motion", coadjoint},
      {3, "Hamiltonian conservation", hamiltonian_conservation},
      {4, "Noether zero level", noether_level},
      {5, "tangled/untangled equivalence", forms},
      {6, "matching oracle", matching_oracle},
      {7, "Ito correction oracle", ito_oracle},
      {8, "pathwise scheme consistency", scheme_consistency},
      {9, "strong order", strong_order},
      {10, "stochastic advection", stochastic_advection},
      {11, "Brownian translation law", brownian_translation},
      {12, "bracket structure", bracket_structure},
      {13, "reproducibility", reproducibility},
  };
  const std::set<int> only_set(only.begin(), only.end()), skip_set(skip.begin(), skip.end());
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only_set.empty() && only_set.count(c.id) == 0) continue;
    if (skip_set.count(c.id)) {
      std::printf("SKIP [%2d] %s\n", c.id, c.name.c_str());
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%2d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
