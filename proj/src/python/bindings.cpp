// Python module metamorph._core: the command workflows plus a few direct
// landmark entry points. Points cross the boundary as lists of [x, y].

#include "metamorph/commands.hpp"
#include "metamorph/verify.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace metamorph;

namespace {

Points to_points(const std::vector<std::vector<double>>& xs) {
  Points out;
  for (const auto& x : xs) {
    if (x.empty() || x.size() > 2) throw InputError("points must have 1 or 2 coordinates");
    out.push_back(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())));
  }
  return out;
}

std::vector<std::vector<double>> from_points(const Points& p) {
  std::vector<std::vector<double>> out;
  for (const Vec& v : p) out.emplace_back(v.data(), v.data() + v.size());
  return out;
}

LagrangianSpec make_spec(double length_scale, double amplitude, double sigma_m_sq) {
  LagrangianSpec s;
  s.kernel.length_scale = length_scale;
  s.kernel.amplitude = amplitude;
  s.sigma_m_sq = sigma_m_sq;
  s.validate();
  return s;
}

RunConfig config_from(const std::string& text, const std::filesystem::path& base) {
  return parse_config(nlohmann::json::parse(text), base);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "metamorph core bindings";
  m.attr("__version__") = version_string;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("sha256_hex", &sha256_hex, py::arg("data"));

  m.def(
      "run",
      [](const std::string& command, const std::string& config_json, const std::filesystem::path& out, int threads,
         const std::filesystem::path& base_dir) {
        std::ostringstream log;
        int code = exit_ok;
        {
          py::gil_scoped_release release;
          const RunConfig c = config_from(config_json, base_dir);
          if (command == "simulate")
            code = cmd_simulate(c, out, log);
          else if (command == "match")
            code = cmd_match(c, out, threads, log);
          else if (command == "uq")
            code = cmd_uq(c, out, threads, log);
          else if (command == "verify")
            code = cmd_verify(c, out, log);
          else
            throw InputError("unknown command '" + command + "'");
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("command"), py::arg("config_json"), py::arg("out"), py::arg("threads") = 1,
      py::arg("base_dir") = std::filesystem::path("."),
      "Run simulate | match | uq | verify on a JSON config string; returns (exit code, log).");

  m.def(
      "landmark_hamiltonian",
      [](const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& sigma, double length_scale,
         double amplitude, double sigma_m_sq) {
        return hamiltonian(LandmarkState::zero_level(to_points(sigma), to_points(q)),
                           make_spec(length_scale, amplitude, sigma_m_sq));
      },
      py::arg("q"), py::arg("sigma"), py::arg("length_scale") = 1.0, py::arg("amplitude") = 1.0,
      py::arg("sigma_m_sq") = 0.5, "Hamiltonian of landmarks on the Noether zero level.");

  m.def(
      "shoot_landmarks",
      [](const std::vector<std::vector<double>>& q0, const std::vector<std::vector<double>>& sigma0, double dt,
         double length_scale, double amplitude, double sigma_m_sq) {
        const Points q = to_points(q0);
        const LandmarkMatchProblem p{q, q, make_spec(length_scale, amplitude, sigma_m_sq), dt};
        const auto tr = shoot(p, to_points(sigma0));
        py::list qs;
        for (const auto& s : tr.states) qs.append(from_points(s.q));
        py::dict d;
        d["q"] = qs;
        d["hamiltonian"] = tr.hamiltonian;
        d["el_residual"] = tr.el_residual;
        return d;
      },
      py::arg("q0"), py::arg("sigma0"), py::arg("dt") = 0.01, py::arg("length_scale") = 1.0, py::arg("amplitude") = 1.0,
      py::arg("sigma_m_sq") = 0.5, "RK4 trajectory on [0, 1] from the Noether zero level.");

  m.def(
      "match_landmarks",
      [](const std::vector<std::vector<double>>& q0, const std::vector<std::vector<double>>& q1, double dt, bool exact,
         double epsilon, double tolerance, double sigma_m_sq) {
        LandmarkMatchProblem p{to_points(q0), to_points(q1), make_spec(1.0, 1.0, sigma_m_sq), dt};
        MatchOptions opt;
        opt.exact = exact;
        opt.epsilon = epsilon;
        opt.tolerance = tolerance;
        const LandmarkMatchResult r = match(p, opt);
        py::dict d;
        d["sigma0"] = from_points(r.sigma0);
        d["action"] = r.action;
        d["misfit"] = r.misfit;
        d["endpoint_residual"] = r.endpoint_residual;
        d["converged"] = r.report.converged;
        return d;
      },
      py::arg("q0"), py::arg("q1"), py::arg("dt") = 0.01, py::arg("exact") = true, py::arg("epsilon") = 1e-2,
      py::arg("tolerance") = 1e-7, py::arg("sigma_m_sq") = 0.5);

  m.def(
      "verify_defaults",
      []() {
        std::vector<checks::CheckOutcome> results;
        {
          py::gil_scoped_release release;
          results = checks::run_verification(checks::VerifySettings{});
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["status"] = r.status;
          d["value"] = r.value;
          d["threshold"] = r.threshold;
          d["detail"] = r.detail;
          out.append(d);
        }
        return out;
      },
      "Run the built-in verification suite; returns one dict per check.");
}
