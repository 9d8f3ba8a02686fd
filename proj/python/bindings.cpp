#include "pinnverse/harness.hpp"
#include "pinnverse/liouvillian.hpp"
#include "pinnverse/metrics.hpp"
#include "pinnverse/trajectory_io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pinnverse;

namespace {

// JSON crosses the boundary as text; the Python side decodes it with json.loads.
py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig config_for(const std::string& mode, const std::map<std::string, std::string>& settings) {
  ExperimentConfig c = default_config(mode);
  for (const auto& [k, v] : settings) apply_config_value(c, k, v);
  c.mode = mode;
  return c;
}

}  // namespace

PYBIND11_MODULE(_pinnverse, m) {
  m.doc() = "Lindblad parameter identification with physics-informed networks";

  py::register_exception<IngestionError>(m, "IngestionError", PyExc_ValueError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_ValueError);
  py::register_exception<FitFailure>(m, "FitFailure", PyExc_RuntimeError);

  py::class_<ParameterSet>(m, "ParameterSet")
      .def(py::init([](int n_qubits, int n_channels) { return ParameterSet::zeros(n_qubits, n_channels); }),
           py::arg("n_qubits"), py::arg("n_channels"))
      .def_readwrite("n_qubits", &ParameterSet::n_qubits)
      .def_readwrite("J", &ParameterSet::J)
      .def_readwrite("gamma", &ParameterSet::gamma)
      .def("validate", &ParameterSet::validate)
      .def("__repr__", [](const ParameterSet& p) { return "ParameterSet(" + parameters_to_json(p).dump() + ")"; });

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("n_qubits", &Trajectory::n_qubits)
      .def_readwrite("times", &Trajectory::times)
      .def_readwrite("values", &Trajectory::values)
      .def("validate", &Trajectory::validate);

  m.def("observable_names", [](int n) { return ObservableBasis(n).names(); }, py::arg("n_qubits"));

  m.def(
      "sample_parameters",
      [](int n, std::uint64_t seed, const std::string& mask, double omega0) {
        const int nch = ChannelSet::standard_for(n).size();
        return sample_random_parameters(n, seed, mask_from_name(mask, n, nch, true), omega0, nch);
      },
      py::arg("n_qubits"), py::arg("seed"), py::arg("mask") = "all", py::arg("omega0") = 2.0 * 3.141592653589793);

  m.def(
      "evolve",
      [](const ParameterSet& p, const Eigen::VectorXd& times) {
        return evolve(plus_plus_state(p.n_qubits), p, ChannelSet::standard_for(p.n_qubits), times);
      },
      py::arg("params"), py::arg("times"), "Density-matrix integration from |+>^n with the standard channels.");

  m.def(
      "evolve_pauli",
      [](const ParameterSet& p, const Eigen::VectorXd& times) {
        const ObservableBasis basis(p.n_qubits);
        const AffineGenerator g = build_generator(p, ChannelSet::standard_for(p.n_qubits), basis);
        return evolve_pauli(g, p.n_qubits, expectation_values(plus_plus_state(p.n_qubits), basis), times);
      },
      py::arg("params"), py::arg("times"));

  m.def(
      "generator",
      [](const ParameterSet& p) {
        const AffineGenerator g =
            build_generator(p, ChannelSet::standard_for(p.n_qubits), ObservableBasis(p.n_qubits));
        return py::make_tuple(g.A, g.b);
      },
      py::arg("params"), "Pauli-basis generator (A, b) with ds/dt = A s + b.");

  m.def("uniform_grid", &uniform_grid, py::arg("t_final"), py::arg("count"));
  m.def("add_noise", &add_gaussian_noise, py::arg("trajectory"), py::arg("sigma"), py::arg("seed"));
  m.def("mape", &mape, py::arg("exact"), py::arg("predicted"));
  m.def("read_csv", py::overload_cast<const std::string&>(&read_trajectory_csv), py::arg("path"));
  m.def("write_csv", py::overload_cast<const std::string&, const Trajectory&>(&write_trajectory_csv),
        py::arg("path"), py::arg("trajectory"));

  m.def(
      "fit",
      [](const Trajectory& data, const std::map<std::string, std::string>& settings,
         const std::optional<ParameterSet>& truth) {
        ExperimentConfig c = config_for("fit", settings);
        c.n_qubits = data.n_qubits;
        const ChannelSet ch = ChannelSet::standard_for(data.n_qubits);
        FitConfig f = c.fit;
        f.seed = c.seed;
        f.mask = mask_from_name(c.train_mask, c.n_qubits, ch.size(), c.train_gamma);
        FitReport r;
        {
          py::gil_scoped_release release;
          r = fit(data, ch, f, truth);
        }
        return to_python(report_to_json(r));
      },
      py::arg("data"), py::arg("settings") = std::map<std::string, std::string>{}, py::arg("truth") = std::nullopt,
      "Fit a trajectory; settings use the config-file keys. Returns the report as a dict.");

  m.def(
      "run",
      [](const std::string& mode, const std::map<std::string, std::string>& settings) -> py::object {
        const ExperimentConfig c = config_for(mode, settings);
        py::gil_scoped_release release;
        nlohmann::json out;
        if (mode == "sweep-collocation" || mode == "sweep-noise") {
          const SweepResult r = mode == "sweep-noise" ? run_sweep_noise(c) : run_sweep_collocation(c);
          out["summary"] = nlohmann::json::array();
          for (const auto& s : r.summary) {
            out["summary"].push_back({{r.grid_name, s.grid_value}, {"group", s.group}, {"mean", s.mean},
                                      {"median", s.median}, {"min", s.min}, {"max", s.max}, {"n_ok", s.n_ok},
                                      {"n_total", s.n_total}});
          }
          out["reports"] = r.reports;
        } else if (mode == "crosstalk") {
          const CrosstalkResult r = run_crosstalk(c);
          out = report_to_json(r.report);
          out["reconstruction_mape"] = r.reconstruction_mape;
        } else if (mode == "single-qubit") {
          out = report_to_json(run_single_qubit(c, c.data_path).report);
        } else {
          throw std::invalid_argument("unknown mode '" + mode + "'");
        }
        py::gil_scoped_acquire acquire;
        return to_python(out);
      },
      py::arg("mode"), py::arg("settings") = std::map<std::string, std::string>{});
}
