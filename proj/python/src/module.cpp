#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fcb/io.hpp"
#include "fcb/oracle.hpp"
#include "fcb/parallel.hpp"
#include "fcb/scenario.hpp"
#include "fcb/zeta.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

fcb::SurfaceSpec surface(const std::string& text) {
  try {
    return fcb::surface_spec_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("surface: ") + e.what());
  }
}

fcb::Truncation truncation(const std::string& text) {
  if (text.empty()) return {};
  return fcb::truncation_from_json(json::parse(text));
}

fcb::DeterminantConfig determinant_config(const std::vector<double>& times, int order, double fit_lo, double fit_hi,
                                          double threshold, double split) {
  fcb::DeterminantConfig dc;
  if (!times.empty()) dc.times = times;
  dc.order = order;
  dc.fit.window = {fit_lo, fit_hi};
  dc.fit.residual_threshold = threshold;
  dc.zeta.split = split;
  return dc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relative heat traces and determinants on rotationally symmetric surfaces";

  py::register_exception<fcb::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<fcb::FitError>(m, "FitError", PyExc_RuntimeError);

  py::class_<fcb::MetricProfile>(m, "Profile")
      .def_property_readonly("chart", [](const fcb::MetricProfile& p) { return std::pair(p.chart().lo, p.chart().hi); })
      .def("weight", &fcb::MetricProfile::weight, py::arg("s"))
      .def("log_weight", &fcb::MetricProfile::log_weight, py::arg("s"))
      .def("sample", &fcb::MetricProfile::sample, py::arg("n"))
      .def("spec_json", [](const fcb::MetricProfile& p) { return fcb::to_json(p.spec()).dump(); });

  m.def(
      "build_profile",
      [](const std::string& spec, const std::string& trunc) { return fcb::build_weight(surface(spec), truncation(trunc)); },
      py::arg("spec"), py::arg("truncation") = "");
  m.def("relative_area", [](const fcb::MetricProfile& a, const fcb::MetricProfile& b) { return fcb::relative_area(a, b); });

  py::class_<fcb::Eigensystem>(m, "Eigensystem")
      .def_readonly("lambda_cut", &fcb::Eigensystem::lambda_cut)
      .def_readonly("mode_cutoff", &fcb::Eigensystem::mode_cutoff)
      .def("count", &fcb::Eigensystem::count)
      .def("eigenvalues", &fcb::Eigensystem::flattened)
      .def("mode_eigenvalues",
           [](const fcb::Eigensystem& s, int mode) {
             for (const auto& ms : s.modes)
               if (ms.mode == mode) return ms.eigenvalues;
             return std::vector<double>{};
           })
      .def("nodes", [](const fcb::Eigensystem& s) { return s.grid->nodes; });

  m.def(
      "solve",
      [](const fcb::MetricProfile& profile, const fcb::MetricProfile& reference, int nodes, double lambda_cut,
         const std::string& grid, int workers) {
        std::shared_ptr<const fcb::Grid> g;
        if (grid == "graded") {
          g = std::make_shared<const fcb::Grid>(fcb::Grid::graded(reference, nodes));
        } else if (grid == "uniform") {
          const auto& note = reference.truncation();
          g = std::make_shared<const fcb::Grid>(
              fcb::Grid::uniform(reference.chart(), nodes, note.left.bc, note.right.bc));
        } else {
          throw std::invalid_argument("grid must be 'graded' or 'uniform'");
        }
        fcb::SolveOptions opts;
        opts.workers = workers > 0 ? workers : fcb::worker_count();
        py::gil_scoped_release release;
        return fcb::solve_modes(profile, g, lambda_cut, opts);
      },
      py::arg("profile"), py::arg("reference"), py::arg("nodes") = 4000, py::arg("lambda_cut") = 1000.0,
      py::arg("grid") = "graded", py::arg("workers") = 0);

  m.def("log_time_grid", &fcb::log_time_grid, py::arg("t0"), py::arg("t1"), py::arg("n"));
  m.def(
      "relative_trace",
      [](const fcb::Eigensystem& a, const fcb::Eigensystem& b, const std::vector<double>& times) {
        const fcb::TraceSeries s = fcb::relative_trace_series(a, b, times);
        return std::pair(s.values, s.tail_bound);
      },
      py::arg("a"), py::arg("b"), py::arg("times"));
  m.def("spectral_gap", py::overload_cast<const fcb::Eigensystem&>(&fcb::spectral_gap));

  m.def(
      "relative_determinant",
      [](const fcb::Eigensystem& a, const fcb::Eigensystem& b, const std::vector<double>& times, int order,
         double fit_lo, double fit_hi, double threshold, double split) {
        const auto dc = determinant_config(times, order, fit_lo, fit_hi, threshold, split);
        py::gil_scoped_release release;
        return fcb::to_json(fcb::relative_determinant(a, b, dc));
      },
      py::arg("a"), py::arg("b"), py::arg("times") = std::vector<double>{}, py::arg("order") = 3,
      py::arg("fit_lo") = 0.02, py::arg("fit_hi") = 0.3, py::arg("threshold") = 1e-4, py::arg("split") = 1.0);
  m.def(
      "finite_spectrum_determinant",
      [](const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& times, int order,
         double fit_lo, double fit_hi, double threshold, double split) {
        return fcb::to_json(
            fcb::finite_spectrum_determinant(a, b, determinant_config(times, order, fit_lo, fit_hi, threshold, split)));
      },
      py::arg("a"), py::arg("b"), py::arg("times"), py::arg("order") = 4, py::arg("fit_lo") = 1e-4,
      py::arg("fit_hi") = 1e-2, py::arg("threshold") = 1e-6, py::arg("split") = 1e-2);
  m.def("finite_matrix_relative_det", &fcb::finite_matrix_relative_det);

  m.def("default_config", [](const std::string& kind) {
    return fcb::to_json(fcb::default_config(fcb::scenario_kind_from_string(kind))).dump();
  });
  m.def(
      "run_scenario",
      [](const std::string& config_text, const std::string& out_dir) {
        json j;
        try {
          j = json::parse(config_text);
        } catch (const json::exception& e) {
          throw fcb::ConfigError(e.what());
        }
        fcb::ScenarioConfig config = fcb::scenario_config_from_json(j);
        if (config.workers <= 0) config.workers = fcb::worker_count();
        fcb::Report report;
        {
          py::gil_scoped_release release;
          report = fcb::run_scenario(config);
          if (!out_dir.empty()) fcb::write_report(report, out_dir);
        }
        return report.to_json().dump();
      },
      py::arg("config"), py::arg("out_dir") = "");
}
