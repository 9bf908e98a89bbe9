// Python bindings: config loading, runs, and a few library oracles.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dhw/crystal.hpp"
#include "dhw/error.hpp"
#include "dhw/harness.hpp"
#include "dhw/potential.hpp"

namespace py = pybind11;
using namespace dhw;

namespace {

std::vector<std::vector<int>> indices(const beamsel::BeamSet& set) {
  std::vector<std::vector<int>> out;
  for (const auto& g : set.members()) {
    std::vector<int> v;
    for (int i = 0; i < g.dim(); ++i) v.push_back(g[i]);
    out.push_back(std::move(v));
  }
  return out;
}

py::dict solution_dict(const std::string& name, const solver::Solution& sol) {
  py::dict d;
  d["name"] = name;
  d["z_nm"] = sol.z;
  d["psi"] = sol.psi;  // beams x samples
  d["beams"] = indices(sol.system->beams());
  d["rho"] = sol.system->rho();
  return d;
}

}  // namespace

PYBIND11_MODULE(_dhw, m) {
  m.doc() = "Darwin-Howie-Whelan beam propagation with a-priori error certificates";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", validation.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());

  py::class_<harness::ExperimentConfig>(m, "Config")
      .def_readonly("name", &harness::ExperimentConfig::name)
      .def_readonly("z_star_nm", &harness::ExperimentConfig::z_star_nm)
      .def_readonly("z_samples", &harness::ExperimentConfig::z_samples)
      .def_readonly("reference", &harness::ExperimentConfig::reference)
      .def_property_readonly("hash", [](const harness::ExperimentConfig& c) { return harness::hex64(c.hash); })
      .def_property_readonly("beam_sets", [](const harness::ExperimentConfig& c) {
        std::vector<std::string> names;
        for (const auto& s : c.beam_sets) names.push_back(s.name);
        return names;
      });

  m.def("load_config", [](const std::filesystem::path& p) { return harness::load_config(p); }, py::arg("path"));
  m.def("parse_config", &harness::parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path("."));

  m.def(
      "run",
      [](const harness::ExperimentConfig& cfg, std::optional<int> z_samples, std::optional<double> oracle_tol,
         std::optional<std::filesystem::path> out_dir) {
        harness::RunOptions opt;
        opt.z_samples = z_samples;
        opt.oracle_tol = oracle_tol;
        opt.out_dir = out_dir;
        opt.write_files = out_dir.has_value();
        harness::RunReport rep;
        {
          py::gil_scoped_release release;
          rep = harness::run(cfg, opt);
        }
        py::dict d;
        d["ok"] = rep.ok;
        d["failures"] = rep.failures;
        d["report_json"] = harness::report_json(rep, cfg);
        d["table"] = harness::solution_table(cfg, rep);
        py::list sols;
        for (std::size_t i = 0; i < rep.sets.size(); ++i) sols.append(solution_dict(rep.sets[i].name, rep.solutions[i]));
        d["solutions"] = sols;
        return d;
      },
      py::arg("config"), py::arg("z_samples") = py::none(), py::arg("oracle_tol") = py::none(),
      py::arg("out_dir") = py::none(),
      "Solve every beam set. Files are written only when out_dir is given.");

  m.def("excitation_grid", [](const harness::ExperimentConfig& cfg) {
    const auto g = harness::excitation_grid(cfg);
    return py::make_tuple(g.rows, g.cols, g.s);
  });

  m.def("relativistic_params", [](double kv) {
    const auto p = crystal::relativistic_params(kv);
    py::dict d;
    d["voltage_kv"] = p.voltage_kv;
    d["wavelength_pm"] = p.wavelength_pm;
    d["wave_number"] = p.wave_number;
    d["gamma"] = p.gamma;
    d["beta"] = p.beta;
    return d;
  });

  m.def(
      "lattice_sum",
      [](int order, double beta, const std::vector<double>& spacings, double tol) {
        return potential::lattice_sum(order, beta, crystal::LatticeFrame::rectangular(spacings, 1.0), tol);
      },
      py::arg("order"), py::arg("beta"), py::arg("spacings"), py::arg("tol") = 1e-10,
      "Sum of |k|^order exp(-beta |k|) over a rectangular dual lattice.");

  m.def("significant_digits", &harness::significant_digits, py::arg("a"), py::arg("b"), py::arg("cap") = 17);
  m.def("fnv1a64", [](const std::string& s) { return harness::hex64(harness::fnv1a64(s)); });

  m.def(
      "randomized_suite",
      [](std::uint64_t seed, int count, int samples) {
        harness::SuiteResult r;
        {
          py::gil_scoped_release release;
          r = harness::randomized_suite(seed, count, samples);
        }
        std::size_t violations = 0;
        double flux = 0.0, energy = 0.0;
        for (const auto& d : r.dominance) violations += d.violations;
        for (const auto& c : r.conservation) {
          flux = std::max(flux, c.flux_drift);
          energy = std::max(energy, c.energy_drift);
        }
        py::dict d;
        d["systems"] = r.conservation.size();
        d["dominance_checks"] = r.dominance.size();
        d["violations"] = violations;
        d["max_flux_drift"] = flux;
        d["max_energy_drift"] = energy;
        return d;
      },
      py::arg("seed"), py::arg("count") = 20, py::arg("samples") = 512);
}
