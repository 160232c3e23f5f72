#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "recal/analysis.hpp"
#include "recal/calibration.hpp"
#include "recal/config.hpp"
#include "recal/csv.hpp"
#include "recal/experiment.hpp"
#include "recal/hardware.hpp"
#include "recal/numerics.hpp"
#include "recal/selftest.hpp"

namespace py = pybind11;
using namespace recal;

namespace {

ExperimentConfig parse(const std::string& text, const std::vector<std::string>& sets, bool paper_scale) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, true, true);
  for (const auto& s : sets) apply_override(j, s);
  ExperimentConfig cfg = config_from_json(j);
  if (paper_scale) apply_paper_scale(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonlinear reciprocity mismatch simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("erfc", &recal::erfc, py::arg("x"));
  m.def("erfcx", &recal::erfcx, py::arg("x"));
  m.def("expint_e1", &expint_e1, py::arg("y"));
  m.def("bussgang_mu", &bussgang_mu, py::arg("x"));
  m.def("bussgang_mu_prime", &bussgang_mu_prime, py::arg("x"));
  m.def("bussgang_lambda", &bussgang_lambda, py::arg("a_sat"), py::arg("sigma_x"));
  m.def("sspa_gain", &sspa_gain, py::arg("r"), py::arg("a_sat"), py::arg("v"));
  m.def("orth_poly_psi", &orth_poly_psi, py::arg("order"), py::arg("sigma"));
  m.def("rate_from_sindr", &rate_from_sindr, py::arg("sindr"));

  m.def("selftest", [] {
    py::list out;
    for (const auto& r : run_selftest()) out.append(py::make_tuple(r.name, r.pass, r.detail));
    return out;
  });

  m.def(
      "run_csv",
      [](const std::string& config_json, const std::vector<std::string>& sets, bool paper_scale,
         int threads) {
        const ExperimentConfig cfg = parse(config_json, sets, paper_scale);
        Table t;
        {
          py::gil_scoped_release nogil;
          t = run_scenario(cfg, {}, threads);
        }
        std::ostringstream os;
        write_csv(os, t);
        return os.str();
      },
      py::arg("config_json"), py::arg("sets") = std::vector<std::string>{},
      py::arg("paper_scale") = false, py::arg("threads") = 0);
}
