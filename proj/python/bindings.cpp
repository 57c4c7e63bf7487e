#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qfiflow/models.hpp"
#include "qfiflow/qfi_flow.hpp"
#include "qfiflow/scenario.hpp"

namespace py = pybind11;
using namespace qfiflow;

namespace {

py::dict report_to_dict(const cli::RunReport& r) {
    const std::size_t n = r.rows.size();
    const std::size_t nch = r.config.channel_count();
    std::vector<double> t(n), f_num(n), i_direct(n), i_dec(n), f_an(n, NAN), i_an(n, NAN);
    std::vector<std::vector<double>> gamma(nch, std::vector<double>(n, NAN)), J = gamma, I = gamma;
    std::vector<int> guard(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& row = r.rows[k];
        t[k] = row.t;
        f_num[k] = row.F_numeric;
        i_direct[k] = row.I_direct;
        i_dec[k] = row.I_decomposed;
        if (row.F_analytic) f_an[k] = *row.F_analytic;
        if (row.I_analytic) i_an[k] = *row.I_analytic;
        guard[k] = row.guard ? 1 : 0;
        for (std::size_t c = 0; c < row.channels.size(); ++c) {
            gamma[c][k] = row.channels[c].gamma;
            J[c][k] = row.channels[c].J;
            I[c][k] = row.channels[c].I;
        }
    }
    py::dict d;
    d["t"] = t;
    d["F_numeric"] = f_num;
    d["F_analytic"] = f_an;
    d["I_direct"] = i_direct;
    d["I_decomposed"] = i_dec;
    d["I_analytic"] = i_an;
    d["guard"] = guard;
    for (std::size_t c = 0; c < nch; ++c) {
        const std::string s = std::to_string(c + 1);
        d[("gamma_" + s).c_str()] = gamma[c];
        d[("J_" + s).c_str()] = J[c];
        d[("I_" + s).c_str()] = I[c];
    }
    d["inward_intervals"] = r.witness.inward_intervals;
    d["accumulated_inward"] = r.witness.accumulated_inward;
    d["exit_status"] = r.exit_status();
    d["csv"] = cli::trajectory_csv(r);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantum Fisher information flow for time-local master equations";

    auto base = py::register_exception<Error>(m, "QfiflowError");
    py::register_exception<RateSingularity>(m, "RateSingularity", base.ptr());
    py::register_exception<StepSizeUnderflow>(m, "StepSizeUnderflow", base.ptr());
    py::register_exception<InvariantViolation>(m, "InvariantViolation", base.ptr());
    py::register_exception<SupportInconsistency>(m, "SupportInconsistency", base.ptr());
    py::register_exception<NonpositiveQfi>(m, "NonpositiveQfi", base.ptr());
    py::register_exception<cli::ConfigError>(m, "ConfigError", base.ptr());

    py::class_<models::DampedJCParams>(m, "DampedJCParams")
        .def(py::init<double, double, double>(), py::arg("W"), py::arg("lam"), py::arg("phi") = 0.0)
        .def_property_readonly("W", &models::DampedJCParams::W)
        .def_property_readonly("lam", &models::DampedJCParams::lambda)
        .def_property_readonly("phi", &models::DampedJCParams::phi)
        .def_property_readonly("d", &models::DampedJCParams::d)
        .def_property_readonly("strong", [](const models::DampedJCParams& p) {
            return p.regime() == models::Regime::Strong;
        });

    m.def("h_function", &models::h_function, py::arg("t"), py::arg("params"));
    m.def("h_dot", &models::h_dot, py::arg("t"), py::arg("params"));
    m.def("gamma_t", &models::gamma_t, py::arg("t"), py::arg("params"), py::arg("guard") = models::kSingularityGuard);
    m.def("h_zeros", &models::h_zeros, py::arg("params"), py::arg("t_max"));
    m.def("analytic_qfi", &models::analytic_qfi, py::arg("t"), py::arg("params"));
    m.def("analytic_flow", &models::analytic_flow, py::arg("t"), py::arg("params"));
    m.def("analytic_state", [](double t, const models::DampedJCParams& p) {
        return models::analytic_state(t, p).as_array();
    }, py::arg("t"), py::arg("params"));

    m.def("sld", [](const Matrix& rho, const Matrix& drho) { return sld(DensityMatrix(rho), drho).L; },
          py::arg("rho"), py::arg("drho"), "Symmetric logarithmic derivative of rho along drho");
    m.def("qfi", [](const Matrix& rho, const Matrix& L) { return qfi(DensityMatrix(rho), L); },
          py::arg("rho"), py::arg("L"));
    m.def("qfi_bloch", &qfi_bloch, py::arg("B"), py::arg("dB"));
    m.def("cramer_rao_bound", &cramer_rao_bound, py::arg("F"), py::arg("M") = 1);
    m.def("channel_subflow_factor",
          [](const Matrix& rho, const Matrix& L, const Matrix& A) {
              return channel_subflow_factor(DensityMatrix(rho), L, A);
          },
          py::arg("rho"), py::arg("L"), py::arg("A"));

    m.def("normalize_config", [](const std::string& text) { return cli::emit_config(cli::parse_config(text)); },
          py::arg("text"), "Parse and re-emit a scenario config in canonical form");
    m.def("run_scenario",
          [](const std::string& text) {
              const cli::ScenarioConfig cfg = cli::parse_config(text);
              cli::RunReport r;
              {
                  py::gil_scoped_release release;
                  r = cli::run_scenario(cfg);
              }
              return report_to_dict(r);
          },
          py::arg("config_text"));
    m.def("emit_fig2_panels",
          [](const std::filesystem::path& dir, double lam, double lambda_t_max, std::optional<double> dt) {
              cli::Fig2Options o;
              o.lambda = lam;
              o.lambda_t_max = lambda_t_max;
              o.dt = dt;
              return cli::emit_fig2_panels(dir, o).files;
          },
          py::arg("out_dir"), py::arg("lam") = 1.0, py::arg("lambda_t_max") = 10.0, py::arg("dt") = std::nullopt);
}
