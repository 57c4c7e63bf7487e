#include "qfiflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>

#include "qfiflow/models.hpp"

namespace qfiflow::cli {

namespace {

struct PreparedScenario {
    TimeLocalGenerator gen;
    DensityMatrix rho0;
    Matrix drho0;
    double theta = 0.0;
    // Closed-form amplitude-damping envelope, when the model has one.
    std::function<double(double)> h;
    std::function<double(double)> h_dot;
    std::vector<double> zeros;
};

Matrix unitary_from_hermitian(const Matrix& g, double theta) {
    const ops::HermitianEigensystem eig = ops::eigh(g);
    Eigen::VectorXcd phases(eig.eigenvalues.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-kI * theta * eig.eigenvalues(k));
    return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

PreparedScenario prepare(const ScenarioConfig& cfg) {
    switch (cfg.model) {
        case ModelKind::DampedJC: {
            const models::DampedJCParams p(*cfg.W, *cfg.lambda, cfg.phi.value_or(0.0));
            return {models::build_generator(p),
                    models::optimal_probe(p.phi()),
                    models::probe_param_deriv(p.phi()),
                    p.phi(),
                    [p](double t) { return models::h_function(t, p); },
                    [p](double t) { return models::h_dot(t, p); },
                    models::h_zeros(p, cfg.t_max + cfg.effective_guard_halfwidth())};
        }
        case ModelKind::MarkovControl: {
            const double g0 = *cfg.gamma0;
            const double phi = cfg.phi.value_or(0.0);
            return {models::markov_control(g0),
                    models::optimal_probe(phi),
                    models::probe_param_deriv(phi),
                    phi,
                    [g0](double t) { return models::markov_h(t, g0); },
                    [g0](double t) { return models::markov_h_dot(t, g0); },
                    {}};
        }
        case ModelKind::CustomGenerator: {
            const CustomSpec& c = *cfg.custom;
            const int dim = c.probe.dim;
            std::vector<DissipativeChannel> channels;
            for (std::size_t i = 0; i < c.channels.size(); ++i) {
                const ChannelSpec& ch = c.channels[i];
                channels.push_back({[rate = ch.rate](double t) { return rate(t); },
                                    TimeLocalGenerator::constant(ch.jump.to_matrix()),
                                    "channel_" + std::to_string(i + 1)});
            }
            const Matrix h = c.hamiltonian ? c.hamiltonian->to_matrix() : Matrix::Zero(dim, dim);
            const double theta = c.theta.value_or(0.0);
            const Matrix g = c.param_generator.to_matrix();
            const Matrix u = unitary_from_hermitian(g, theta);
            const Matrix rho0 = ops::hermitian_part(u * c.probe.to_matrix() * u.adjoint());
            return {TimeLocalGenerator(dim, TimeLocalGenerator::constant(h), std::move(channels)),
                    DensityMatrix(rho0),
                    ops::hermitian_part(-kI * ops::commutator(g, rho0)),
                    theta,
                    {},
                    {},
                    {}};
        }
    }
    throw InvalidArgument("unknown model");
}

std::string time_str(double t) { return format_double(t); }

} // namespace

RunReport run_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    RunReport report;
    report.config = cfg;
    report.M_values = cfg.effective_M();
    Provenance& prov = report.provenance;
    prov.config_echo = emit_config(cfg);

    PreparedScenario sc = prepare(cfg);
    const double dt = cfg.effective_dt();
    const double band = cfg.effective_guard_halfwidth();
    const std::vector<double> grid = uniform_grid(0.0, cfg.t_max, dt);
    const std::size_t n = grid.size();
    prov.h_zeros = sc.zeros;

    if (cfg.path == IntegrationPath::Generator && !sc.zeros.empty() && sc.zeros.front() <= cfg.t_max) {
        throw RateSingularity("generator-path run crosses a divergence of gamma at t = " +
                              time_str(sc.zeros.front()) + "; use integration.path = segmented");
    }

    std::vector<bool> guard(n, false);
    if (cfg.path == IntegrationPath::Segmented) {
        for (std::size_t k = 0; k < n; ++k) {
            for (double z : sc.zeros) {
                if (std::abs(grid[k] - z) <= band) guard[k] = true;
            }
        }
    }

    std::vector<Matrix> rho(n), drho(n);
    auto closed_form = [&](double t) {
        const models::BlochVector b = models::amplitude_damping_state(sc.h(t), sc.theta);
        const models::BlochVector db = models::amplitude_damping_state_deriv(sc.h(t), sc.theta);
        return std::make_pair(b.to_matrix(), db.to_matrix(true));
    };

    const StepperConfig stepper = cfg.stepper_config();
    StepperStats& stats = prov.stepper;
    stats.min_eigenvalue = 1.0;
    std::size_t k = 0;
    while (k < n) {
        if (guard[k]) {
            std::tie(rho[k], drho[k]) = closed_form(grid[k]);
            ++prov.guard_rows;
            ++k;
            continue;
        }
        std::size_t end = k;
        while (end + 1 < n && !guard[end + 1]) ++end;
        DensityMatrix seed = sc.rho0;
        Matrix dseed = sc.drho0;
        if (k > 0) {
            auto [r, d] = closed_form(grid[k]);
            seed = DensityMatrix(r);
            dseed = d;
            ++prov.reseeds;
        }
        const std::vector<double> seg(grid.begin() + static_cast<long>(k), grid.begin() + static_cast<long>(end) + 1);
        ParamTrajectory traj = co_integrate(sc.gen, seed, dseed, seg, stepper, sc.theta);
        for (std::size_t j = 0; j < seg.size(); ++j) {
            rho[k + j] = traj.states[j].matrix();
            drho[k + j] = traj.param_derivs[j];
        }
        ++prov.segments;
        stats.steps += traj.stats.steps;
        stats.halvings += traj.stats.halvings;
        stats.max_trace_drift = std::max(stats.max_trace_drift, traj.stats.max_trace_drift);
        stats.max_herm_drift = std::max(stats.max_herm_drift, traj.stats.max_herm_drift);
        stats.min_eigenvalue = std::min(stats.min_eigenvalue, traj.stats.min_eigenvalue);
        k = end + 1;
    }

    ToleranceFlags& flags = prov.flags;
    std::vector<FlowSample> samples;
    samples.reserve(n);
    report.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid[i];
        const DensityMatrix state = DensityMatrix::unchecked(rho[i]);
        TrajectoryRow row;
        row.t = t;
        row.guard = guard[i];
        const SldResult s = sld(state, drho[i]);
        row.F_numeric = qfi(state, s.L);
        if (sc.h) {
            const double h = sc.h(t);
            row.F_analytic = h * h;
            row.I_analytic = 2.0 * h * sc.h_dot(t);
        }
        FlowSample sample;
        try {
            const GeneratorSnapshot snap(sc.gen, t);
            sample = flow_decomposed(snap, state, s.L);
            row.I_direct = flow_direct(snap, state, drho[i], s.L);
        } catch (const RateSingularity& e) {
            if (!row.I_analytic) throw;
            sample.t = t;
            sample.F = row.F_numeric;
            sample.I_total = *row.I_analytic;
            row.I_direct = *row.I_analytic;
            ++prov.singular_rows;
        }
        row.I_decomposed = sample.I_total;
        row.channels = sample.channels;
        if (state.dim() == 2) row.bloch = models::BlochVector::of(rho[i]).as_array();

        const double gap = std::abs(row.I_direct - row.I_decomposed);
        flags.max_flow_identity_gap = std::max(flags.max_flow_identity_gap, gap);
        if (gap > 1e-8 * (1.0 + std::abs(row.I_decomposed))) ++flags.flow_identity_violations;
        for (const auto& ch : row.channels) {
            if (ch.J > 1e-10) ++flags.positive_J;
        }
        if (row.F_analytic && !row.guard) {
            const double fgap = std::abs(row.F_numeric - *row.F_analytic);
            flags.max_analytic_gap = std::max(flags.max_analytic_gap, fgap);
            if (fgap > 1e-6) ++flags.analytic_mismatch;
        }
        samples.push_back(std::move(sample));
        report.rows.push_back(std::move(row));
    }
    report.witness = witness(std::move(samples), cfg.witness_eps);
    return report;
}

std::vector<RunReport> run_sweep(const ScenarioConfig& cfg) {
    const std::vector<ScenarioConfig> plan = plan_runs(cfg);
    std::vector<std::future<RunReport>> jobs;
    jobs.reserve(plan.size());
    for (const auto& run : plan) jobs.push_back(std::async(std::launch::async, [run] { return run_scenario(run); }));
    std::vector<RunReport> out;
    out.reserve(plan.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

std::string trajectory_csv(const RunReport& report) {
    const std::vector<std::string> all = available_columns(report.config);
    const std::vector<std::string>& wanted = report.config.outputs.empty() ? all : report.config.outputs;
    std::vector<std::size_t> pick;
    for (const auto& name : wanted) {
        pick.push_back(static_cast<std::size_t>(std::find(all.begin(), all.end(), name) - all.begin()));
    }
    const std::size_t nch = report.config.channel_count();
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };

    std::ostringstream os;
    for (std::size_t i = 0; i < wanted.size(); ++i) os << (i ? "," : "") << wanted[i];
    os << '\n';
    std::vector<std::string> cells;
    for (const auto& row : report.rows) {
        cells.clear();
        cells.push_back(format_double(row.t));
        cells.push_back(format_double(row.F_numeric));
        if (row.F_analytic || report.config.model != ModelKind::CustomGenerator) cells.push_back(opt(row.F_analytic));
        cells.push_back(format_double(row.I_direct));
        cells.push_back(format_double(row.I_decomposed));
        if (report.config.model != ModelKind::CustomGenerator) cells.push_back(opt(row.I_analytic));
        for (std::size_t c = 0; c < nch; ++c) {
            if (c < row.channels.size()) {
                cells.push_back(format_double(row.channels[c].gamma));
                cells.push_back(format_double(row.channels[c].J));
                cells.push_back(format_double(row.channels[c].I));
            } else {
                cells.insert(cells.end(), 3, std::string());
            }
        }
        if (report.config.dim() == 2) {
            for (int c = 0; c < 3; ++c) cells.push_back(row.bloch ? format_double((*row.bloch)[c]) : std::string());
        }
        cells.push_back(row.guard ? "1" : "0");
        for (std::size_t i = 0; i < pick.size(); ++i) os << (i ? "," : "") << cells[pick[i]];
        os << '\n';
    }
    return os.str();
}

std::string witness_summary(const RunReport& report) {
    const FlowSeries& w = report.witness;
    double max_i = -INFINITY, min_i = INFINITY;
    for (const auto& s : w.samples) {
        max_i = std::max(max_i, s.I_total);
        min_i = std::min(min_i, s.I_total);
    }
    std::ostringstream os;
    os << "model: " << to_string(report.config.model) << '\n';
    os << "samples: " << w.samples.size() << '\n';
    os << "witness_eps: " << format_double(w.eps) << '\n';
    os << "max_I: " << format_double(max_i) << '\n';
    os << "min_I: " << format_double(min_i) << '\n';
    os << "inward_interval_count: " << w.inward_intervals.size() << '\n';
    for (std::size_t i = 0; i < w.inward_intervals.size(); ++i) {
        os << "inward_interval." << i + 1 << ": " << format_double(w.inward_intervals[i].first) << ' '
           << format_double(w.inward_intervals[i].second) << '\n';
    }
    os << "accumulated_inward: " << format_double(w.accumulated_inward) << '\n';
    os << "accumulated_inward_kind: heuristic aggregate (trapezoidal integral of max(I, 0))\n";
    os << "non_markovian_signature: " << (w.inward_intervals.empty() ? "absent" : "present") << '\n';
    return os.str();
}

std::string qcr_csv(const RunReport& report) {
    std::ostringstream os;
    os << "t,F_numeric";
    for (long m : report.M_values) os << ",var_bound_M" << m;
    os << '\n';
    for (const auto& row : report.rows) {
        os << format_double(row.t) << ',' << format_double(row.F_numeric);
        for (long m : report.M_values) {
            os << ',';
            try {
                os << format_double(cramer_rao_bound(row.F_numeric, m));
            } catch (const NonpositiveQfi&) {
                os << "undefined";
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string provenance_text(const RunReport& report) {
    const Provenance& p = report.provenance;
    std::ostringstream os;
    os << "exit_status: " << report.exit_status() << '\n';
    os << "grid_points: " << report.rows.size() << '\n';
    os << "dt: " << format_double(report.config.effective_dt()) << '\n';
    os << "guard_halfwidth: " << format_double(report.config.effective_guard_halfwidth()) << '\n';
    os << "segments: " << p.segments << '\n';
    os << "reseeds_from_closed_form: " << p.reseeds << '\n';
    os << "guard_rows: " << p.guard_rows << '\n';
    os << "singular_rows: " << p.singular_rows << '\n';
    os << "h_zeros:";
    for (double z : p.h_zeros) os << ' ' << format_double(z);
    os << '\n';
    os << "stepper_steps: " << p.stepper.steps << '\n';
    os << "stepper_halvings: " << p.stepper.halvings << '\n';
    os << "max_trace_drift: " << format_double(p.stepper.max_trace_drift) << '\n';
    os << "max_hermiticity_drift_before_symmetrization: " << format_double(p.stepper.max_herm_drift) << '\n';
    os << "min_eigenvalue: " << format_double(p.stepper.min_eigenvalue) << '\n';
    os << "flag.flow_identity_violations: " << p.flags.flow_identity_violations << '\n';
    os << "flag.max_flow_identity_gap: " << format_double(p.flags.max_flow_identity_gap) << '\n';
    os << "flag.positive_J: " << p.flags.positive_J << '\n';
    os << "flag.analytic_mismatch: " << p.flags.analytic_mismatch << '\n';
    os << "flag.max_analytic_gap: " << format_double(p.flags.max_analytic_gap) << '\n';
    os << "# config echo\n";
    std::istringstream cfg(p.config_echo);
    std::string line;
    while (std::getline(cfg, line)) os << "config: " << line << '\n';
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

} // namespace

void write_report(const RunReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "trajectory.csv", trajectory_csv(report));
    write_file(dir / "witness.txt", witness_summary(report));
    write_file(dir / "qcr.csv", qcr_csv(report));
    write_file(dir / "provenance.txt", provenance_text(report));
}

Fig2Result emit_fig2_panels(const std::filesystem::path& dir, const Fig2Options& opts) {
    std::filesystem::create_directories(dir);
    Fig2Result result;
    std::ostringstream log;

    struct Panel {
        double W_over_lambda;
        const char* flow_file;
        const char* gamma_file;
        const char* tag;
    };
    const Panel panels[] = {{0.3, "fig2a_flow_weak.csv", "fig2b_gamma_weak.csv", "weak"},
                            {3.0, "fig2c_flow_strong.csv", "fig2d_gamma_strong.csv", "strong"}};

    std::vector<ScenarioConfig> cfgs;
    for (const Panel& p : panels) {
        ScenarioConfig cfg;
        cfg.model = ModelKind::DampedJC;
        cfg.W = p.W_over_lambda * opts.lambda;
        cfg.lambda = opts.lambda;
        cfg.phi = opts.phi;
        cfg.t_max = opts.lambda_t_max / opts.lambda;
        cfg.dt = opts.dt.value_or(1e-3 / opts.lambda);
        cfgs.push_back(cfg);
    }
    std::vector<std::future<RunReport>> jobs;
    for (const auto& c : cfgs) jobs.push_back(std::async(std::launch::async, [c] { return run_scenario(c); }));

    for (std::size_t i = 0; i < 2; ++i) {
        const RunReport report = jobs[i].get();
        const double lam = opts.lambda;
        std::ostringstream flow, gamma;
        flow << "lambda_t,I_over_lambda\n";
        gamma << "lambda_t,gamma_over_lambda\n";
        for (const auto& row : report.rows) {
            flow << format_double(lam * row.t) << ',' << format_double(row.I_decomposed / lam) << '\n';
            if (row.guard || row.channels.empty()) {
                std::string msg = std::string(panels[i].gamma_file) + ": omitted gamma at lambda_t = " +
                                  format_double(lam * row.t) + " (inside guard band of a divergence)";
                log << msg << '\n';
                result.omissions.push_back(std::move(msg));
                continue;
            }
            gamma << format_double(lam * row.t) << ',' << format_double(row.channels.front().gamma / lam) << '\n';
        }
        write_file(dir / panels[i].flow_file, flow.str());
        write_file(dir / panels[i].gamma_file, gamma.str());
        result.files.push_back(dir / panels[i].flow_file);
        result.files.push_back(dir / panels[i].gamma_file);
    }
    write_file(dir / "fig2_omissions.log", log.str());
    result.files.push_back(dir / "fig2_omissions.log");
    return result;
}

} // namespace qfiflow::cli
