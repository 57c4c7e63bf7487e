#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qfiflow/config.hpp"
#include "qfiflow/qfi_flow.hpp"

namespace qfiflow::cli {

// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitClean = 0,
    kExitInvariantViolation = 2,
    kExitConfigError = 3,
    kExitSingularity = 4,
};

struct TrajectoryRow {
    double t = 0.0;
    double F_numeric = 0.0;
    std::optional<double> F_analytic;
    double I_direct = 0.0;
    double I_decomposed = 0.0;
    std::optional<double> I_analytic;
    std::vector<ChannelFlow> channels; // empty when the rates are singular at t
    std::optional<Vec3> bloch;
    bool guard = false;
};

struct ToleranceFlags {
    long flow_identity_violations = 0; // |I_direct - I_decomposed| > 1e-8 (1 + |I|)
    long positive_J = 0;               // J_i > 1e-10
    long analytic_mismatch = 0;        // |F_numeric - F_analytic| > 1e-6 outside guard bands
    double max_flow_identity_gap = 0.0;
    double max_analytic_gap = 0.0;

    bool any() const { return flow_identity_violations + positive_J + analytic_mismatch > 0; }
};

struct Provenance {
    std::string config_echo;
    StepperStats stepper;
    long segments = 0;
    long reseeds = 0;   // segments started from the closed-form state
    long guard_rows = 0;
    long singular_rows = 0; // rows whose flow came from the closed form because gamma diverged
    std::vector<double> h_zeros;
    ToleranceFlags flags;
};

struct RunReport {
    ScenarioConfig config;
    std::vector<TrajectoryRow> rows;
    FlowSeries witness;
    std::vector<long> M_values;
    Provenance provenance;

    int exit_status() const { return provenance.flags.any() ? kExitInvariantViolation : kExitClean; }
};

// Runs one scenario. Engine errors propagate with the failing time in the
// message; tolerance breaches are recorded in provenance.flags.
RunReport run_scenario(const ScenarioConfig& cfg);

// Runs every entry of plan_runs(cfg) concurrently; results keep plan order.
std::vector<RunReport> run_sweep(const ScenarioConfig& cfg);

// CSV header and rows for the selected columns (all when empty).
std::string trajectory_csv(const RunReport& report);
std::string witness_summary(const RunReport& report);
std::string qcr_csv(const RunReport& report);
std::string provenance_text(const RunReport& report);

// trajectory.csv, witness.txt, qcr.csv, provenance.txt
void write_report(const RunReport& report, const std::filesystem::path& dir);

struct Fig2Options {
    double lambda = 1.0;
    double phi = 0.0;
    double lambda_t_max = 10.0;
    std::optional<double> dt;
};

struct Fig2Result {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> omissions; // one entry per dropped gamma row
};

// Panels (a) I weak, (b) gamma weak, (c) I strong, (d) gamma strong for
// W = 0.3 lambda and W = 3 lambda; two columns (lambda_t, value). Gamma rows
// inside guard bands are omitted and listed in fig2_omissions.log.
Fig2Result emit_fig2_panels(const std::filesystem::path& dir, const Fig2Options& opts = {});

} // namespace qfiflow::cli
