#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qfiflow/dynamics.hpp"
#include "qfiflow/errors.hpp"

namespace qfiflow::cli {

enum class ModelKind { DampedJC, MarkovControl, CustomGenerator };
enum class IntegrationPath { Segmented, Generator };

// Dense matrix literal, row-major.
struct MatrixSpec {
    int dim = 0;
    std::vector<Complex> entries;

    Matrix to_matrix() const;
    static MatrixSpec from(const Matrix& m);
    bool operator==(const MatrixSpec&) const = default;
};

// gamma(t) = base + amp * cos(freq * t)
struct RateSpec {
    double base = 0.0;
    double amp = 0.0;
    double freq = 0.0;

    double operator()(double t) const;
    bool operator==(const RateSpec&) const = default;
};

struct ChannelSpec {
    MatrixSpec jump;
    RateSpec rate;
    bool has_amp = false;
    bool has_freq = false;
    bool operator==(const ChannelSpec&) const = default;
};

// Custom generator; the inference parameter enters through
// rho0(theta) = exp(-i theta G) probe exp(i theta G).
struct CustomSpec {
    std::optional<MatrixSpec> hamiltonian;
    std::vector<ChannelSpec> channels;
    MatrixSpec probe;
    MatrixSpec param_generator;
    std::optional<double> theta;
    bool operator==(const CustomSpec&) const = default;
};

struct SweepSpec {
    std::string param;
    std::vector<double> values;
    bool operator==(const SweepSpec&) const = default;
};

struct ScenarioConfig {
    ModelKind model = ModelKind::DampedJC;
    std::optional<double> W;
    std::optional<double> lambda;
    std::optional<double> phi;
    std::optional<double> gamma0;
    double t_max = 10.0;
    std::optional<double> dt;
    StepperConfig::Kind stepper = StepperConfig::Kind::FixedRk4;
    std::optional<double> stepper_tolerance;
    IntegrationPath path = IntegrationPath::Segmented;
    std::optional<double> guard_halfwidth;
    std::vector<std::string> outputs; // empty selects every column
    std::vector<long> report_M;
    std::optional<double> witness_eps;
    std::optional<SweepSpec> sweep;
    std::optional<CustomSpec> custom;

    bool operator==(const ScenarioConfig&) const = default;

    // dt if set, else 1e-3/lambda (damped_jc), 1e-3/gamma0 (markov_control)
    // or 1e-3 * t_max (custom_generator), capped at t_max/10.
    double effective_dt() const;
    double effective_guard_halfwidth() const; // default 3 * dt
    std::vector<long> effective_M() const;    // default {1}
    StepperConfig stepper_config() const;
    std::size_t channel_count() const;
    int dim() const;
};

struct ConfigIssue {
    enum class Kind { Schema, Range };
    Kind kind;
    std::string key;
    std::string message;
};

// Carries every violation found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
std::string emit_config(const ScenarioConfig& cfg);

// Re-checks range invariants (used after CLI overrides and sweep expansion).
void validate_config(const ScenarioConfig& cfg);

// One config per sweep value, with the swept parameter substituted and the
// sweep block removed. Without a sweep, returns {cfg}.
std::vector<ScenarioConfig> plan_runs(const ScenarioConfig& cfg);

// Every column name the scenario can produce, in CSV order.
std::vector<std::string> available_columns(const ScenarioConfig& cfg);

const char* to_string(ModelKind k);

std::string format_double(double v); // 17 significant digits
Complex parse_complex(const std::string& token);
std::string format_complex(Complex z);

} // namespace qfiflow::cli
