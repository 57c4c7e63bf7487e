#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qfiflow/operators.hpp"

namespace qfiflow {

// Hermitian, unit-trace, numerically positive matrix. Construction validates
// the invariants; the stored matrix is symmetrized.
class DensityMatrix {
public:
    static constexpr double kHermTol = 1e-9;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kPositivityTol = -1e-8;

    explicit DensityMatrix(const Matrix& m);

    // Skips validation; used by the integrator, which checks trace and
    // positivity with its own (looser) thresholds.
    static DensityMatrix unchecked(const Matrix& m);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    double min_eigenvalue() const;
    double purity() const;

private:
    DensityMatrix() = default;
    Matrix m_;
};

using MatrixFunction = std::function<Matrix(double)>;
using RateFunction = std::function<double(double)>;

struct DissipativeChannel {
    RateFunction rate;     // may be negative
    MatrixFunction jump;
    std::string label;
};

// Time-local generator K(t): -i[H(t), X] + sum_i g_i(t) (A X A^+ - {A^+A, X}/2).
class TimeLocalGenerator {
public:
    TimeLocalGenerator(int dim, MatrixFunction hamiltonian, std::vector<DissipativeChannel> channels);

    static MatrixFunction constant(const Matrix& m);
    static RateFunction constant_rate(double gamma);

    int dim() const { return dim_; }
    const std::vector<DissipativeChannel>& channels() const { return channels_; }
    std::size_t channel_count() const { return channels_.size(); }

    Matrix hamiltonian(double t) const;
    double rate(std::size_t channel, double t) const;
    Matrix jump(std::size_t channel, double t) const;

    // Copy with an extra Hamiltonian term added to H(t).
    TimeLocalGenerator with_added_hamiltonian(MatrixFunction extra) const;

private:
    int dim_;
    MatrixFunction hamiltonian_;
    std::vector<DissipativeChannel> channels_;
};

// K(t) with H, rates and jump operators evaluated once, so it can be applied to
// several matrices (rho and d_theta rho) at the same substage time.
class GeneratorSnapshot {
public:
    GeneratorSnapshot(const TimeLocalGenerator& gen, double t);

    Matrix apply(const Matrix& x) const;
    // Only the dissipator of channel i, without the rate factor.
    Matrix apply_dissipator(std::size_t channel, const Matrix& x) const;

    double time() const { return t_; }
    const Matrix& hamiltonian() const { return h_; }
    const std::vector<double>& rates() const { return rates_; }
    const std::vector<Matrix>& jumps() const { return jumps_; }

private:
    double t_;
    Matrix h_;
    std::vector<double> rates_;
    std::vector<Matrix> jumps_;
    std::vector<Matrix> jumps_dag_;
    std::vector<Matrix> number_ops_; // A^+ A
};

Matrix apply_generator(const TimeLocalGenerator& gen, double t, const Matrix& x);

struct StepperConfig {
    enum class Kind { FixedRk4, Halving };
    Kind kind = Kind::FixedRk4;
    // Halving: accept when |full - two halves|_max <= tolerance.
    double tolerance = 1e-10;
    int max_halvings = 24;
};

struct StepperStats {
    long steps = 0;            // accepted RK4 steps
    long halvings = 0;         // rejected steps that were subdivided
    double max_trace_drift = 0.0;
    double max_herm_drift = 0.0; // before re-symmetrization
    double min_eigenvalue = 1.0;
};

struct ParamTrajectory {
    double theta = 0.0;
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    std::vector<Matrix> param_derivs;
    StepperStats stats;
};

// Thresholds applied on every accepted step.
inline constexpr double kTraceDriftLimit = 1e-6;
inline constexpr double kPositivityLimit = -1e-8;

// Integrates rho and d_theta rho through the same RK4 substage sequence.
// Throws StepSizeUnderflow on rate singularities or exhausted halving, and
// InvariantViolation on trace drift > 1e-6 or min eigenvalue < -1e-8.
ParamTrajectory co_integrate(const TimeLocalGenerator& gen, const DensityMatrix& rho0,
                             const Matrix& drho0, const std::vector<double>& t_grid,
                             const StepperConfig& stepper = {}, double theta = 0.0);

// Central difference (rho_{theta+delta} - rho_{theta-delta}) / (2 delta) of two
// independently integrated trajectories. Test oracle for co_integrate.
std::vector<Matrix> finite_diff_param_deriv(const TimeLocalGenerator& gen,
                                            const std::function<DensityMatrix(double)>& rho0_at,
                                            double theta, const std::vector<double>& t_grid,
                                            const StepperConfig& stepper, double delta);

// t0, t0 + dt, ..., with the last point snapped to t_max.
std::vector<double> uniform_grid(double t0, double t_max, double dt);

} // namespace qfiflow
