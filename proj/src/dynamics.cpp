#include "qfiflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "qfiflow/errors.hpp"

namespace qfiflow {

namespace {

std::string at_time(double t) {
    std::ostringstream os;
    os.precision(17);
    os << " (t = " << t << ")";
    return os.str();
}

void require_square(const Matrix& m, int dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                                std::to_string(dim) + ", got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
    }
}

struct StatePair {
    Matrix rho;
    Matrix drho;
};

GeneratorSnapshot snapshot_or_underflow(const TimeLocalGenerator& gen, double t) {
    try {
        return GeneratorSnapshot(gen, t);
    } catch (const RateSingularity& e) {
        throw StepSizeUnderflow(std::string("rate singularity inside integration step: ") + e.what());
    }
}

StatePair rk4_step(const TimeLocalGenerator& gen, double t, double dt, const StatePair& y) {
    const GeneratorSnapshot k_start = snapshot_or_underflow(gen, t);
    const GeneratorSnapshot k_mid = snapshot_or_underflow(gen, t + 0.5 * dt);
    const GeneratorSnapshot k_end = snapshot_or_underflow(gen, t + dt);

    const Matrix r1 = k_start.apply(y.rho);
    const Matrix d1 = k_start.apply(y.drho);
    const Matrix r2 = k_mid.apply(y.rho + 0.5 * dt * r1);
    const Matrix d2 = k_mid.apply(y.drho + 0.5 * dt * d1);
    const Matrix r3 = k_mid.apply(y.rho + 0.5 * dt * r2);
    const Matrix d3 = k_mid.apply(y.drho + 0.5 * dt * d2);
    const Matrix r4 = k_end.apply(y.rho + dt * r3);
    const Matrix d4 = k_end.apply(y.drho + dt * d3);

    return {y.rho + (dt / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4),
            y.drho + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)};
}

StatePair advance_halving(const TimeLocalGenerator& gen, double t, double dt, const StatePair& y,
                          const StepperConfig& cfg, int depth, StepperStats& stats) {
    const StatePair full = rk4_step(gen, t, dt, y);
    const StatePair half = rk4_step(gen, t + 0.5 * dt, 0.5 * dt, rk4_step(gen, t, 0.5 * dt, y));
    const double err = std::max(ops::max_norm(full.rho - half.rho), ops::max_norm(full.drho - half.drho));
    if (std::isfinite(err) && err <= cfg.tolerance) {
        stats.steps += 2;
        return half;
    }
    if (depth >= cfg.max_halvings) {
        throw StepSizeUnderflow("step halving exhausted after " + std::to_string(depth) +
                                " levels, step error " + std::to_string(err) + at_time(t));
    }
    ++stats.halvings;
    const StatePair mid = advance_halving(gen, t, 0.5 * dt, y, cfg, depth + 1, stats);
    return advance_halving(gen, t + 0.5 * dt, 0.5 * dt, mid, cfg, depth + 1, stats);
}

} // namespace

DensityMatrix::DensityMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw DimensionMismatch("DensityMatrix: matrix must be square");
    if (!m.allFinite()) throw InvariantViolation("DensityMatrix: non-finite entries");
    const double herm = ops::hermiticity_defect(m);
    if (herm > kHermTol) throw InvariantViolation("DensityMatrix: Hermiticity defect " + std::to_string(herm));
    const double tr_err = std::abs(m.trace() - Complex(1.0));
    if (tr_err > kTraceTol) throw InvariantViolation("DensityMatrix: trace deviates from 1 by " + std::to_string(tr_err));
    m_ = ops::hermitian_part(m);
    const double pmin = min_eigenvalue();
    if (pmin < kPositivityTol) throw InvariantViolation("DensityMatrix: negative eigenvalue " + std::to_string(pmin));
}

DensityMatrix DensityMatrix::unchecked(const Matrix& m) {
    DensityMatrix d;
    d.m_ = m;
    return d;
}

double DensityMatrix::min_eigenvalue() const { return ops::eigh(m_).eigenvalues(0); }

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

TimeLocalGenerator::TimeLocalGenerator(int dim, MatrixFunction hamiltonian, std::vector<DissipativeChannel> channels)
    : dim_(dim), hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)) {
    if (dim_ < 1) throw InvalidArgument("TimeLocalGenerator: dim must be >= 1");
    if (!hamiltonian_) hamiltonian_ = constant(Matrix::Zero(dim_, dim_));
    for (const auto& ch : channels_) {
        if (!ch.rate || !ch.jump) throw InvalidArgument("TimeLocalGenerator: channel '" + ch.label + "' is incomplete");
    }
}

MatrixFunction TimeLocalGenerator::constant(const Matrix& m) {
    return [m](double) { return m; };
}

RateFunction TimeLocalGenerator::constant_rate(double gamma) {
    return [gamma](double) { return gamma; };
}

Matrix TimeLocalGenerator::hamiltonian(double t) const {
    Matrix h = hamiltonian_(t);
    require_square(h, dim_, "hamiltonian");
    const double tol = 1e-10 * std::max(1.0, ops::max_norm(h));
    if (ops::hermiticity_defect(h) > tol) throw NonHermitian("hamiltonian is not Hermitian" + at_time(t));
    return h;
}

double TimeLocalGenerator::rate(std::size_t channel, double t) const { return channels_.at(channel).rate(t); }

Matrix TimeLocalGenerator::jump(std::size_t channel, double t) const {
    Matrix a = channels_.at(channel).jump(t);
    require_square(a, dim_, "jump operator");
    return a;
}

TimeLocalGenerator TimeLocalGenerator::with_added_hamiltonian(MatrixFunction extra) const {
    MatrixFunction base = hamiltonian_;
    return TimeLocalGenerator(dim_, [base, extra](double t) -> Matrix { return base(t) + extra(t); }, channels_);
}

GeneratorSnapshot::GeneratorSnapshot(const TimeLocalGenerator& gen, double t) : t_(t), h_(gen.hamiltonian(t)) {
    const std::size_t n = gen.channel_count();
    rates_.reserve(n);
    jumps_.reserve(n);
    jumps_dag_.reserve(n);
    number_ops_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = gen.rate(i, t);
        if (!std::isfinite(g)) throw RateSingularity("non-finite rate for channel " + std::to_string(i) + at_time(t));
        rates_.push_back(g);
        jumps_.push_back(gen.jump(i, t));
        jumps_dag_.push_back(jumps_.back().adjoint());
        number_ops_.push_back(jumps_dag_.back() * jumps_.back());
    }
}

Matrix GeneratorSnapshot::apply_dissipator(std::size_t i, const Matrix& x) const {
    return jumps_[i] * x * jumps_dag_[i] - 0.5 * (number_ops_[i] * x + x * number_ops_[i]);
}

Matrix GeneratorSnapshot::apply(const Matrix& x) const {
    require_square(x, static_cast<int>(h_.rows()), "apply_generator operand");
    Matrix out = -kI * (h_ * x - x * h_);
    for (std::size_t i = 0; i < rates_.size(); ++i) {
        if (rates_[i] != 0.0) out += rates_[i] * apply_dissipator(i, x);
    }
    return out;
}

Matrix apply_generator(const TimeLocalGenerator& gen, double t, const Matrix& x) {
    return GeneratorSnapshot(gen, t).apply(x);
}

ParamTrajectory co_integrate(const TimeLocalGenerator& gen, const DensityMatrix& rho0, const Matrix& drho0,
                             const std::vector<double>& t_grid, const StepperConfig& stepper, double theta) {
    require_square(rho0.matrix(), gen.dim(), "co_integrate rho0");
    require_square(drho0, gen.dim(), "co_integrate drho0");
    if (t_grid.empty()) throw InvalidArgument("co_integrate: empty time grid");
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > t_grid[k - 1])) throw InvalidArgument("co_integrate: time grid must be strictly increasing");
    }
    if (ops::hermiticity_defect(drho0) > 1e-9) throw InvalidArgument("co_integrate: drho0 is not Hermitian");
    if (std::abs(drho0.trace()) > 1e-9) throw InvalidArgument("co_integrate: drho0 is not traceless");

    ParamTrajectory traj;
    traj.theta = theta;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());
    traj.param_derivs.reserve(t_grid.size());
    traj.states.push_back(rho0);
    traj.param_derivs.push_back(ops::hermitian_part(drho0));

    StatePair y{rho0.matrix(), traj.param_derivs.front()};
    StepperStats& stats = traj.stats;
    stats.min_eigenvalue = rho0.min_eigenvalue();

    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double t = t_grid[k - 1];
        const double dt = t_grid[k] - t;
        if (stepper.kind == StepperConfig::Kind::FixedRk4) {
            y = rk4_step(gen, t, dt, y);
            ++stats.steps;
        } else {
            y = advance_halving(gen, t, dt, y, stepper, 0, stats);
        }
        if (!y.rho.allFinite() || !y.drho.allFinite()) {
            throw InvariantViolation("co_integrate: non-finite state" + at_time(t_grid[k]));
        }

        stats.max_herm_drift = std::max(stats.max_herm_drift, ops::hermiticity_defect(y.rho));
        y.rho = ops::hermitian_part(y.rho);
        y.drho = ops::hermitian_part(y.drho);

        const double tr_drift = std::max(std::abs(y.rho.trace() - Complex(1.0)), std::abs(y.drho.trace()));
        stats.max_trace_drift = std::max(stats.max_trace_drift, tr_drift);
        if (tr_drift > kTraceDriftLimit) {
            throw InvariantViolation("co_integrate: trace drift " + std::to_string(tr_drift) + at_time(t_grid[k]));
        }
        const double pmin = ops::eigh(y.rho).eigenvalues(0);
        stats.min_eigenvalue = std::min(stats.min_eigenvalue, pmin);
        if (pmin < kPositivityLimit) {
            throw InvariantViolation("co_integrate: positivity lost, min eigenvalue " + std::to_string(pmin) +
                                     at_time(t_grid[k]));
        }
        traj.states.push_back(DensityMatrix::unchecked(y.rho));
        traj.param_derivs.push_back(y.drho);
    }
    return traj;
}

std::vector<Matrix> finite_diff_param_deriv(const TimeLocalGenerator& gen,
                                            const std::function<DensityMatrix(double)>& rho0_at, double theta,
                                            const std::vector<double>& t_grid, const StepperConfig& stepper,
                                            double delta) {
    if (!(delta > 0.0)) throw InvalidArgument("finite_diff_param_deriv: delta must be positive");
    const Matrix zero = Matrix::Zero(gen.dim(), gen.dim());
    const ParamTrajectory plus = co_integrate(gen, rho0_at(theta + delta), zero, t_grid, stepper, theta + delta);
    const ParamTrajectory minus = co_integrate(gen, rho0_at(theta - delta), zero, t_grid, stepper, theta - delta);
    std::vector<Matrix> out;
    out.reserve(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        out.push_back((plus.states[k].matrix() - minus.states[k].matrix()) / (2.0 * delta));
    }
    return out;
}

std::vector<double> uniform_grid(double t0, double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max > t0)) throw InvalidArgument("uniform_grid: need dt > 0 and t_max > t0");
    const double span = (t_max - t0) / dt;
    auto n = static_cast<long>(std::floor(span + 1e-9));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 2);
    for (long k = 0; k <= n; ++k) grid.push_back(t0 + static_cast<double>(k) * dt);
    if (std::abs(grid.back() - t_max) <= 1e-9 * dt) {
        grid.back() = t_max;
    } else {
        grid.push_back(t_max);
    }
    return grid;
}

} // namespace qfiflow
