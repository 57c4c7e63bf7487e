#include "doctest.h"
#include "oracles.hpp"
#include "qfiflow/dynamics.hpp"
#include "qfiflow/errors.hpp"
#include "qfiflow/models.hpp"

using namespace qfiflow;
using namespace qfiflow::ops;

namespace {

Matrix ket_bra(int i, int j) {
    Matrix m = Matrix::Zero(2, 2);
    m(i, j) = 1.0;
    return m;
}

// Random generator with smooth time dependence; rates in [rate_lo, rate_hi].
TimeLocalGenerator random_generator(oracle::Random& rnd, int n, int channels, double rate_lo, double rate_hi) {
    const Matrix h0 = rnd.hermitian(n, 0.5);
    const Matrix h1 = rnd.hermitian(n, 0.5);
    const double w = rnd.uniform(0.5, 2.0);
    std::vector<DissipativeChannel> chans;
    for (int c = 0; c < channels; ++c) {
        const Matrix a = rnd.complex_matrix(n) * 0.5;
        const double mid = 0.5 * (rate_lo + rate_hi), amp = 0.5 * (rate_hi - rate_lo);
        const double f = rnd.uniform(0.5, 3.0), ph = rnd.uniform(0.0, 6.0);
        chans.push_back({[=](double t) { return mid + amp * std::cos(f * t + ph); },
                         TimeLocalGenerator::constant(a), "c" + std::to_string(c)});
    }
    return TimeLocalGenerator(n, [=](double t) -> Matrix { return h0 + std::sin(w * t) * h1; }, chans);
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("DensityMatrix validates its invariants") {
    CHECK_NOTHROW(DensityMatrix(0.5 * identity(2)));
    CHECK_THROWS_AS(DensityMatrix(identity(2)), InvariantViolation);                 // trace 2
    CHECK_THROWS_AS(DensityMatrix(0.5 * identity(2) + 0.1 * sigma_plus()), InvariantViolation); // non-Hermitian
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.2;
    neg(1, 1) = -0.2;
    CHECK_THROWS_AS(DensityMatrix{neg}, InvariantViolation);
    CHECK(DensityMatrix(ket_bra(0, 0)).purity() == doctest::Approx(1.0));
}

TEST_CASE("apply_generator: coherent term alone") {
    const TimeLocalGenerator gen(2, TimeLocalGenerator::constant(0.5 * sigma_z()), {});
    const Matrix x = 0.5 * (identity(2) + sigma_x());
    const Matrix hx = oracle::naive_mul(0.5 * sigma_z(), x), xh = oracle::naive_mul(x, 0.5 * sigma_z());
    const Matrix expected = -kI * (hx - xh);
    const Matrix out = apply_generator(gen, 0.0, x);
    CHECK(max_norm(out - expected) < 1e-15);
    CHECK(max_norm(out - 0.5 * sigma_y()) < 1e-15);
    CHECK(std::abs(trace(out)) < 1e-15);
}

TEST_CASE("apply_generator: maximally mixed state is fixed by unitary jumps") {
    oracle::Random rnd(7);
    for (int n : {2, 3, 4}) {
        const Matrix u = rnd.unitary(n);
        const TimeLocalGenerator gen(n, TimeLocalGenerator::constant(rnd.hermitian(n)),
                                     {{TimeLocalGenerator::constant_rate(rnd.uniform(-2, 2)),
                                       TimeLocalGenerator::constant(u), "u"}});
        CHECK(max_norm(apply_generator(gen, 0.3, identity(n) / n)) < 1e-14);
    }
}

TEST_CASE("apply_generator: damped JC on the excited state") {
    const models::DampedJCParams p(3.0, 1.0);
    const TimeLocalGenerator gen = models::build_generator(p);
    for (double t : {0.1, 0.3, 1.0, 2.5}) {
        const double g = models::gamma_t(t, p);
        const Matrix out = apply_generator(gen, t, ket_bra(0, 0));
        CHECK(max_norm(out - g * (ket_bra(1, 1) - ket_bra(0, 0))) < 1e-14 * std::max(1.0, std::abs(g)));
    }
}

TEST_CASE("apply_generator: output Hermitian and traceless") {
    oracle::Random rnd(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rnd.integer(2, 4);
        const TimeLocalGenerator gen = random_generator(rnd, n, rnd.integer(1, 3), -1.0, 1.0);
        const Matrix x = rnd.hermitian(n);
        const Matrix out = apply_generator(gen, rnd.uniform(0, 5), x);
        CHECK(hermiticity_defect(out) <= 1e-12 * std::max(1.0, max_norm(x)) * 10);
        CHECK(std::abs(trace(out)) <= 1e-12 * std::max(1.0, max_norm(x)) * 10);
    }
}

TEST_CASE("apply_generator dimension mismatch") {
    const TimeLocalGenerator gen(2, nullptr, {});
    CHECK_THROWS_AS(apply_generator(gen, 0.0, identity(3)), DimensionMismatch);
}

TEST_CASE("co_integrate: H-only evolution is isospectral") {
    oracle::Random rnd(23);
    const int n = 3;
    const TimeLocalGenerator gen = random_generator(rnd, n, 0, 0.0, 0.0);
    const DensityMatrix rho0(rnd.density(n));
    const auto grid = uniform_grid(0.0, 5.0, 1e-3);
    const auto traj = co_integrate(gen, rho0, rnd.traceless_hermitian(n), grid);
    const RealVector p0 = eigh(rho0.matrix()).eigenvalues;
    for (std::size_t k = 0; k < grid.size(); k += 250) {
        const RealVector pk = eigh(traj.states[k].matrix()).eigenvalues;
        CHECK((pk - p0).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(trace(traj.states[k].matrix()) - 1.0) < 1e-9);
    }
}

TEST_CASE("co_integrate: trivial generator leaves the state untouched") {
    oracle::Random rnd(29);
    const TimeLocalGenerator gen(2, nullptr, {{TimeLocalGenerator::constant_rate(0.0),
                                               TimeLocalGenerator::constant(sigma_minus()), "off"}});
    const DensityMatrix rho0(rnd.density(2));
    const Matrix d0 = rnd.traceless_hermitian(2);
    const auto traj = co_integrate(gen, rho0, d0, uniform_grid(0.0, 1.0, 1e-2));
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        CHECK(max_norm(traj.states[k].matrix() - rho0.matrix()) == 0.0);
        CHECK(max_norm(traj.param_derivs[k] - hermitian_part(d0)) == 0.0);
    }
}

TEST_CASE("co_integrate: damped JC matches the closed-form Bloch solution") {
    for (double phi : {0.0, 0.7}) {
        const models::DampedJCParams p(0.3, 1.0, phi);
        const auto grid = uniform_grid(0.0, 10.0, 1e-3);
        const auto traj = co_integrate(models::build_generator(p), models::optimal_probe(phi),
                                       models::probe_param_deriv(phi), grid);
        double worst = 0.0, worst_d = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            worst = std::max(worst, max_norm(traj.states[k].matrix() -
                                             models::analytic_state(grid[k], p).to_matrix()));
            worst_d = std::max(worst_d, max_norm(traj.param_derivs[k] -
                                                 models::analytic_state_deriv(grid[k], p).to_matrix(true)));
        }
        CHECK(worst < 1e-6);
        CHECK(worst_d < 1e-6);
        CHECK(traj.stats.max_trace_drift < 1e-9);
    }
}

TEST_CASE("co_integrate: excited population follows h^2 / 2 before the first zero") {
    const models::DampedJCParams p(3.0, 1.0);
    const auto grid = uniform_grid(0.0, 0.55, 1e-3);
    const auto traj =
        co_integrate(models::build_generator(p), models::optimal_probe(0.0), models::probe_param_deriv(0.0), grid);
    for (std::size_t k = 0; k < grid.size(); k += 50) {
        const double h = models::h_function(grid[k], p);
        CHECK(std::abs(traj.states[k].matrix()(0, 0).real() - 0.5 * h * h) < 1e-8);
    }
}

TEST_CASE("finite_diff_param_deriv: theta-independent state gives zero") {
    const models::DampedJCParams p(0.3, 1.0);
    const DensityMatrix fixed = models::optimal_probe(0.4);
    const auto fd = finite_diff_param_deriv(models::build_generator(p), [&](double) { return fixed; }, 0.0,
                                            uniform_grid(0.0, 1.0, 1e-2), {}, 1e-5);
    for (const auto& m : fd) CHECK(max_norm(m) == 0.0);
}

TEST_CASE("finite_diff_param_deriv agrees with co-propagated derivative") {
    const models::DampedJCParams p(0.3, 1.0, 0.4);
    const TimeLocalGenerator gen = models::build_generator(p);
    const auto grid = uniform_grid(0.0, 5.0, 1e-3);
    const auto traj = co_integrate(gen, models::optimal_probe(p.phi()), models::probe_param_deriv(p.phi()), grid);
    const auto fd = finite_diff_param_deriv(gen, [](double phi) { return models::optimal_probe(phi); }, p.phi(), grid,
                                            {}, 1e-5);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, max_norm(fd[k] - traj.param_derivs[k]));
    CHECK(worst < 1e-7);
}

TEST_CASE("finite_diff_param_deriv on a pure phase family at t = 0") {
    oracle::Random rnd(31);
    const Matrix base = rnd.density(2);
    auto family = [&](double theta) {
        Matrix u = Matrix::Zero(2, 2);
        u(0, 0) = std::exp(kI * theta * 0.5);
        u(1, 1) = std::exp(-kI * theta * 0.5);
        return DensityMatrix(hermitian_part(u * base * u.adjoint()));
    };
    const double theta = 0.8, delta = 1e-4;
    const TimeLocalGenerator gen(2, nullptr, {});
    const auto fd = finite_diff_param_deriv(gen, family, theta, {0.0}, {}, delta);
    // d/dtheta e^{i theta sz/2} rho e^{-i theta sz/2} = i [sz/2, rho(theta)]
    const Matrix exact = kI * commutator(0.5 * sigma_z(), family(theta).matrix());
    CHECK(max_norm(fd[0] - exact) < 1e-8);
    CHECK_THROWS_AS(finite_diff_param_deriv(gen, family, theta, {0.0}, {}, 0.0), InvalidArgument);
}

TEST_CASE("co_integrate is linear in the initial state") {
    oracle::Random rnd(37);
    const TimeLocalGenerator gen = random_generator(rnd, 2, 2, 0.1, 0.8);
    const Matrix r1 = rnd.density(2), r2 = rnd.density(2);
    const double alpha = 0.35;
    const auto grid = uniform_grid(0.0, 3.0, 1e-2);
    const Matrix zero = Matrix::Zero(2, 2);
    const auto t1 = co_integrate(gen, DensityMatrix(r1), zero, grid);
    const auto t2 = co_integrate(gen, DensityMatrix(r2), zero, grid);
    const auto mix = co_integrate(gen, DensityMatrix(alpha * r1 + (1 - alpha) * r2), zero, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Matrix combo = alpha * t1.states[k].matrix() + (1 - alpha) * t2.states[k].matrix();
        CHECK(max_norm(mix.states[k].matrix() - combo) < 1e-12);
    }
}

TEST_CASE("co_integrate preserves trace and Hermiticity on random generators") {
    oracle::Random rnd(41);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rnd.integer(2, 4);
        const TimeLocalGenerator gen = random_generator(rnd, n, rnd.integer(1, 3), 0.0, 1.0);
        const auto traj = co_integrate(gen, DensityMatrix(rnd.density(n)), rnd.traceless_hermitian(n),
                                       uniform_grid(0.0, 2.0, 1e-2));
        CHECK(traj.stats.max_trace_drift <= 1e-9);
        for (const auto& s : traj.states) CHECK(hermiticity_defect(s.matrix()) <= 1e-10);
    }
}

TEST_CASE("halving stepper matches a fine fixed-step reference") {
    const models::DampedJCParams p(0.3, 1.0);
    const TimeLocalGenerator gen = models::build_generator(p);
    StepperConfig halving;
    halving.kind = StepperConfig::Kind::Halving;
    const auto grid = uniform_grid(0.0, 4.0, 0.1);
    const auto traj = co_integrate(gen, models::optimal_probe(0.0), models::probe_param_deriv(0.0), grid, halving);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(max_norm(traj.states[k].matrix() - models::analytic_state(grid[k], p).to_matrix()) < 1e-8);
    }
    CHECK(traj.stats.steps >= static_cast<long>(2 * (grid.size() - 1)));
}

TEST_CASE("co_integrate error paths") {
    const Matrix zero = Matrix::Zero(2, 2);
    SUBCASE("rate singularity inside a step") {
        const TimeLocalGenerator gen(2, nullptr, {{[](double t) -> double {
                                                       if (t > 0.05) throw RateSingularity("boom");
                                                       return 0.1;
                                                   },
                                                   TimeLocalGenerator::constant(sigma_minus()), "s"}});
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(0.5 * identity(2)), zero, uniform_grid(0.0, 1.0, 0.1)),
                        StepSizeUnderflow);
    }
    SUBCASE("halving exhausted") {
        const TimeLocalGenerator gen(2, nullptr, {{TimeLocalGenerator::constant_rate(5e3),
                                                   TimeLocalGenerator::constant(sigma_minus()), "s"}});
        StepperConfig s;
        s.kind = StepperConfig::Kind::Halving;
        s.max_halvings = 2;
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(0.5 * identity(2)), zero, {0.0, 1.0}, s), StepSizeUnderflow);
    }
    SUBCASE("positivity blow-up under a strongly negative rate") {
        const TimeLocalGenerator gen(2, nullptr, {{TimeLocalGenerator::constant_rate(-2.0),
                                                   TimeLocalGenerator::constant(sigma_minus()), "s"}});
        Matrix mixed = Matrix::Zero(2, 2);
        mixed(0, 0) = 0.5;
        mixed(1, 1) = 0.5;
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(mixed), zero, uniform_grid(0.0, 3.0, 1e-2)),
                        InvariantViolation);
    }
    SUBCASE("bad inputs") {
        const TimeLocalGenerator gen(2, nullptr, {});
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(0.5 * identity(2)), identity(2), {0.0, 1.0}),
                        InvalidArgument);
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(0.5 * identity(2)), zero, {0.0, 0.0}), InvalidArgument);
        CHECK_THROWS_AS(co_integrate(gen, DensityMatrix(identity(3) / 3.0), Matrix::Zero(3, 3), {0.0, 1.0}),
                        DimensionMismatch);
    }
}

TEST_CASE("uniform_grid") {
    const auto g = uniform_grid(0.0, 1.0, 0.1);
    REQUIRE(g.size() == 11);
    CHECK(g.back() == 1.0);
    CHECK(g[3] == doctest::Approx(0.3));
    const auto odd = uniform_grid(0.0, 1.05, 0.1);
    CHECK(odd.size() == 12);
    CHECK(odd.back() == 1.05);
    CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 0.0), InvalidArgument);
}

} // TEST_SUITE
