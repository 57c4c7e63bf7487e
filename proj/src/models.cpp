#include "qfiflow/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qfiflow/errors.hpp"

namespace qfiflow::models {

namespace {

// sinh(x)/x and sin(x)/x, accurate near 0.
double sinhc(double x) { return std::abs(x) < 1e-8 ? 1.0 + x * x / 6.0 : std::sinh(x) / x; }
double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

} // namespace

DampedJCParams::DampedJCParams(double W, double lambda, double phi) : W_(W), lambda_(lambda), phi_(phi) {
    if (!(W > 0.0) || !std::isfinite(W)) throw InvalidArgument("DampedJCParams: W must be positive and finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("DampedJCParams: lambda must be positive and finite");
    }
    if (!std::isfinite(phi)) throw InvalidArgument("DampedJCParams: phi must be finite");
    regime_ = (W <= 0.5 * lambda) ? Regime::Weak : Regime::Strong;
    d_ = std::sqrt(std::abs(lambda * lambda - 4.0 * W * W));
}

// With x = d t / 2 both branches read
//   h  = e^{-lambda t/2} [c(x) + (lambda t/2) s(x)/x]
//   h' = -W^2 t e^{-lambda t/2} s(x)/x
// where (c, s) = (cosh, sinh) or (cos, sin). s(x)/x -> 1 covers d = 0.
double h_function(double t, const DampedJCParams& p) {
    const double x = 0.5 * p.d() * t;
    const double decay = std::exp(-0.5 * p.lambda() * t);
    const double half_lt = 0.5 * p.lambda() * t;
    if (p.regime() == Regime::Weak) return decay * (std::cosh(x) + half_lt * sinhc(x));
    return decay * (std::cos(x) + half_lt * sinc(x));
}

double h_dot(double t, const DampedJCParams& p) {
    const double x = 0.5 * p.d() * t;
    const double decay = std::exp(-0.5 * p.lambda() * t);
    const double s = p.regime() == Regime::Weak ? sinhc(x) : sinc(x);
    return -p.W() * p.W() * t * decay * s;
}

double gamma_t(double t, const DampedJCParams& p, double guard) {
    const double h = h_function(t, p);
    if (std::abs(h) <= guard) {
        std::ostringstream os;
        os.precision(17);
        os << "gamma(t) diverges: |h(" << t << ")| = " << std::abs(h) << " <= " << guard;
        throw RateSingularity(os.str());
    }
    return -2.0 * h_dot(t, p) / h;
}

std::vector<double> h_zeros(const DampedJCParams& p, double t_max) {
    std::vector<double> zeros;
    if (p.regime() == Regime::Weak) return zeros;
    // cos x + (lambda/d) sin x = 0  <=>  x = pi - atan(d/lambda) + k pi
    const double x0 = std::numbers::pi - std::atan(p.d() / p.lambda());
    for (int k = 0;; ++k) {
        const double t = 2.0 * (x0 + k * std::numbers::pi) / p.d();
        if (t > t_max) break;
        zeros.push_back(t);
    }
    return zeros;
}

TimeLocalGenerator build_generator(const DampedJCParams& p, double guard) {
    DissipativeChannel decay{[p, guard](double t) { return gamma_t(t, p, guard); },
                             TimeLocalGenerator::constant(ops::sigma_minus()), "sigma_minus"};
    return TimeLocalGenerator(2, TimeLocalGenerator::constant(Matrix::Zero(2, 2)), {decay});
}

DensityMatrix optimal_probe(double phi) {
    return DensityMatrix(amplitude_damping_state(1.0, phi).to_matrix());
}

Matrix probe_param_deriv(double phi) { return amplitude_damping_state_deriv(1.0, phi).to_matrix(true); }

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

Matrix BlochVector::to_matrix(bool as_traceless) const {
    Matrix m = x * ops::sigma_x() + y * ops::sigma_y() + z * ops::sigma_z();
    if (!as_traceless) m += ops::identity(2);
    return 0.5 * m;
}

BlochVector BlochVector::of(const Matrix& rho) {
    if (rho.rows() != 2 || rho.cols() != 2) throw DimensionMismatch("BlochVector::of: qubit matrix required");
    return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

BlochVector amplitude_damping_state(double h, double phi) {
    return {h * std::cos(phi), -h * std::sin(phi), h * h - 1.0};
}

BlochVector amplitude_damping_state_deriv(double h, double phi) {
    return {-h * std::sin(phi), -h * std::cos(phi), 0.0};
}

BlochVector analytic_state(double t, const DampedJCParams& p) {
    return amplitude_damping_state(h_function(t, p), p.phi());
}

BlochVector analytic_state_deriv(double t, const DampedJCParams& p) {
    return amplitude_damping_state_deriv(h_function(t, p), p.phi());
}

double analytic_qfi(double t, const DampedJCParams& p) {
    const double h = h_function(t, p);
    return h * h;
}

double analytic_flow(double t, const DampedJCParams& p) { return 2.0 * h_function(t, p) * h_dot(t, p); }

TimeLocalGenerator markov_control(double gamma0) {
    if (!(gamma0 > 0.0)) throw InvalidArgument("markov_control: gamma0 must be positive");
    DissipativeChannel decay{TimeLocalGenerator::constant_rate(gamma0),
                             TimeLocalGenerator::constant(ops::sigma_minus()), "sigma_minus"};
    return TimeLocalGenerator(2, TimeLocalGenerator::constant(Matrix::Zero(2, 2)), {decay});
}

double markov_h(double t, double gamma0) { return std::exp(-0.5 * gamma0 * t); }

double markov_h_dot(double t, double gamma0) { return -0.5 * gamma0 * markov_h(t, gamma0); }

} // namespace qfiflow::models
