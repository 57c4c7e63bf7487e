#pragma once

#include <vector>

#include "qfiflow/dynamics.hpp"
#include "qfiflow/qfi_flow.hpp"

namespace qfiflow::models {

enum class Regime { Weak, Strong };

// Two-level atom in a vacuum reservoir with Lorentzian spectral density,
// coupling strength W and spectral width lambda (bath correlation time
// 1/lambda). phi is the phase imprinted by the probe gate.
class DampedJCParams {
public:
    DampedJCParams(double W, double lambda, double phi = 0.0);

    double W() const { return W_; }
    double lambda() const { return lambda_; }
    double phi() const { return phi_; }
    Regime regime() const { return regime_; }
    // sqrt(|lambda^2 - 4 W^2|)
    double d() const { return d_; }

    DampedJCParams with_phi(double phi) const { return {W_, lambda_, phi}; }

private:
    double W_;
    double lambda_;
    double phi_;
    Regime regime_;
    double d_;
};

// |h| at or below this makes gamma(t) = -2 h'/h a RateSingularity.
inline constexpr double kSingularityGuard = 1e-9;

// Amplitude envelope: cosh/sinh form for W <= lambda/2, cos/sin form above,
// exp(-lambda t/2) (1 + lambda t/2) exactly at W = lambda/2.
double h_function(double t, const DampedJCParams& p);
double h_dot(double t, const DampedJCParams& p);
double gamma_t(double t, const DampedJCParams& p, double guard = kSingularityGuard);

// Zeros of h on (0, t_max]; empty in the weak regime.
std::vector<double> h_zeros(const DampedJCParams& p, double t_max);

// Single channel sigma_minus with rate gamma(t), no Hamiltonian
// (interaction picture).
TimeLocalGenerator build_generator(const DampedJCParams& p, double guard = kSingularityGuard);

// U_phi (|g> + |e>)/sqrt(2), i.e. (I + cos(phi) sx - sin(phi) sy)/2.
DensityMatrix optimal_probe(double phi);
Matrix probe_param_deriv(double phi);

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 as_array() const { return {x, y, z}; }
    double norm() const;
    // (I + B.sigma)/2; for a derivative vector pass as_traceless = true to get B.sigma/2.
    Matrix to_matrix(bool as_traceless = false) const;
    static BlochVector of(const Matrix& rho);
};

// Closed-form solution for an amplitude-damped probe with envelope h:
// B = (h cos phi, -h sin phi, h^2 - 1), and its phi derivative.
BlochVector amplitude_damping_state(double h, double phi);
BlochVector amplitude_damping_state_deriv(double h, double phi);

BlochVector analytic_state(double t, const DampedJCParams& p);
BlochVector analytic_state_deriv(double t, const DampedJCParams& p);
double analytic_qfi(double t, const DampedJCParams& p);  // h^2
double analytic_flow(double t, const DampedJCParams& p); // 2 h h'

// Constant-rate Lindblad control model: sigma_minus at rate gamma0 > 0.
TimeLocalGenerator markov_control(double gamma0);
// Envelope of the control model, exp(-gamma0 t / 2).
double markov_h(double t, double gamma0);
double markov_h_dot(double t, double gamma0);

} // namespace qfiflow::models
