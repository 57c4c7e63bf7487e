#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "qfiflow/dynamics.hpp"
#include "qfiflow/operators.hpp"

namespace qfiflow {

inline constexpr double kDefaultSupportTol = 1e-12;
// Largest |d_theta rho| entry tolerated on the joint kernel of rho.
inline constexpr double kKernelLeakLimit = 1e-6;

struct SldResult {
    Matrix L;
    int support_rank = 0;
    // max |<k|d_theta rho|l>| over eigenvector pairs with p_k + p_l <= p_tol
    double kernel_projector_norm_of_deriv = 0.0;
};

// Symmetric logarithmic derivative: the Hermitian L with
// (L rho + rho L) / 2 = drho on the support of rho. Built elementwise in the
// eigenbasis of rho, L_kl = 2 drho_kl / (p_k + p_l).
SldResult sld(const DensityMatrix& rho, const Matrix& drho, double p_tol = kDefaultSupportTol);

// F = Tr[L^2 rho], clamped at 0 from within -1e-10; more negative values
// throw InvariantViolation.
double qfi(const DensityMatrix& rho, const Matrix& L);

using Vec3 = std::array<double, 3>;

// Qubit QFI from the Bloch vector and its parameter derivative.
double qfi_bloch(const Vec3& b, const Vec3& db);

// Var(theta) >= 1 / (M F). Throws NonpositiveQfi for F <= 0.
double cramer_rao_bound(double F, long M);

// J = -Tr{rho [L, A]^+ [L, A]}, nonpositive up to roundoff.
double channel_subflow_factor(const DensityMatrix& rho, const Matrix& L, const Matrix& A);

struct ChannelFlow {
    double gamma = 0.0;
    double J = 0.0;
    double I = 0.0; // gamma * J
};

struct FlowSample {
    double t = 0.0;
    double F = 0.0;
    double I_total = 0.0;
    std::vector<ChannelFlow> channels;
};

FlowSample flow_decomposed(const GeneratorSnapshot& k, const DensityMatrix& rho, const Matrix& L);
FlowSample flow_decomposed(const TimeLocalGenerator& gen, double t, const DensityMatrix& rho, const Matrix& L);

// dF/dt = 2 Tr[L K(d_theta rho)] - Tr[L^2 K(rho)], using that K does not
// depend on theta.
double flow_direct(const GeneratorSnapshot& k, const DensityMatrix& rho, const Matrix& drho, const Matrix& L);
double flow_direct(const TimeLocalGenerator& gen, double t, const DensityMatrix& rho, const Matrix& drho,
                   const Matrix& L);

struct FlowSeries {
    std::vector<FlowSample> samples;
    std::vector<std::pair<double, double>> inward_intervals;
    // Trapezoidal integral of max(I_total, 0). A heuristic aggregate, not an
    // established non-Markovianity measure.
    double accumulated_inward = 0.0;
    double eps = 0.0;
};

// Inward-flow witness: maximal runs of samples with I_total > eps. Without an
// explicit eps the threshold is 1e-9 * max |I_total|.
FlowSeries witness(std::vector<FlowSample> samples, std::optional<double> eps = std::nullopt);

} // namespace qfiflow
