#include "qfiflow/qfi_flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qfiflow/errors.hpp"

namespace qfiflow {

SldResult sld(const DensityMatrix& rho, const Matrix& drho, double p_tol) {
    const Matrix& r = rho.matrix();
    if (drho.rows() != r.rows() || drho.cols() != r.cols()) throw DimensionMismatch("sld: drho and rho dims differ");

    const ops::HermitianEigensystem eig = ops::eigh(r);
    const Matrix& v = eig.eigenvectors;
    const RealVector& p = eig.eigenvalues;
    const Matrix d = v.adjoint() * ops::hermitian_part(drho) * v;

    const Eigen::Index n = r.rows();
    SldResult out;
    Matrix l_eig = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (2.0 * p(k) > p_tol) ++out.support_rank;
        for (Eigen::Index l = 0; l < n; ++l) {
            const double s = p(k) + p(l);
            if (s > p_tol) {
                l_eig(k, l) = 2.0 * d(k, l) / s;
            } else {
                out.kernel_projector_norm_of_deriv = std::max(out.kernel_projector_norm_of_deriv, std::abs(d(k, l)));
            }
        }
    }
    if (out.kernel_projector_norm_of_deriv > kKernelLeakLimit) {
        throw SupportInconsistency("sld: derivative leaks into the kernel of rho (" +
                                   std::to_string(out.kernel_projector_norm_of_deriv) + ")");
    }
    out.L = ops::hermitian_part(v * l_eig * v.adjoint());
    return out;
}

double qfi(const DensityMatrix& rho, const Matrix& L) {
    const Matrix& r = rho.matrix();
    if (L.rows() != r.rows() || L.cols() != r.cols()) throw DimensionMismatch("qfi: L and rho dims differ");
    const double f = (L * L * r).trace().real();
    if (f < -1e-10) throw InvariantViolation("qfi: negative value " + std::to_string(f));
    return std::max(f, 0.0);
}

double qfi_bloch(const Vec3& b, const Vec3& db) {
    double b2 = 0.0, db2 = 0.0, bdb = 0.0;
    for (int k = 0; k < 3; ++k) {
        b2 += b[k] * b[k];
        db2 += db[k] * db[k];
        bdb += b[k] * db[k];
    }
    if (b2 > 1.0 + 1e-12) throw InvalidArgument("qfi_bloch: |B| > 1");
    const double mixedness = 1.0 - b2;
    if (mixedness <= 1e-12) return db2;
    return db2 + bdb * bdb / mixedness;
}

double cramer_rao_bound(double F, long M) {
    if (M < 1) throw InvalidArgument("cramer_rao_bound: M must be >= 1");
    if (!(F > 0.0)) throw NonpositiveQfi("cramer_rao_bound: QFI " + std::to_string(F) + " gives no finite bound");
    return 1.0 / (static_cast<double>(M) * F);
}

double channel_subflow_factor(const DensityMatrix& rho, const Matrix& L, const Matrix& A) {
    const Matrix c = ops::commutator(L, A);
    const Matrix& r = rho.matrix();
    if (r.rows() != c.rows()) throw DimensionMismatch("channel_subflow_factor: rho dims differ");
    return -(r * c.adjoint() * c).trace().real();
}

FlowSample flow_decomposed(const GeneratorSnapshot& k, const DensityMatrix& rho, const Matrix& L) {
    FlowSample s;
    s.t = k.time();
    s.F = qfi(rho, L);
    s.channels.reserve(k.rates().size());
    for (std::size_t i = 0; i < k.rates().size(); ++i) {
        ChannelFlow ch;
        ch.gamma = k.rates()[i];
        ch.J = channel_subflow_factor(rho, L, k.jumps()[i]);
        ch.I = ch.gamma * ch.J;
        s.I_total += ch.I;
        s.channels.push_back(ch);
    }
    return s;
}

FlowSample flow_decomposed(const TimeLocalGenerator& gen, double t, const DensityMatrix& rho, const Matrix& L) {
    return flow_decomposed(GeneratorSnapshot(gen, t), rho, L);
}

double flow_direct(const GeneratorSnapshot& k, const DensityMatrix& rho, const Matrix& drho, const Matrix& L) {
    const Matrix k_drho = k.apply(drho);
    const Matrix k_rho = k.apply(rho.matrix());
    return 2.0 * (L * k_drho).trace().real() - (L * L * k_rho).trace().real();
}

double flow_direct(const TimeLocalGenerator& gen, double t, const DensityMatrix& rho, const Matrix& drho,
                   const Matrix& L) {
    return flow_direct(GeneratorSnapshot(gen, t), rho, drho, L);
}

FlowSeries witness(std::vector<FlowSample> samples, std::optional<double> eps) {
    FlowSeries series;
    double max_abs = 0.0;
    for (const auto& s : samples) max_abs = std::max(max_abs, std::abs(s.I_total));
    series.eps = eps.value_or(1e-9 * max_abs);

    bool open = false;
    double start = 0.0, last = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const FlowSample& s = samples[k];
        if (s.I_total > series.eps) {
            if (!open) {
                open = true;
                start = s.t;
            }
            last = s.t;
        } else if (open) {
            series.inward_intervals.emplace_back(start, last);
            open = false;
        }
        if (k > 0) {
            const FlowSample& prev = samples[k - 1];
            series.accumulated_inward +=
                0.5 * (s.t - prev.t) * (std::max(s.I_total, 0.0) + std::max(prev.I_total, 0.0));
        }
    }
    if (open) series.inward_intervals.emplace_back(start, last);
    series.samples = std::move(samples);
    return series;
}

} // namespace qfiflow
