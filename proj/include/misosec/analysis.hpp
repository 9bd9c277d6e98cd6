#pragma once

// Feasibility of a positive secrecy rate, the SNR derivative
// dC_s/drho = Tr(Theta Q)/rho, high-SNR beamformers and bounds, and the
// diagonal power-allocation solver for a trivial eavesdropper covariance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "misosec/grad_kkt.hpp"
#include "misosec/hermitian.hpp"
#include "misosec/rate_eval.hpp"

namespace misosec {

struct FeasibilityResult {
    bool feasible = false;
    double lambda_max = 0.0;
    std::optional<ComplexVector> witness; // beamformer achieving C_s > 0 when feasible
};

// Statistical mode: a positive secrecy rate is achievable iff
// Sigma_R - Sigma_E has a positive eigenvalue; the witness is its top
// eigenvector (necessary and sufficient).
inline FeasibilityResult positivity_statistical(const HermitianMatrix& sigma_R,
                                                const HermitianMatrix& sigma_E) {
    if (sigma_R.size() != sigma_E.size()) {
        throw std::invalid_argument("positivity_statistical: dimension mismatch");
    }
    HermitianMatrix diff(sigma_R.matrix() - sigma_E.matrix());
    const Spectrum& sp = diff.spectrum();
    FeasibilityResult out;
    out.lambda_max = sp.eigenvalues(0);
    out.feasible = out.lambda_max > 0.0;
    if (out.feasible) out.witness = sp.eigenvectors.col(0);
    return out;
}

// Full-CSI mode: lambda_max(h_R h_R^H - Sigma_E) > 0 is sufficient (not
// necessary) for a positive secrecy rate.
inline FeasibilityResult positivity_full_csi(const ComplexVector& h_R,
                                             const HermitianMatrix& sigma_E) {
    if (h_R.size() != sigma_E.size()) {
        throw std::invalid_argument("positivity_full_csi: dimension mismatch");
    }
    HermitianMatrix diff(h_R * h_R.adjoint() - sigma_E.matrix());
    const Spectrum& sp = diff.spectrum();
    FeasibilityResult out;
    out.lambda_max = sp.eigenvalues(0);
    out.feasible = out.lambda_max > 0.0;
    if (out.feasible) out.witness = sp.eigenvectors.col(0);
    return out;
}

// dC_s(Q)/drho = Tr(Theta Q) / rho
inline double rate_snr_derivative(const Scenario& s, const InputCovariance& Q) {
    return compute_theta(s, Q).trace_q_theta / s.rho;
}

struct HighSnrResult {
    ComplexVector beamformer; // unit norm
    double asymptote = 0.0;   // limiting rate expression, additive constants included
    ChannelKnowledge mode = ChannelKnowledge::FullCsi;
};

// rho -> inf, full CSI: u proportional to Sigma_E^{-1} h_R,
// C_s -> log(h_R^H Sigma_E^{-1} h_R) + gamma.
inline HighSnrResult high_snr_full_csi(const ComplexVector& h_R, const HermitianMatrix& sigma_E) {
    if (h_R.size() != sigma_E.size()) {
        throw std::invalid_argument("high_snr_full_csi: dimension mismatch");
    }
    if (!(h_R.norm() > 0.0)) throw std::invalid_argument("high_snr_full_csi: h_R must be nonzero");
    if (sigma_E.lambda_min() <= 1e-12) {
        throw std::invalid_argument("high_snr_full_csi: sigma_E must be positive definite");
    }
    const ComplexVector w = sigma_E.matrix().ldlt().solve(h_R);
    HighSnrResult out;
    out.mode = ChannelKnowledge::FullCsi;
    out.beamformer = w / w.norm();
    out.asymptote = std::log((h_R.adjoint() * w).value().real()) + special::euler_gamma;
    return out;
}

// rho -> inf, statistical: bound log lambda_max(Sigma_R^{1/2} Sigma_E^{-1} Sigma_R^{1/2}),
// achieved along u0 = Sigma_E^{-1/2} x0 / ||.|| with x0 the top eigenvector of
// Sigma_E^{-1/2} Sigma_R Sigma_E^{-1/2}.
inline HighSnrResult high_snr_statistical(const HermitianMatrix& sigma_R,
                                          const HermitianMatrix& sigma_E) {
    if (sigma_R.size() != sigma_E.size()) {
        throw std::invalid_argument("high_snr_statistical: dimension mismatch");
    }
    if (sigma_E.lambda_min() <= 1e-12 || sigma_R.lambda_min() <= 1e-12) {
        throw std::invalid_argument("high_snr_statistical: covariances must be positive definite");
    }
    const Spectrum& se = sigma_E.spectrum();
    ComplexMatrix e_inv_half = se.eigenvectors *
                               se.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                               se.eigenvectors.adjoint();
    ComplexMatrix mid = e_inv_half * sigma_R.matrix() * e_inv_half;
    HermitianMatrix m(0.5 * (mid + mid.adjoint().eval()));
    const Spectrum& sp = m.spectrum();
    const ComplexVector u0 = e_inv_half * sp.eigenvectors.col(0);
    HighSnrResult out;
    out.mode = ChannelKnowledge::Statistical;
    out.beamformer = u0 / u0.norm();
    out.asymptote = std::log(sp.eigenvalues(0));
    return out;
}

struct DiagonalSolution {
    RealVector zeta; // simplex power allocation over the Sigma_R eigenbasis
    double rate = 0.0;
    InputCovariance q; // lifted V_R diag(zeta) V_R^H
};

namespace detail {

// Euclidean projection onto the probability simplex (sorting method).
inline RealVector project_simplex(const RealVector& y) {
    const Eigen::Index n = y.size();
    std::vector<double> u(y.data(), y.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0, theta = 0.0;
    int rho_idx = 0;
    double running = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        running += u[static_cast<std::size_t>(i)];
        const double t = (running - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) {
            rho_idx = static_cast<int>(i);
            cssv = running;
        }
    }
    theta = (cssv - 1.0) / static_cast<double>(rho_idx + 1);
    RealVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(0.0, y(i) - theta);
    return out;
}

} // namespace detail

// Sigma_E = alpha I with statistical legitimate knowledge: the optimum shares
// the Sigma_R eigenbasis, so only the simplex allocation over that basis
// remains. Projected gradient ascent with Armijo backtracking; the gradient
// is the diagonal of Theta in the eigenbasis.
inline DiagonalSolution solve_diagonal_trivial_eaves(const HermitianMatrix& sigma_R,
                                                     double alpha, double rho) {
    if (!(alpha > 0.0) || !(rho > 0.0)) {
        throw std::invalid_argument("solve_diagonal_trivial_eaves: alpha and rho must be positive");
    }
    const Eigen::Index n = sigma_R.size();
    const Spectrum& sr = sigma_R.spectrum();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (sr.eigenvalues(i) - sr.eigenvalues(i + 1) <=
            1e-8 * std::max(1.0, std::abs(sr.eigenvalues(0)))) {
            throw std::domain_error(
                "solve_diagonal_trivial_eaves: sigma_R must have distinct eigenvalues");
        }
    }

    const HermitianMatrix lam_r(ComplexMatrix(sr.eigenvalues.cast<Complex>().asDiagonal()));
    const HermitianMatrix eye_alpha(alpha * ComplexMatrix::Identity(n, n));
    const Scenario diag_scenario = Scenario::statistical(rho, lam_r, eye_alpha);

    auto rate_of = [&](const RealVector& zeta) {
        ComplexMatrix q = zeta.cast<Complex>().asDiagonal();
        return ergodic_secrecy_rate(diag_scenario,
                                    InputCovariance(HermitianMatrix(q))).secrecy_rate;
    };
    auto grad_of = [&](const RealVector& zeta) {
        ComplexMatrix q = zeta.cast<Complex>().asDiagonal();
        const ThetaMatrix th = compute_theta(diag_scenario, InputCovariance(HermitianMatrix(q)));
        return RealVector(th.matrix.matrix().diagonal().real());
    };

    RealVector zeta = RealVector::Constant(n, 1.0 / static_cast<double>(n));
    double rate = rate_of(zeta);
    for (int it = 0; it < 2000; ++it) {
        const RealVector g = grad_of(zeta);
        double step = 0.1;
        RealVector cand;
        double cand_rate = rate;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            cand = detail::project_simplex(zeta + step * g);
            cand_rate = rate_of(cand);
            const double ascent = g.dot(cand - zeta);
            if (cand_rate >= rate + 1e-4 * ascent && cand_rate >= rate) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const double improvement = cand_rate - rate;
        zeta = cand;
        rate = cand_rate;
        if (improvement < 1e-9) break;
    }

    DiagonalSolution out{zeta, rate,
                         InputCovariance::project(HermitianMatrix(
                             sr.eigenvectors * zeta.cast<Complex>().asDiagonal() *
                             sr.eigenvectors.adjoint()))};
    return out;
}

} // namespace misosec
