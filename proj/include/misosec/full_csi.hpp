#pragma once

// Rank-one reduction for the full-CSI case. The scalar scan
//   C_s(z) = log(1 + rho ||h_R||^2 z) - F1(rho phi(z)),  z in [0, 1]
// needs phi(z) = min u^H Sigma_E u over unit vectors with fixed alignment
// |u^H h_R|^2 = z ||h_R||^2. That reduces to minimizing a quadratic with a
// linear term over the unit sphere of the orthogonal complement, solved
// exactly through the secular equation of the shifted system.
//
// phi(z) can equivalently be posed as a semidefinite program over X >= 0
// with Tr(X) = 1 and Tr(h_R h_R^H X) = z ||h_R||^2 (the rank relaxation is
// tight for this two-constraint problem). The sphere solver is exact and
// needs no conic machinery, so the SDP form stays a documentation note.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "misosec/hermitian.hpp"
#include "misosec/rate_eval.hpp"
#include "misosec/special_fn.hpp"

namespace misosec {

struct SphereMinimum {
    ComplexVector w;          // unit-norm minimizer
    double value = 0.0;       // w^H C w + 2 Re(c^H w)
    double multiplier = 0.0;  // mu with (C - mu I) w = -c, mu <= lambda_min(C)
};

// Exact minimizer of w^H C w + 2 Re(c^H w) on ||w|| = 1. Spectral form plus
// bisection on the secular equation ||(C - mu I)^{-1} c|| = 1 over
// mu < lambda_min(C); the hard case (c orthogonal to the bottom eigenspace)
// is padded inside that eigenspace to reach unit norm.
inline SphereMinimum min_quadratic_on_sphere(const HermitianMatrix& C, const ComplexVector& c) {
    const Eigen::Index n = C.size();
    if (c.size() != n) throw std::invalid_argument("min_quadratic_on_sphere: dimension mismatch");
    const Spectrum& sp = C.spectrum(); // descending order
    const double lam_min = sp.eigenvalues(n - 1);
    // work in ascending order for clarity of the secular equation
    RealVector lam(n);
    ComplexMatrix v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lam(i) = sp.eigenvalues(n - 1 - i);
        v.col(i) = sp.eigenvectors.col(n - 1 - i);
    }
    ComplexVector b = v.adjoint() * c;
    const double bnorm = b.norm();
    const double scale = std::max({1.0, std::abs(lam(0)), std::abs(lam(n - 1)), bnorm});

    auto assemble = [&](const ComplexVector& coeffs, double mu) {
        SphereMinimum out;
        ComplexVector w = v * coeffs;
        w /= w.norm();
        out.w = w;
        out.value = (w.adjoint() * C.matrix() * w).value().real() + 2.0 * (c.adjoint() * w).value().real();
        out.multiplier = mu;
        return out;
    };

    if (bnorm < 1e-14 * scale) {
        ComplexVector coeffs = ComplexVector::Zero(n);
        coeffs(0) = 1.0;
        return assemble(coeffs, lam_min);
    }

    const double bottom_tol = 1e-12 * scale;
    auto secular = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double gap = lam(i) - mu;
            s += std::norm(b(i)) / (gap * gap);
        }
        return s;
    };

    // hard case: even just below lambda_min the resolvent norm stays < 1
    const double mu_probe = lam_min - 1e-13 * scale;
    if (secular(mu_probe) < 1.0) {
        ComplexVector coeffs = ComplexVector::Zero(n);
        double partial = 0.0;
        Eigen::Index pad_index = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lam(i) - lam_min <= bottom_tol) {
                pad_index = i; // any bottom-eigenspace direction works
                continue;
            }
            coeffs(i) = -b(i) / (lam(i) - lam_min);
            partial += std::norm(coeffs(i));
        }
        const double pad = std::sqrt(std::max(0.0, 1.0 - partial));
        coeffs(pad_index) += pad;
        return assemble(coeffs, lam_min);
    }

    // bracket: secular is increasing in mu, -> 0 at -inf, > 1 at mu_probe
    double hi = mu_probe;
    double lo = lam_min - bnorm - 1e-6 * scale;
    while (secular(lo) >= 1.0) lo = lam_min - 2.0 * (lam_min - lo);
    for (int it = 0; it < 500 && hi - lo > 1e-12 * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        (secular(mid) < 1.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    ComplexVector coeffs(n);
    for (Eigen::Index i = 0; i < n; ++i) coeffs(i) = -b(i) / (lam(i) - mu);
    return assemble(coeffs, mu);
}

struct PhiSolution {
    double z = 0.0;
    double value = 0.0; // min u^H Sigma_E u at this alignment
    ComplexVector u;    // unit-norm minimizer, coefficient along h_R real >= 0
};

// phi(z) = min u^H Sigma_E u  s.t.  |u^H h_R|^2 = z ||h_R||^2, ||u|| = 1.
inline PhiSolution phi(double z, const ComplexVector& h_R, const HermitianMatrix& sigma_E) {
    if (!(z >= 0.0 && z <= 1.0)) throw std::domain_error("phi: z must lie in [0, 1]");
    const Eigen::Index n = h_R.size();
    if (sigma_E.size() != n) throw std::invalid_argument("phi: dimension mismatch");
    const double hnorm = h_R.norm();
    if (!(hnorm > 0.0)) throw std::invalid_argument("phi: h_R must be nonzero");

    const ComplexVector hhat = h_R / hnorm;
    PhiSolution out;
    out.z = z;

    if (n == 1) {
        if (z < 1.0 - 1e-12) {
            throw std::domain_error("phi: alignment below 1 is infeasible for n_T = 1");
        }
        out.u = hhat;
        out.value = (hhat.adjoint() * sigma_E.matrix() * hhat).value().real();
        return out;
    }

    // unitary basis whose first column is exactly hhat
    Eigen::HouseholderQR<ComplexMatrix> qr(hhat);
    ComplexMatrix basis = qr.householderQ() * ComplexMatrix::Identity(n, n);
    const Complex phase = (basis.col(0).adjoint() * hhat).value();
    basis.col(0) *= phase; // |phase| = 1, so basis stays unitary
    const ComplexMatrix S = basis.adjoint() * sigma_E.matrix() * basis;

    if (z >= 1.0 - 1e-15) {
        out.u = hhat;
        out.value = S(0, 0).real();
        return out;
    }

    const ComplexMatrix Ssub = S.bottomRightCorner(n - 1, n - 1);
    const ComplexVector s01 = S.block(1, 0, n - 1, 1);
    HermitianMatrix Csub((1.0 - z) * 0.5 * (Ssub + Ssub.adjoint().eval()));
    const ComplexVector clin = std::sqrt(z * (1.0 - z)) * s01;
    const SphereMinimum m = min_quadratic_on_sphere(Csub, clin);

    out.value = z * S(0, 0).real() + m.value;
    ComplexVector u = std::sqrt(z) * basis.col(0) +
                      std::sqrt(1.0 - z) * (basis.rightCols(n - 1) * m.w);
    out.u = u / u.norm();
    return out;
}

struct ScanResult {
    std::vector<double> grid_z;
    std::vector<double> grid_phi;
    std::vector<double> grid_rate;
    double best_z = 0.0;
    double best_rate = 0.0;
    ComplexVector best_u;
};

inline std::vector<double> default_scan_grid() {
    std::vector<double> g;
    g.push_back(0.0);
    for (int k = 1; k <= 99; ++k) g.push_back(0.01 * k);
    g.push_back(1.0);
    return g;
}

// Evaluates C_s(z) on the grid, then sharpens the argmax with one local
// golden-section pass down to 1e-4 in z.
inline ScanResult scan_cs_z(const Scenario& s, const std::vector<double>& grid) {
    s.validate();
    if (s.mode != ChannelKnowledge::FullCsi) {
        throw std::invalid_argument("scan_cs_z: scenario must be full-CSI");
    }
    if (grid.empty()) throw std::domain_error("scan_cs_z: grid must be non-empty");

    const double hsq = s.h_R.squaredNorm();
    auto rate_at = [&](double z) {
        const PhiSolution p = phi(z, s.h_R, s.sigma_E);
        return std::pair<double, PhiSolution>(
            std::log1p(s.rho * hsq * z) - special::F1(s.rho * p.value), p);
    };

    ScanResult out;
    out.grid_z = grid;
    out.grid_phi.reserve(grid.size());
    out.grid_rate.reserve(grid.size());
    std::size_t best_k = 0;
    PhiSolution best_phi;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto [rate, p] = rate_at(grid[k]);
        out.grid_phi.push_back(p.value);
        out.grid_rate.push_back(rate);
        if (k == 0 || rate > out.best_rate) {
            out.best_rate = rate;
            best_k = k;
            best_phi = p;
        }
    }
    out.best_z = grid[best_k];
    out.best_u = best_phi.u;

    // golden-section refinement on the bracket around the grid argmax
    double a = best_k > 0 ? grid[best_k - 1] : grid[best_k];
    double b = best_k + 1 < grid.size() ? grid[best_k + 1] : grid[best_k];
    if (b - a > 1e-4) {
        const double inv_phi_ratio = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - inv_phi_ratio * (b - a);
        double x2 = a + inv_phi_ratio * (b - a);
        double f1 = rate_at(x1).first;
        double f2 = rate_at(x2).first;
        while (b - a > 1e-4) {
            if (f1 < f2) {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + inv_phi_ratio * (b - a);
                f2 = rate_at(x2).first;
            } else {
                b = x2; x2 = x1; f2 = f1;
                x1 = b - inv_phi_ratio * (b - a);
                f1 = rate_at(x1).first;
            }
        }
        const double zr = 0.5 * (a + b);
        auto [rr, pr] = rate_at(zr);
        if (rr > out.best_rate) {
            out.best_z = zr;
            out.best_rate = rr;
            out.best_u = pr.u;
        }
    }
    return out;
}

struct TrivialEavesOptimum {
    InputCovariance q;
    double rate = 0.0; // may be negative; then no Q achieves a positive rate
};

// Closed form for Sigma_E = alpha I: beamform along h_R,
// rate = log(1 + rho ||h_R||^2) - F1(rho alpha).
inline TrivialEavesOptimum trivial_sigma_e_optimum(const ComplexVector& h_R, double alpha,
                                                   double rho) {
    if (!(h_R.norm() > 0.0)) throw std::invalid_argument("trivial_sigma_e_optimum: h_R must be nonzero");
    if (!(alpha > 0.0) || !(rho > 0.0)) {
        throw std::invalid_argument("trivial_sigma_e_optimum: alpha and rho must be positive");
    }
    TrivialEavesOptimum out{InputCovariance::beamformer(h_R)};
    out.rate = std::log1p(rho * h_R.squaredNorm()) - special::F1(rho * alpha);
    return out;
}

} // namespace misosec
