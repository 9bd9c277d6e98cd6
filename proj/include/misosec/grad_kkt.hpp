#pragma once

// Gradient matrix Theta = (dC_s/dQ)^T in closed form, the KKT stationarity
// residuals  Q Theta = Theta Q = Tr(Q Theta) Q,  lambda_max(Theta) = Tr(Q Theta),
// and the fixed-point iteration
//   Q <- K^{1/2} Q K^{1/2} / Tr(K^{1/2} Q K^{1/2}),  K = Theta + gamma I
// that searches for a KKT point.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "misosec/hermitian.hpp"
#include "misosec/rate_eval.hpp"
#include "misosec/special_fn.hpp"

namespace misosec {

struct ThetaMatrix {
    HermitianMatrix matrix;
    double trace_q_theta = 0.0; // Tr(Q Theta) at the Q used
};

namespace detail {

inline double resolvent_y_partial_fraction(const std::vector<double>& d, double rho,
                                           std::size_t k) {
    const std::size_t m = d.size();
    if (k < m) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == k) continue;
            double denom = 1.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (i != j) denom *= 1.0 - d[i] / d[j];
            }
            sum += special::F1_difference_quotient(rho * d[j], rho * d[k]) / denom;
        }
        double denom_k = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i != k) denom_k *= 1.0 - d[i] / d[k];
        }
        return sum + special::F2(rho * d[k]) / denom_k;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double denom = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i != j) denom *= 1.0 - d[i] / d[j];
        }
        sum += special::F1(rho * d[j]) / (rho * d[j] * denom);
    }
    return sum;
}

// int_0^inf e^{-t} / (prod_i (1 + t rho d_i) * [k<M](1 + t rho d_k)) dt
inline double resolvent_y_quadrature(const std::vector<double>& d, double rho,
                                     std::size_t k) {
    auto f = [&](double t) {
        double logdenom = t;
        for (double di : d) logdenom += std::log1p(t * rho * di);
        if (k < d.size()) logdenom += std::log1p(t * rho * d[k]);
        return std::exp(-logdenom);
    };
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, 40.0, 12, 1e-12, &error);
}

} // namespace detail

// E_z { rho z z^H / (1 + rho z^H Q z) } for z ~ CN(0, R), via
// rho R^{1/2} U1 Y U1^H R^{1/2} with diagonal Y.
inline HermitianMatrix expected_resolvent(const HermitianMatrix& R, const InputCovariance& Q,
                                          double rho, RateMethod* method_used = nullptr) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw std::domain_error("expected_resolvent: rho must be positive");
    }
    const Eigen::Index n = R.size();
    HermitianMatrix rh = matrix_sqrt(R);
    ComplexMatrix a = rh.matrix() * Q.matrix() * rh.matrix();
    HermitianMatrix A(0.5 * (a + a.adjoint().eval()));
    const Spectrum& sp = A.spectrum();

    std::vector<double> d;
    const double dmax = std::max(sp.eigenvalues(0), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sp.eigenvalues(i) > 1e-12 * dmax && sp.eigenvalues(i) > 0.0) {
            d.push_back(sp.eigenvalues(i));
        }
    }

    const bool clustered = detail::spectrum_clustered(d);
    if (method_used) {
        *method_used = clustered ? RateMethod::Quadrature : RateMethod::ClosedForm;
    }
    RealVector y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        if (d.empty()) {
            y(k) = 1.0; // E{rho z z^H} at Q orthogonal to range(R): int e^-t dt
        } else if (clustered) {
            y(k) = detail::resolvent_y_quadrature(d, rho, ks);
        } else {
            y(k) = detail::resolvent_y_partial_fraction(d, rho, ks);
        }
    }
    ComplexMatrix ru = rh.matrix() * sp.eigenvectors;
    ComplexMatrix out = rho * ru * y.asDiagonal() * ru.adjoint();
    return HermitianMatrix(0.5 * (out + out.adjoint().eval()));
}

inline ThetaMatrix compute_theta(const Scenario& s, const InputCovariance& Q) {
    s.validate();
    if (Q.size() != s.n_t) throw std::invalid_argument("compute_theta: dimension mismatch");
    ComplexMatrix first;
    if (s.mode == ChannelKnowledge::Statistical) {
        first = expected_resolvent(s.sigma_R, Q, s.rho).matrix();
    } else {
        const double quad = (s.h_R.adjoint() * Q.matrix() * s.h_R).value().real();
        first = (s.rho / (1.0 + s.rho * quad)) * (s.h_R * s.h_R.adjoint());
    }
    ComplexMatrix theta = first - expected_resolvent(s.sigma_E, Q, s.rho).matrix();
    ThetaMatrix out{HermitianMatrix(0.5 * (theta + theta.adjoint().eval())), 0.0};
    out.trace_q_theta = (Q.matrix() * out.matrix.matrix()).trace().real();
    return out;
}

struct KktResiduals {
    double commutator = 0.0;     // ||Q Theta - Theta Q||_F
    double eigen_eq = 0.0;       // ||Q Theta - Tr(Q Theta) Q||_F
    double lambda_max_gap = 0.0; // lambda_max(Theta) - Tr(Q Theta)
};

inline KktResiduals kkt_residuals(const InputCovariance& Q, const ThetaMatrix& theta) {
    if (Q.size() != theta.matrix.size()) {
        throw std::invalid_argument("kkt_residuals: dimension mismatch");
    }
    const ComplexMatrix& q = Q.matrix();
    const ComplexMatrix& th = theta.matrix.matrix();
    const ComplexMatrix qt = q * th;
    const double tr = qt.trace().real();
    KktResiduals r;
    r.commutator = (qt - th * q).norm();
    r.eigen_eq = (qt - tr * q).norm();
    r.lambda_max_gap = theta.matrix.lambda_max() - tr;
    return r;
}

struct SolverOptions {
    double beta = 1.0;      // shift margin in gamma = (1+beta) max(0, -lambda_min)
    double tol = 1e-10;     // relative change of C_s between iterations; at looser
                            // settings the KKT residuals still sit well above
                            // tol_kkt when the rate plateaus (the rate gap is
                            // quadratic in the remaining Q displacement)
    int max_iters = 300;
    double tol_kkt = 1e-5;  // residual acceptance, scaled by ||Theta||_F
};

struct KktReport {
    InputCovariance q_opt;
    double rate = 0.0;
    RealVector theta_spectrum;
    double trace_q_theta = 0.0;
    double commutator_residual = 0.0;
    double eigen_eq_residual = 0.0;
    double lambda_max_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false; // Theta ~ 0 (identical channel statistics)
    std::vector<double> rate_trace;
};

inline KktReport fixed_point_solve(const Scenario& s, const InputCovariance& q0,
                                   const SolverOptions& opt = {}) {
    s.validate();
    if (q0.size() != s.n_t) throw std::domain_error("fixed_point_solve: q0 dimension mismatch");
    if (!(opt.beta > 0.0)) throw std::domain_error("fixed_point_solve: beta must be positive");
    if (!(opt.tol > 0.0)) throw std::domain_error("fixed_point_solve: tol must be positive");

    const Eigen::Index n = s.n_t;
    InputCovariance q = q0;
    KktReport report{q};
    double prev_rate = ergodic_secrecy_rate(s, q).secrecy_rate;
    report.rate_trace.push_back(prev_rate);
    bool rate_converged = false;

    for (int it = 0; it < opt.max_iters; ++it) {
        ThetaMatrix theta = compute_theta(s, q);
        if (theta.matrix.frobenius_norm() < 1e-12) {
            // stationary by degeneracy; KKT equalities hold trivially
            report.q_opt = q;
            report.rate = prev_rate;
            report.theta_spectrum = theta.matrix.spectrum().eigenvalues;
            report.trace_q_theta = theta.trace_q_theta;
            report.iterations = it;
            report.converged = true;
            report.degenerate = true;
            return report;
        }
        const double gamma = (1.0 + opt.beta) * std::max(0.0, -theta.matrix.lambda_min());
        HermitianMatrix k(theta.matrix.matrix() + gamma * ComplexMatrix::Identity(n, n));
        const ComplexMatrix kh = matrix_sqrt(k).matrix();
        ComplexMatrix next = kh * q.matrix() * kh;
        const double tr = next.trace().real();
        if (!(tr > 1e-300)) {
            report.iterations = it;
            report.converged = false;
            break;
        }
        q = InputCovariance::project(HermitianMatrix(0.5 * (next + next.adjoint().eval())));
        const double rate = ergodic_secrecy_rate(s, q).secrecy_rate;
        report.rate_trace.push_back(rate);
        report.iterations = it + 1;
        if (std::abs(rate - prev_rate) <= opt.tol * std::max(std::abs(rate), 1e-12)) {
            prev_rate = rate;
            rate_converged = true;
            break;
        }
        prev_rate = rate;
    }
    if (report.iterations == opt.max_iters) rate_converged = true;

    ThetaMatrix theta = compute_theta(s, q);
    const KktResiduals res = kkt_residuals(q, theta);
    report.q_opt = q;
    report.rate = prev_rate;
    report.theta_spectrum = theta.matrix.spectrum().eigenvalues;
    report.trace_q_theta = theta.trace_q_theta;
    report.commutator_residual = res.commutator;
    report.eigen_eq_residual = res.eigen_eq;
    report.lambda_max_gap = res.lambda_max_gap;
    const double scale = theta.matrix.frobenius_norm();
    report.converged = rate_converged &&
                       res.commutator <= opt.tol_kkt * scale &&
                       res.eigen_eq <= opt.tol_kkt * scale &&
                       std::abs(res.lambda_max_gap) <= opt.tol_kkt * scale;
    return report;
}

struct MultiStartReport {
    KktReport best;
    std::vector<double> start_rates; // final rate of every run, in start order
};

// Runs the fixed-point iteration from I/n plus (n_starts - 1) random feasible
// starts and keeps the best KKT-valid run (best rate overall if none pass).
inline MultiStartReport multi_start_solve(const Scenario& s, int n_starts, std::uint64_t seed,
                                          const SolverOptions& opt = {}) {
    if (n_starts < 1) throw std::invalid_argument("multi_start_solve: n_starts must be >= 1");
    GaussianSampler rng(seed);
    MultiStartReport out{fixed_point_solve(s, InputCovariance::uniform(s.n_t), opt)};
    out.start_rates.push_back(out.best.rate);
    bool have_valid = out.best.converged;
    for (int k = 1; k < n_starts; ++k) {
        KktReport r = fixed_point_solve(s, InputCovariance::random(s.n_t, rng), opt);
        out.start_rates.push_back(r.rate);
        const bool better = r.converged ? (!have_valid || r.rate > out.best.rate)
                                        : (!have_valid && r.rate > out.best.rate);
        if (better) out.best = r;
        have_valid = have_valid || r.converged;
    }
    return out;
}

} // namespace misosec
