#pragma once

// Exact and Monte-Carlo evaluation of the ergodic secrecy rate
//   C_s(Q) = E log(1 + rho h_R^H Q h_R) - E log(1 + rho h_E^H Q h_E)
// for both channel-knowledge modes. All rates are in nats.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "misosec/hermitian.hpp"
#include "misosec/special_fn.hpp"

namespace misosec {

enum class RateMethod { ClosedForm, Quadrature, MonteCarlo };

struct RateBreakdown {
    double legit_term = 0.0;
    double eaves_term = 0.0;
    double secrecy_rate = 0.0; // always legit_term - eaves_term
    RateMethod method = RateMethod::ClosedForm;
};

namespace detail {

// nonzero eigenvalues of R^{1/2} Q R^{1/2}, descending; cutoff 1e-12 * d_max
inline std::vector<double> effective_spectrum(const HermitianMatrix& R,
                                              const InputCovariance& Q) {
    HermitianMatrix rh = matrix_sqrt(R);
    ComplexMatrix a = rh.matrix() * Q.matrix() * rh.matrix();
    HermitianMatrix A(0.5 * (a + a.adjoint().eval()));
    const RealVector& w = A.spectrum().eigenvalues;
    std::vector<double> d;
    const double dmax = std::max(w(0), 0.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > 1e-12 * dmax && w(i) > 0.0) d.push_back(w(i));
    }
    return d;
}

inline bool spectrum_clustered(const std::vector<double>& d) {
    if (d.size() < 2) return false;
    const double d1 = d.front();
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if ((d[i] - d[i + 1]) / d1 < 1e-6) return true;
    }
    return false;
}

// sum_j F1(rho d_j) / prod_{i != j} (1 - d_i/d_j)
inline double log_quadratic_partial_fractions(const std::vector<double>& d, double rho) {
    const std::size_t m = d.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double denom = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i != j) denom *= 1.0 - d[i] / d[j];
        }
        total += special::F1(rho * d[j]) / denom;
    }
    return total;
}

// int_0^inf e^{-t} (1/t - 1/(t prod(1 + t rho d_i))) dt, written through
// expm1/log1p so the t -> 0 limit is exact.
inline double log_quadratic_quadrature(const std::vector<double>& d, double rho) {
    auto f = [&](double t) {
        double s = 0.0;
        for (double di : d) s += std::log1p(t * rho * di);
        if (t <= 0.0) { // limit value rho * sum d_i
            double lim = 0.0;
            for (double di : d) lim += rho * di;
            return lim;
        }
        return std::exp(-t) * (-std::expm1(-s)) / t;
    };
    double error = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, 40.0, 12, 1e-12, &error);
    return v;
}

} // namespace detail

// E_z log(1 + rho z^H Q z) for z ~ CN(0, R). Partial fractions on the
// nonzero eigenvalues of R^{1/2} Q R^{1/2}; adaptive quadrature when the
// spectrum is clustered (relative gap below 1e-6).
inline double expected_log_quadratic(const HermitianMatrix& R, const InputCovariance& Q,
                                     double rho, RateMethod* method_used = nullptr) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw std::domain_error("expected_log_quadratic: rho must be positive");
    }
    const std::vector<double> d = detail::effective_spectrum(R, Q);
    if (method_used) *method_used = RateMethod::ClosedForm;
    if (d.empty()) return 0.0;
    if (detail::spectrum_clustered(d)) {
        if (method_used) *method_used = RateMethod::Quadrature;
        return detail::log_quadratic_quadrature(d, rho);
    }
    return detail::log_quadratic_partial_fractions(d, rho);
}

inline RateBreakdown ergodic_secrecy_rate(const Scenario& s, const InputCovariance& Q) {
    s.validate();
    if (Q.size() != s.n_t) {
        throw std::invalid_argument("ergodic_secrecy_rate: dimension mismatch");
    }
    RateBreakdown out;
    RateMethod m1 = RateMethod::ClosedForm, m2 = RateMethod::ClosedForm;
    if (s.mode == ChannelKnowledge::Statistical) {
        out.legit_term = expected_log_quadratic(s.sigma_R, Q, s.rho, &m1);
    } else {
        const double quad = (s.h_R.adjoint() * Q.matrix() * s.h_R).value().real();
        out.legit_term = std::log1p(s.rho * quad);
    }
    out.eaves_term = expected_log_quadratic(s.sigma_E, Q, s.rho, &m2);
    out.secrecy_rate = out.legit_term - out.eaves_term;
    out.method = (m1 == RateMethod::Quadrature || m2 == RateMethod::Quadrature)
                     ? RateMethod::Quadrature
                     : RateMethod::ClosedForm;
    return out;
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
};

// Sampling oracle for the closed forms: h = Sigma^{1/2} h_w with a shared
// white draw h_w per sample (the coupling lowers the variance of the
// difference without biasing it).
inline MonteCarloEstimate monte_carlo_rate(const Scenario& s, const InputCovariance& Q,
                                           long n_samples, std::uint64_t seed) {
    s.validate();
    if (n_samples < 1000) {
        throw std::invalid_argument("monte_carlo_rate: need at least 1000 samples");
    }
    const Eigen::Index n = s.n_t;
    const ComplexMatrix se_half = matrix_sqrt(s.sigma_E).matrix();
    ComplexMatrix sr_half;
    double legit_const = 0.0;
    const bool statistical = s.mode == ChannelKnowledge::Statistical;
    if (statistical) {
        sr_half = matrix_sqrt(s.sigma_R).matrix();
    } else {
        legit_const = std::log1p(s.rho * (s.h_R.adjoint() * Q.matrix() * s.h_R).value().real());
    }

    GaussianSampler rng(seed);
    double mean = 0.0, m2 = 0.0;
    ComplexVector hw(n), h(n);
    for (long k = 0; k < n_samples; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) hw(i) = rng.complex_normal();
        double x;
        h.noalias() = se_half * hw;
        const double eaves = std::log1p(s.rho * (h.adjoint() * Q.matrix() * h).value().real());
        if (statistical) {
            h.noalias() = sr_half * hw;
            x = std::log1p(s.rho * (h.adjoint() * Q.matrix() * h).value().real()) - eaves;
        } else {
            x = legit_const - eaves;
        }
        const double delta = x - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (x - mean);
    }
    MonteCarloEstimate est;
    est.estimate = mean;
    est.std_error = std::sqrt(m2 / static_cast<double>(n_samples - 1) /
                              static_cast<double>(n_samples));
    est.n_samples = n_samples;
    return est;
}

} // namespace misosec
