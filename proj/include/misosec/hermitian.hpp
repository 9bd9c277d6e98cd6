#pragma once

// Complex Hermitian linear algebra, channel-statistics construction and the
// seedable complex Gaussian sampler shared by all modules.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <utility>

#include "misosec/special_fn.hpp"

namespace misosec {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

// Eigenvalues in decreasing order with matching orthonormal eigenvector
// columns.
struct Spectrum {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;
};

namespace detail {

inline bool all_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

inline Spectrum decompose_descending(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigendecomposition failed to converge");
    }
    const auto n = m.rows();
    Spectrum s;
    s.eigenvalues = solver.eigenvalues().reverse();
    s.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        ComplexVector v = solver.eigenvectors().col(n - 1 - k);
        // phase convention: first significantly nonzero entry real positive
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = std::abs(v(i));
            if (a > 1e-8) {
                v *= std::conj(v(i)) / a;
                break;
            }
        }
        s.eigenvectors.col(k) = v;
    }
    return s;
}

} // namespace detail

// Square complex Hermitian matrix with a lazily computed, cached spectral
// decomposition. Immutable after construction; the cache is computed at most
// once per instance (copies recompute on demand).
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(ComplexMatrix m) {
        if (m.rows() != m.cols() || m.rows() < 1) {
            throw std::invalid_argument("HermitianMatrix: matrix must be square and non-empty");
        }
        if (!detail::all_finite(m)) {
            throw std::invalid_argument("HermitianMatrix: entries must be finite");
        }
        const double scale = std::max(1.0, m.norm());
        if ((m - m.adjoint()).norm() > 1e-12 * scale) {
            throw std::invalid_argument("HermitianMatrix: matrix is not conjugate-symmetric");
        }
        m_ = 0.5 * (m + m.adjoint().eval());
    }

    static HermitianMatrix identity(Eigen::Index n) {
        return HermitianMatrix(ComplexMatrix::Identity(n, n));
    }

    HermitianMatrix(const HermitianMatrix& o) : m_(o.m_) {}
    HermitianMatrix(HermitianMatrix&& o) noexcept : m_(std::move(o.m_)) {}
    HermitianMatrix& operator=(const HermitianMatrix& o) {
        if (this != &o) {
            m_ = o.m_;
            std::scoped_lock lock(mutex_);
            spectrum_.reset();
        }
        return *this;
    }
    HermitianMatrix& operator=(HermitianMatrix&& o) noexcept {
        m_ = std::move(o.m_);
        std::scoped_lock lock(mutex_);
        spectrum_.reset();
        return *this;
    }

    Eigen::Index size() const { return m_.rows(); }
    const ComplexMatrix& matrix() const { return m_; }

    double trace() const { return m_.trace().real(); }
    double frobenius_norm() const { return m_.norm(); }

    const Spectrum& spectrum() const {
        std::scoped_lock lock(mutex_);
        if (!spectrum_) {
            spectrum_ = std::make_shared<const Spectrum>(detail::decompose_descending(m_));
        }
        return *spectrum_;
    }

    double lambda_max() const { return spectrum().eigenvalues(0); }
    double lambda_min() const { return spectrum().eigenvalues(size() - 1); }

private:
    ComplexMatrix m_;
    mutable std::mutex mutex_;
    mutable std::shared_ptr<const Spectrum> spectrum_;
};

// m = V diag(lambda) V^H with lambda sorted decreasing.
inline Spectrum eigendecompose(const HermitianMatrix& m) {
    return m.spectrum();
}

// Principal PSD square root. Eigenvalues in [-1e-10, 0) are treated as
// rounding noise and clamped to zero; anything lower is a hard error.
inline HermitianMatrix matrix_sqrt(const HermitianMatrix& m) {
    const Spectrum& s = m.spectrum();
    const Eigen::Index n = m.size();
    RealVector w = s.eigenvalues;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) < -1e-10) {
            throw std::domain_error("matrix_sqrt: matrix is not positive semi-definite");
        }
        w(i) = std::sqrt(std::max(0.0, w(i)));
    }
    ComplexMatrix r = s.eigenvectors * w.asDiagonal() * s.eigenvectors.adjoint();
    return HermitianMatrix(0.5 * (r + r.adjoint().eval()));
}

// Jakes antenna-correlation model: entry (p,q) = scale * J0(phi |p-q| 2 pi d/lambda).
// Always Toeplitz real symmetric; positive semi-definiteness depends on the
// parameters, so callers should inspect lambda_min rather than assume it.
inline HermitianMatrix jakes_covariance(int n_t, double phi, double d_over_lambda, double scale) {
    if (n_t < 1) throw std::invalid_argument("jakes_covariance: n_t must be >= 1");
    if (!(phi >= 0.0) || !std::isfinite(phi)) {
        throw std::invalid_argument("jakes_covariance: phi must be non-negative");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("jakes_covariance: scale must be positive");
    }
    ComplexMatrix m(n_t, n_t);
    for (int p = 0; p < n_t; ++p) {
        for (int q = 0; q < n_t; ++q) {
            const double arg = phi * std::abs(p - q) * 2.0 * M_PI * d_over_lambda;
            m(p, q) = Complex(scale * special::bessel_j0(arg), 0.0);
        }
    }
    return HermitianMatrix(std::move(m));
}

// Seedable Gaussian source. Uniforms come straight from the mt19937_64 bit
// stream ((x >> 11) * 2^-53), normals via Box-Muller, so the sequence is
// fixed by the seed alone on every platform.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // in (0, 1]; never 0 so log() below is safe
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // entry-wise CN(0,1): real and imaginary parts independent N(0, 1/2)
    Complex complex_normal() {
        const double s = std::sqrt(0.5);
        const double re = s * normal();
        const double im = s * normal();
        return {re, im};
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline ComplexVector sample_standard_complex_gaussian(Eigen::Index n, GaussianSampler& rng) {
    if (n < 1) throw std::invalid_argument("sample_standard_complex_gaussian: n must be >= 1");
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
    return v;
}

// PSD Hermitian matrix with unit trace: the optimization variable Q over the
// feasible set {Q >= 0, Tr Q = 1}.
class InputCovariance {
public:
    explicit InputCovariance(HermitianMatrix m) : m_(std::move(m)) {
        if (m_.spectrum().eigenvalues(m_.size() - 1) < -1e-10) {
            throw std::domain_error("InputCovariance: matrix is not positive semi-definite");
        }
        if (std::abs(m_.trace() - 1.0) > 1e-10) {
            throw std::domain_error("InputCovariance: trace must equal 1");
        }
    }

    // Clamp rounding-noise negative eigenvalues and renormalize the trace.
    static InputCovariance project(const HermitianMatrix& m) {
        const Spectrum& s = m.spectrum();
        RealVector w = s.eigenvalues.cwiseMax(0.0);
        const double tr = w.sum();
        if (!(tr > 0.0)) {
            throw std::domain_error("InputCovariance::project: matrix has no positive part");
        }
        w /= tr;
        ComplexMatrix q = s.eigenvectors * w.asDiagonal() * s.eigenvectors.adjoint();
        return InputCovariance(HermitianMatrix(0.5 * (q + q.adjoint().eval())));
    }

    static InputCovariance uniform(Eigen::Index n) {
        return InputCovariance(HermitianMatrix(
            ComplexMatrix::Identity(n, n) / static_cast<double>(n)));
    }

    static InputCovariance beamformer(const ComplexVector& u) {
        ComplexVector v = u / u.norm();
        return InputCovariance(HermitianMatrix(v * v.adjoint()));
    }

    // random full-support member of the feasible set: G G^H / Tr(G G^H)
    static InputCovariance random(Eigen::Index n, GaussianSampler& rng) {
        ComplexMatrix g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
        ComplexMatrix q = g * g.adjoint();
        q /= q.trace().real();
        return InputCovariance(HermitianMatrix(0.5 * (q + q.adjoint().eval())));
    }

    Eigen::Index size() const { return m_.size(); }
    const HermitianMatrix& hermitian() const { return m_; }
    const ComplexMatrix& matrix() const { return m_.matrix(); }
    const Spectrum& spectrum() const { return m_.spectrum(); }

private:
    HermitianMatrix m_;
};

enum class ChannelKnowledge { Statistical, FullCsi };

// Full problem instance: dimensions, linear SNR rho, knowledge mode and the
// channel statistics (plus the realized legitimate channel in full-CSI mode).
struct Scenario {
    int n_t = 0;
    double rho = 0.0;
    ChannelKnowledge mode = ChannelKnowledge::Statistical;
    HermitianMatrix sigma_R;
    HermitianMatrix sigma_E;
    ComplexVector h_R; // size n_t iff mode == FullCsi

    static Scenario statistical(double rho, HermitianMatrix sr, HermitianMatrix se) {
        Scenario s;
        s.n_t = static_cast<int>(sr.size());
        s.rho = rho;
        s.mode = ChannelKnowledge::Statistical;
        s.sigma_R = std::move(sr);
        s.sigma_E = std::move(se);
        s.validate();
        return s;
    }

    static Scenario full_csi(double rho, ComplexVector h, HermitianMatrix se) {
        Scenario s;
        s.n_t = static_cast<int>(h.size());
        s.rho = rho;
        s.mode = ChannelKnowledge::FullCsi;
        s.sigma_R = HermitianMatrix::identity(h.size());
        s.sigma_E = std::move(se);
        s.h_R = std::move(h);
        s.validate();
        return s;
    }

    void validate() const {
        if (n_t < 1) throw std::invalid_argument("Scenario: n_t must be >= 1");
        if (!(rho > 0.0) || !std::isfinite(rho)) {
            throw std::invalid_argument("Scenario: rho must be positive");
        }
        if (sigma_E.size() != n_t || sigma_R.size() != n_t) {
            throw std::invalid_argument("Scenario: covariance dimensions inconsistent with n_t");
        }
        if (sigma_E.lambda_min() <= 1e-12) {
            throw std::invalid_argument("Scenario: sigma_E must be strictly positive definite");
        }
        if (mode == ChannelKnowledge::Statistical) {
            if (sigma_R.lambda_min() <= 1e-12) {
                throw std::invalid_argument("Scenario: sigma_R must be strictly positive definite");
            }
        } else {
            if (h_R.size() != n_t) {
                throw std::invalid_argument("Scenario: h_R must be present in full-CSI mode");
            }
            if (!h_R.allFinite()) {
                throw std::invalid_argument("Scenario: h_R entries must be finite");
            }
        }
    }
};

} // namespace misosec
