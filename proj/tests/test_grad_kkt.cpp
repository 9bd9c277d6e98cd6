#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "misosec/grad_kkt.hpp"
#include "misosec/rate_eval.hpp"

using namespace misosec;

namespace {

HermitianMatrix random_pd(Eigen::Index n, GaussianSampler& rng, double floor = 0.05) {
    ComplexMatrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
    ComplexMatrix m = g.adjoint() * g / static_cast<double>(n) +
                      floor * ComplexMatrix::Identity(n, n);
    return HermitianMatrix(0.5 * (m + m.adjoint().eval()));
}

// random traceless Hermitian direction with unit Frobenius norm
HermitianMatrix random_traceless_direction(Eigen::Index n, GaussianSampler& rng) {
    ComplexMatrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
    ComplexMatrix d = 0.5 * (g + g.adjoint().eval());
    d -= (d.trace() / static_cast<double>(n)) * ComplexMatrix::Identity(n, n);
    d /= d.norm();
    return HermitianMatrix(d);
}

Scenario jakes_statistical(double rho = 10.0) {
    return Scenario::statistical(rho, jakes_covariance(4, 0.5, 0.5, 1.0),
                                 jakes_covariance(4, 0.3, 0.5, 0.3));
}

Scenario printed_full_csi(double rho = 10.0) {
    ComplexVector h(4);
    h << Complex(0.4282, 0.0403), Complex(0.8956, 0.6771), Complex(0.7310, 0.5689),
        Complex(0.5779, -0.2556);
    return Scenario::full_csi(rho, h, jakes_covariance(4, 0.3, 0.5, 0.3));
}

} // namespace

TEST_CASE("resolvent of a beamformer against the two-eigenvalue form", "[kkt]") {
    // Q = u u^H, R = I, n = 2: Y = diag(F2(rho), F1(rho)/rho) in the (u, u_perp) basis
    GaussianSampler rng(21);
    ComplexVector u = sample_standard_complex_gaussian(2, rng);
    u /= u.norm();
    const double rho = 3.7;
    const HermitianMatrix r = HermitianMatrix::identity(2);
    const HermitianMatrix res = expected_resolvent(r, InputCovariance::beamformer(u), rho);

    ComplexVector uperp(2);
    uperp << -std::conj(u(1)), std::conj(u(0));
    const double y_u = (u.adjoint() * res.matrix() * u).value().real();
    const double y_perp = (uperp.adjoint() * res.matrix() * uperp).value().real();
    const double cross = std::abs((u.adjoint() * res.matrix() * uperp).value());

    // oracle: direct quadrature of the defining integrals at M = 1, d1 = 1
    const double y_u_oracle = rho * detail::resolvent_y_quadrature({1.0}, rho, 0);
    const double y_perp_oracle = rho * detail::resolvent_y_quadrature({1.0}, rho, 1);
    CHECK(y_u == Catch::Approx(y_u_oracle).margin(1e-10));
    CHECK(y_perp == Catch::Approx(y_perp_oracle).margin(1e-10));
    CHECK(y_u == Catch::Approx(rho * special::F2(rho)).epsilon(1e-10));
    CHECK(y_perp == Catch::Approx(special::F1(rho)).epsilon(1e-10));
    CHECK(cross < 1e-12);
}

TEST_CASE("resolvent trace identity vs Monte Carlo", "[kkt][mc]") {
    GaussianSampler rng(22);
    const HermitianMatrix r = random_pd(3, rng);
    const InputCovariance q = InputCovariance::random(3, rng);
    const double rho = 8.0;
    const double closed = (q.matrix() * expected_resolvent(r, q, rho).matrix()).trace().real();

    // E{rho h^H Q h / (1 + rho h^H Q h)} by sampling
    const ComplexMatrix rh = matrix_sqrt(r).matrix();
    const long n_samples = 2000000;
    double mean = 0.0, m2 = 0.0;
    GaussianSampler mc(777);
    for (long k = 0; k < n_samples; ++k) {
        const ComplexVector h = rh * sample_standard_complex_gaussian(3, mc);
        const double quad = rho * (h.adjoint() * q.matrix() * h).value().real();
        const double x = quad / (1.0 + quad);
        const double delta = x - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (x - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(n_samples - 1) /
                                static_cast<double>(n_samples));
    CHECK(std::abs(closed - mean) <= 3.0 * se);
}

TEST_CASE("resolvent low-SNR limit is rho R", "[kkt]") {
    GaussianSampler rng(23);
    const HermitianMatrix r = random_pd(4, rng);
    const InputCovariance q = InputCovariance::random(4, rng);
    const double rho = 1e-6;
    const HermitianMatrix res = expected_resolvent(r, q, rho);
    CHECK((res.matrix() - rho * r.matrix()).norm() <= 0.01 * rho * r.matrix().norm());
}

TEST_CASE("theta vanishes for identical statistics", "[kkt]") {
    const HermitianMatrix se = jakes_covariance(4, 0.3, 0.5, 0.3);
    const Scenario s = Scenario::statistical(10.0, se, se);
    GaussianSampler rng(24);
    const ThetaMatrix th = compute_theta(s, InputCovariance::random(4, rng));
    CHECK(th.matrix.frobenius_norm() < 1e-12);
}

TEST_CASE("theta is the gradient: finite-difference check", "[kkt]") {
    GaussianSampler rng(25);
    const double eps = 1e-5;
    for (int t = 0; t < 4; ++t) {
        const Eigen::Index n = 3 + t % 2;
        const bool full = t % 2 == 1;
        Scenario s = full ? Scenario::full_csi(2.0 + 10.0 * rng.uniform(),
                                               sample_standard_complex_gaussian(n, rng),
                                               random_pd(n, rng))
                          : Scenario::statistical(2.0 + 10.0 * rng.uniform(),
                                                  random_pd(n, rng), random_pd(n, rng));
        const InputCovariance q = InputCovariance::uniform(n);
        const ThetaMatrix th = compute_theta(s, q);
        for (int dir = 0; dir < 5; ++dir) {
            const HermitianMatrix delta = random_traceless_direction(n, rng);
            const InputCovariance qp(HermitianMatrix(q.matrix() + eps * delta.matrix()));
            const InputCovariance qm(HermitianMatrix(q.matrix() - eps * delta.matrix()));
            const double fd = (ergodic_secrecy_rate(s, qp).secrecy_rate -
                               ergodic_secrecy_rate(s, qm).secrecy_rate) /
                              (2.0 * eps);
            const double analytic = (th.matrix.matrix() * delta.matrix()).trace().real();
            CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
        }
    }
}

TEST_CASE("kkt residuals on hand-computable inputs", "[kkt]") {
    const InputCovariance q = InputCovariance::uniform(2);
    const ThetaMatrix theta_id{HermitianMatrix::identity(2), 1.0};
    const KktResiduals a = kkt_residuals(q, theta_id);
    CHECK(a.commutator == Catch::Approx(0.0).margin(1e-15));
    CHECK(a.eigen_eq == Catch::Approx(0.0).margin(1e-15));
    CHECK(a.lambda_max_gap == Catch::Approx(0.0).margin(1e-15));

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 1.0; d(1, 1) = -1.0;
    const ThetaMatrix theta_pm{HermitianMatrix(d), 0.0};
    const KktResiduals b = kkt_residuals(q, theta_pm);
    CHECK(b.commutator == Catch::Approx(0.0).margin(1e-15));
    CHECK(b.eigen_eq == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12)); // ||diag(1/2,-1/2)||_F
    CHECK(b.lambda_max_gap == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fixed point iterates stay in the feasible set", "[kkt]") {
    const Scenario s = jakes_statistical();
    SolverOptions opt;
    opt.max_iters = 40;
    opt.tol = 1e-30;
    // re-run the mapping manually to inspect the iterates
    InputCovariance q = InputCovariance::uniform(4);
    for (int it = 0; it < opt.max_iters; ++it) {
        const ThetaMatrix th = compute_theta(s, q);
        const double gamma = 2.0 * std::max(0.0, -th.matrix.lambda_min());
        const HermitianMatrix k(th.matrix.matrix() + gamma * ComplexMatrix::Identity(4, 4));
        const ComplexMatrix kh = matrix_sqrt(k).matrix();
        ComplexMatrix next = kh * q.matrix() * kh;
        next /= next.trace().real();
        q = InputCovariance::project(HermitianMatrix(0.5 * (next + next.adjoint().eval())));
        CHECK(q.hermitian().trace() == Catch::Approx(1.0).margin(1e-12));
        CHECK(q.spectrum().eigenvalues(3) >= -1e-10);
    }
}

TEST_CASE("statistical Jakes run reproduces its stationary point", "[kkt]") {
    const Scenario s = jakes_statistical();
    SolverOptions opt;
    opt.tol = 1e-30; // run all 300 iterations
    const KktReport rep = fixed_point_solve(s, InputCovariance::uniform(4), opt);
    CHECK(rep.iterations == 300);
    CHECK(rep.converged);
    // regression anchors computed from the closed forms (and cross-checked
    // against Monte Carlo in the acceptance suite)
    CHECK(rep.rate == Catch::Approx(1.6045710).margin(1e-4));
    const RealVector& lq = rep.q_opt.spectrum().eigenvalues;
    CHECK(lq(0) == Catch::Approx(0.937060).margin(1e-3));
    CHECK(lq(1) == Catch::Approx(0.062940).margin(1e-3));
    CHECK(lq(2) == Catch::Approx(0.0).margin(1e-8));
    CHECK(lq(3) == Catch::Approx(0.0).margin(1e-8));
    CHECK(rep.trace_q_theta == Catch::Approx(0.5327629).margin(1e-4));
    // top two Theta eigenvalues coalesce at the KKT point
    CHECK(std::abs(rep.theta_spectrum(0) - rep.theta_spectrum(1)) < 1e-3);
    CHECK(rep.theta_spectrum(0) == Catch::Approx(rep.trace_q_theta).margin(1e-3));
}

TEST_CASE("full-CSI printed scenario reproduces its stationary point", "[kkt]") {
    const Scenario s = printed_full_csi();
    SolverOptions opt;
    opt.tol = 1e-30;
    const KktReport rep = fixed_point_solve(s, InputCovariance::uniform(4), opt);
    CHECK(rep.converged);
    CHECK(rep.theta_spectrum(0) == Catch::Approx(0.4385).margin(5e-4));
    CHECK(rep.theta_spectrum(1) == Catch::Approx(-0.0105).margin(5e-4));
    CHECK(rep.theta_spectrum(2) == Catch::Approx(-1.3155).margin(5e-4));
    CHECK(rep.theta_spectrum(3) == Catch::Approx(-2.2006).margin(5e-4));
    CHECK(rep.trace_q_theta == Catch::Approx(0.4385).margin(5e-4));
    CHECK(rep.q_opt.spectrum().eigenvalues(0) == Catch::Approx(1.0).margin(1e-6));
    CHECK(rep.q_opt.spectrum().eigenvalues(1) == Catch::Approx(0.0).margin(1e-6));
    CHECK(rep.rate == Catch::Approx(1.9507508).margin(1e-4));
    // Theorem-1 equalities hold tightly at this point
    const double scale = std::max(1.0, rep.theta_spectrum.cwiseAbs().maxCoeff());
    CHECK(rep.commutator_residual <= 1e-6 * scale);
    CHECK(rep.eigen_eq_residual <= 1e-6 * scale);
    CHECK(std::abs(rep.lambda_max_gap) <= 1e-6 * scale);
}

TEST_CASE("fixed-point consistency at convergence", "[kkt]") {
    // One extra application of the mapping must barely move the iterate. The
    // displacement scales like sqrt(tol) because the rate gap is quadratic in
    // the remaining Q error, so 10*tol is only attainable at loose tolerances.
    const Scenario s = jakes_statistical();
    auto displacement = [&](const InputCovariance& q) {
        const ThetaMatrix th = compute_theta(s, q);
        const double gamma = 2.0 * std::max(0.0, -th.matrix.lambda_min());
        const ComplexMatrix kh =
            matrix_sqrt(HermitianMatrix(th.matrix.matrix() +
                                        gamma * ComplexMatrix::Identity(4, 4))).matrix();
        ComplexMatrix f = kh * q.matrix() * kh;
        f /= f.trace().real();
        return (f - q.matrix()).norm();
    };

    SolverOptions loose;
    loose.tol = 1e-3;
    loose.max_iters = 3000;
    const KktReport coarse = fixed_point_solve(s, InputCovariance::uniform(4), loose);
    CHECK(displacement(coarse.q_opt) <= 10.0 * loose.tol);

    SolverOptions tight;
    tight.tol = 1e-10;
    tight.max_iters = 3000;
    const KktReport fine = fixed_point_solve(s, InputCovariance::uniform(4), tight);
    REQUIRE(fine.converged);
    CHECK(displacement(fine.q_opt) <= std::sqrt(tight.tol));
}

TEST_CASE("long-run residuals and Monte-Carlo check at the Jakes stationary point", "[kkt][mc]") {
    const Scenario s = jakes_statistical();
    SolverOptions opt;
    opt.tol = 1e-13;
    opt.max_iters = 8000;
    const KktReport rep = fixed_point_solve(s, InputCovariance::uniform(4), opt);
    REQUIRE(rep.converged);
    CHECK(rep.commutator_residual <= 1e-6);
    CHECK(rep.eigen_eq_residual <= 1e-6);
    CHECK(std::abs(rep.lambda_max_gap) <= 1e-6);

    const MonteCarloEstimate mc = monte_carlo_rate(s, rep.q_opt, 10000000, 31337);
    CHECK(std::abs(rep.rate - mc.estimate) <= 3.0 * mc.std_error);
}

TEST_CASE("degenerate scenario is detected", "[kkt]") {
    const HermitianMatrix se = jakes_covariance(4, 0.3, 0.5, 0.3);
    const Scenario s = Scenario::statistical(10.0, se, se);
    const KktReport rep = fixed_point_solve(s, InputCovariance::uniform(4));
    CHECK(rep.degenerate);
    CHECK(rep.converged);
    CHECK(rep.rate == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("multi-start: reduction to single start, determinism, spread", "[kkt]") {
    const Scenario s = jakes_statistical();
    SolverOptions opt;
    opt.tol = 1e-10;
    opt.max_iters = 1000;

    const KktReport single = fixed_point_solve(s, InputCovariance::uniform(4), opt);
    const MultiStartReport one = multi_start_solve(s, 1, 42, opt);
    CHECK(one.best.rate == single.rate);
    CHECK(one.start_rates.size() == 1);

    const MultiStartReport a = multi_start_solve(s, 8, 42, opt);
    const MultiStartReport b = multi_start_solve(s, 8, 42, opt);
    CHECK(a.best.rate == b.best.rate);
    REQUIRE(a.start_rates.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.start_rates[i] == b.start_rates[i]);
    // every start converges to the same rate on this scenario
    for (double r : a.start_rates) CHECK(r == Catch::Approx(a.best.rate).margin(1e-4));
}

TEST_CASE("full-CSI structural laws at convergence", "[kkt]") {
    GaussianSampler rng(77);
    SolverOptions opt;
    opt.tol = 1e-12;
    opt.max_iters = 3000;
    int done = 0;
    while (done < 6) {
        const Eigen::Index n = 3 + done % 2;
        ComplexVector h = sample_standard_complex_gaussian(n, rng) * 1.5;
        const HermitianMatrix se = random_pd(n, rng, 0.1);
        const Scenario s = Scenario::full_csi(5.0, h, se);
        const KktReport rep = fixed_point_solve(s, InputCovariance::uniform(n), opt);
        if (!(rep.rate > 0.0) || !rep.converged) continue;
        ++done;
        // exactly one strictly positive Theta eigenvalue
        int positives = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (rep.theta_spectrum(i) > 1e-9) ++positives;
        }
        CHECK(positives == 1);
        // rank-one optimum
        CHECK(rep.q_opt.spectrum().eigenvalues(1) <= 1e-6);
        // positive directional power derivative
        CHECK(rep.trace_q_theta > 0.0);
    }
}

TEST_CASE("solver input validation", "[kkt]") {
    const Scenario s = jakes_statistical();
    SolverOptions bad;
    bad.beta = 0.0;
    CHECK_THROWS_AS(fixed_point_solve(s, InputCovariance::uniform(4), bad), std::domain_error);
    CHECK_THROWS_AS(fixed_point_solve(s, InputCovariance::uniform(3), {}), std::domain_error);
    CHECK_THROWS_AS(multi_start_solve(s, 0, 1, {}), std::invalid_argument);
}
