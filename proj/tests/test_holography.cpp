#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "kgads/error.hpp"
#include "kgads/holography.hpp"
#include "oracles.hpp"

using namespace kgads;
using cd = std::complex<double>;

namespace {

std::shared_ptr<const SpectralModel> toy(double nu, int N = 400, int modes = 20) {
    SpectralOptions o;
    o.N = N;
    o.n_modes = modes;
    return build_spectral(make_toy_model(ModelKind::ads2_strip, nu, 1.0), o);
}

MetricModel odd_model(double nu) {
    return make_custom_model(2, nu, 1.0, std::nullopt,
                             CoefficientFunction::from_closure([](double x) { return 1.0 + 0.5 * x; },
                                                               [](double) { return 0.5; }),
                             CoefficientFunction::constant(1.0));
}

}  // namespace

TEST(Indicial, PolynomialRootsAndSymmetry) {
    EXPECT_DOUBLE_EQ(indicial_polynomial(2, 1.0, 1.5), 0.0);
    EXPECT_DOUBLE_EQ(indicial_polynomial(2, 1.0, -0.5), 0.0);
    // (alpha - nu_-)(nu_+ - alpha) at the midpoint is nu^2
    EXPECT_DOUBLE_EQ(indicial_polynomial(4, 0.75, 1.5), 0.5625);
    EXPECT_NEAR(indicial_polynomial(3, 2.0, 3.0 + 0.4), indicial_polynomial(3, 2.0, -1.0 - 0.4), 1e-14);
    const auto m = make_toy_model(ModelKind::ads2_strip, 2.5, 1.0);
    EXPECT_DOUBLE_EQ(indicial_polynomial(m, 3.0), 0.0);
}

TEST(Series, ToyCoefficientsMatchBesselExpansion) {
    // on the toy strip x^{-1/2} u solves Bessel's equation in omega x:
    // w_2 / w_0 = -omega^2 / (4 (nu + 1))
    const auto m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    const double omega = 3.0;
    const auto s = build_series(m, {{omega, 0, 1.0}}, 4);
    ASSERT_EQ(s.coeffs.size(), 1u);
    EXPECT_NEAR(std::abs(s.coeffs[0][1]), 0.0, 1e-14);
    EXPECT_NEAR(s.coeffs[0][2].real(), -omega * omega / 8.0, 1e-12);
    EXPECT_NEAR(s.coeffs[0][4].real(), std::pow(omega, 4) / (32.0 * 2.0 * 3.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.alpha, 1.5);
}

TEST(Series, EachOrderGainsOnePower) {
    const auto m = odd_model(0.7);
    const double nu_plus = 0.5 + 0.7;
    std::vector<double> slopes;
    for (int K = 0; K <= 4; ++K) {
        const auto s = build_series(m, {{1.0, 0, 1.0}}, K);
        EXPECT_GE(s.residual_slope, nu_plus + K + 1 - 0.05) << "K = " << K;
        slopes.push_back(s.residual_slope);
    }
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i) EXPECT_GE(slopes[i + 1] - slopes[i], 0.9);
}

TEST(Series, ZeroDataGivesZeroSeries) {
    const auto m = odd_model(1.0);
    const auto s = build_series(m, {{2.0, 0, 0.0}}, 3);
    for (double x : {1e-3, 1e-1}) {
        EXPECT_EQ(s.evaluate(0, x), cd(0.0));
        EXPECT_EQ(series_residual(m, s, 0, x), cd(0.0));
    }
}

TEST(Series, ResonantExponentIsRejected) {
    // nu = 1/2 on the strip: nu_+ - nu_- = 1, so c_{alpha + 1} vanishes for alpha = nu_-
    const auto m = odd_model(0.5);
    SeriesOptions o;
    o.alpha = 0.0;
    EXPECT_THROW(build_series(m, {{1.0, 0, 1.0}}, 2, o), PreconditionError);
}

TEST(Exponent, SyntheticPowerAndNoise) {
    const auto s = toy(1.0);
    const auto& m = s->model();
    const Eigen::VectorXd p = s->x().array().pow(1.3);
    const auto pr = mellin_exponent_probe(p, s->x(), m);
    EXPECT_NEAR(pr.alpha_hat, 1.3, 1e-6);
    EXPECT_TRUE(pr.reliable);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd noise(s->N());
    for (int i = 0; i < s->N(); ++i) noise(i) = U(rng);
    EXPECT_FALSE(mellin_exponent_probe(noise, s->x(), m).reliable);
}

TEST(Exponent, EigenfunctionsCarryNuPlusWeight) {
    for (double nu : {0.7, 1.0}) {
        const auto s = toy(nu);
        const auto& sec = s->sector(0);
        for (int k = 0; k < 5; ++k) {
            const double hi = std::min(0.05, 0.2 / sec.omega(k));
            const auto pr = mellin_exponent_probe(Eigen::VectorXd(sec.phi.col(k)), s->x(), s->model(), 0.0, hi);
            // tilde eigenfunctions behave as x^{nu + 1/2}
            EXPECT_NEAR(pr.alpha_hat, nu + 0.5, 2e-2) << "nu = " << nu << " k = " << k;
        }
    }
}

TEST(BoundaryFit, ExactOnPolynomialProfile) {
    const auto s = toy(1.0);
    Eigen::VectorXcd u(s->N());
    for (int i = 0; i < s->N(); ++i) {
        const double x = s->x()(i);
        u(i) = cd(2.0, -1.0) * std::pow(x, 1.5) * (1.0 + 3.0 * x);
    }
    const auto f = extract_boundary(u, s->x(), s->model(), Weighting::physical);
    EXPECT_NEAR(std::abs(f.value - cd(2.0, -1.0)), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(f.slope - cd(6.0, -3.0)), 0.0, 1e-5);
    EXPECT_FALSE(f.contaminated);
}

TEST(BoundaryFit, FlagsTheNuMinusBranch) {
    const auto s = toy(1.0);
    Eigen::VectorXcd u(s->N());
    for (int i = 0; i < s->N(); ++i) {
        const double x = s->x()(i);
        u(i) = std::pow(x, 1.5) + 1e-3 * std::pow(x, -0.5);
    }
    bool flagged = false;
    try {
        flagged = extract_boundary(u, s->x(), s->model(), Weighting::physical).contaminated;
    } catch (const NumericalError&) {
        flagged = true;
    }
    EXPECT_TRUE(flagged);
}

TEST(BoundaryFit, GroundModeCoefficientFromBesselAsymptotics) {
    const auto s = toy(1.0, 1000, 20);
    for (int k = 0; k < 3; ++k) {
        const auto f = extract_boundary(s->sector(0).phi.col(k).cast<cd>(), s->x(), s->model(), Weighting::tilde);
        EXPECT_NEAR(std::abs(f.value) / oracle::bessel_boundary_coefficient(1.0, k + 1), 1.0, 1e-2) << k;
    }
}

TEST(BoundaryKernel, PositiveOneSidedWithBesselWeights) {
    const auto s = toy(1.0, 1000, 20);
    const TimeGrid g{0.0, 0.02, 600};
    const auto lp = make_propagator(s, KernelKind::lambda_plus, g, Weighting::physical);
    const auto bk = boundary_two_point(lp);
    EXPECT_EQ(bk.sectors(), std::vector<int>{0});
    FrequencyTestOptions fo;
    const auto r = verify_boundary_kernel(bk, s->m_floor_sqrt(), fo);
    EXPECT_TRUE(r.pass_hermitian) << r.hermiticity_defect;
    EXPECT_TRUE(r.pass_psd) << r.gram_min;
    EXPECT_LE(r.frequency.forbidden_fraction, 1e-6);
    const auto lines = bk.spectral_lines();
    ASSERT_GE(lines.size(), 5u);
    for (int k = 0; k < 5; ++k) {
        const double c = oracle::bessel_boundary_coefficient(1.0, k + 1);
        const double w = oracle::bessel_zero(1.0, k + 1);
        EXPECT_NEAR(lines[k].weight / (c * c / (2.0 * w)), 1.0, 1e-2) << k;
    }
    // k(t, s) = sum_k weight_k exp(i omega_k (t - s)) on the grid
    cd direct = 0.0;
    for (const auto& ln : lines) direct += ln.weight * std::polar(1.0, ln.omega * 0.4);
    EXPECT_NEAR(std::abs(bk.value(0, 0.4, 0.0) - direct), 0.0, 1e-10 * std::abs(direct));
}

TEST(BoundaryKernel, NeedsPhysicalWeighting) {
    const auto s = toy(1.0, 200, 10);
    const TimeGrid g{0.0, 0.02, 64};
    const auto lp = make_propagator(s, KernelKind::lambda_plus, g, Weighting::tilde);
    EXPECT_THROW(boundary_two_point(lp), PreconditionError);
}
