#include <cmath>

#include <gtest/gtest.h>

#include "kgads/error.hpp"
#include "kgads/spectral.hpp"
#include "oracles.hpp"

using namespace kgads;

namespace {

std::shared_ptr<const SpectralModel> build(double nu, int N = 400, int modes = 20) {
    SpectralOptions o;
    o.N = N;
    o.n_modes = modes;
    return build_spectral(make_toy_model(ModelKind::ads2_strip, nu, 1.0), o);
}

}  // namespace

class BesselOracle : public ::testing::TestWithParam<double> {};

TEST_P(BesselOracle, EigenvaluesAreSquaredBesselZeros) {
    const double nu = GetParam();
    const auto s = build(nu);
    const auto& sec = s->sector(0);
    for (int k = 0; k < 10; ++k) {
        const double j = oracle::bessel_zero(nu, k + 1);
        EXPECT_NEAR(sec.omega(k), j, 1e-6 * j) << "k = " << k + 1;
    }
}

TEST_P(BesselOracle, EigenfunctionsMatchNormalizedBesselModes) {
    const double nu = GetParam();
    const auto s = build(nu);
    const auto& sec = s->sector(0);
    for (int k = 0; k < 4; ++k) {
        double err = 0.0;
        for (int i = 0; i < s->N(); i += 7)
            err = std::max(err, std::abs(sec.phi(i, k) - oracle::bessel_mode(nu, k + 1, s->x()(i))));
        EXPECT_LT(err, 1e-4) << "k = " << k + 1;
    }
}

INSTANTIATE_TEST_SUITE_P(Toy, BesselOracle, ::testing::Values(0.5, 1.0, 2.5));

TEST(Spectral, HalfIntegerNuGivesSineSpectrum) {
    const auto s = build(0.5);
    for (int k = 1; k <= 10; ++k) {
        const double exact = k * k * M_PI * M_PI;
        EXPECT_NEAR(s->sector(0).omega2(k - 1), exact, 1e-6 * exact);
    }
}

TEST(Spectral, CylinderSectorsShiftByTransverseEigenvalue) {
    SpectralOptions o;
    o.N = 300;
    o.n_modes = 10;
    o.m_max = 2;
    const auto s = build_spectral(make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0, 2.0 * M_PI), o);
    EXPECT_EQ(s->m_max(), 2);
    for (int m = -2; m <= 2; ++m) {
        const auto& sec = s->sector(m);
        EXPECT_DOUBLE_EQ(sec.transverse_eigenvalue, double(m * m));
        for (int k = 0; k < 5; ++k) {
            const double j = oracle::bessel_zero(1.0, k + 1);
            EXPECT_NEAR(sec.omega2(k), j * j + m * m, 1e-6 * (j * j + m * m));
        }
    }
}

TEST(Spectral, OrthonormalInDiscreteInnerProduct) {
    const auto s = build(1.0);
    const auto& phi = s->sector(0).phi;
    const Eigen::MatrixXd G = phi.transpose() * s->weights().asDiagonal() * phi;
    EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectral, FloorBoundsSpectrumAndOmegaMax) {
    const auto s = build(2.5);
    EXPECT_GT(s->m2_floor(), 0.0);
    EXPECT_LE(s->m2_floor(), s->sector(0).omega2(0));
    EXPECT_DOUBLE_EQ(s->omega_max(), s->sector(0).omega(s->n_modes() - 1));
}

TEST(SpectralCalculus, InverseSquareRootSquaredIsInverse) {
    const auto s = build(1.0, 256, 16);
    const auto a = func_of_A(*s, SpectralFunction::inv_sqrt, {});
    const auto b = func_of_A(*s, SpectralFunction::inv, {});
    // the nodal matrices already carry the quadrature weights
    const Eigen::MatrixXcd sq = a * a;
    EXPECT_LT((sq - b).cwiseAbs().maxCoeff(), 1e-9 * b.cwiseAbs().maxCoeff());
}

TEST(SpectralCalculus, CosAndSinAgreeWithExponential) {
    const auto s = build(1.0, 256, 16);
    const double t = 0.37;
    const auto c = func_of_A(*s, SpectralFunction::cos_t_sqrt, {t, 1});
    const auto e_plus = func_of_A(*s, SpectralFunction::exp_pm_it_sqrt, {t, 1});
    const auto e_minus = func_of_A(*s, SpectralFunction::exp_pm_it_sqrt, {t, -1});
    EXPECT_LT((c - 0.5 * (e_plus + e_minus)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SpectralCalculus, SpectralValueExamples) {
    const double lam = 4.0;
    EXPECT_NEAR(spectral_value(SpectralFunction::inv_sqrt, lam, {}).real(), 0.5, 1e-15);
    EXPECT_NEAR(spectral_value(SpectralFunction::sqrt, lam, {}).real(), 2.0, 1e-15);
    EXPECT_NEAR(spectral_value(SpectralFunction::sin_t_sqrt, lam, {0.5, 1}).real(), std::sin(1.0) / 2.0, 1e-15);
    EXPECT_NEAR(spectral_value(SpectralFunction::cos_t_sqrt, lam, {0.5, 1}).real(), std::cos(1.0), 1e-15);
    const auto e = spectral_value(SpectralFunction::exp_pm_it_sqrt, lam, {0.5, -1});
    EXPECT_NEAR(e.imag(), -std::sin(1.0), 1e-15);
    EXPECT_THROW(spectral_value(SpectralFunction::exp_pm_it_sqrt, lam, {0.5, 0}), PreconditionError);
    EXPECT_EQ(spectral_function_from_string("sin_t_sqrt"), SpectralFunction::sin_t_sqrt);
    EXPECT_THROW(spectral_function_from_string("tan"), PreconditionError);
}

TEST(SpectralCalculus, FormOperatorReproducesEigenpairs) {
    const auto s = build(1.0, 256, 16);
    const Eigen::MatrixXd A = form_operator(*s);
    const auto& sec = s->sector(0);
    for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd r = A * sec.phi.col(k) - sec.omega2(k) * sec.phi.col(k);
        EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-6 * sec.omega2(k) * sec.phi.col(k).cwiseAbs().maxCoeff());
    }
}

TEST(Spectral, Preconditions) {
    const auto m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    SpectralOptions o;
    o.N = 32;
    EXPECT_THROW(build_spectral(m, o), PreconditionError);
    o.N = 200;
    o.n_modes = 100;
    EXPECT_THROW(build_spectral(m, o), PreconditionError);
    o.n_modes = 10;
    o.m_max = 1;
    EXPECT_THROW(build_spectral(m, o), PreconditionError);
    o.m_max = 0;
    o.tol_eig = 0.0;
    EXPECT_THROW(build_spectral(m, o), PreconditionError);
}
