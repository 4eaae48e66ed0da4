#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kgads/config.hpp"
#include "kgads/error.hpp"
#include "kgads/geometry.hpp"

using namespace kgads;

TEST(ToyModel, Ads2StripRoots) {
    const auto m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    EXPECT_EQ(m.n(), 2);
    const auto r = indicial_roots(m);
    EXPECT_DOUBLE_EQ(r.nu_plus, 1.5);
    EXPECT_DOUBLE_EQ(r.nu_minus, -0.5);
    EXPECT_FALSE(m.has_transverse());
}

TEST(ToyModel, Ads3CylinderRoots) {
    const auto m = make_toy_model(ModelKind::ads3_cylinder, 0.5, 1.0, 2.0 * M_PI);
    EXPECT_EQ(m.n(), 3);
    const auto r = indicial_roots(m);
    EXPECT_DOUBLE_EQ(r.nu_plus, 1.5);
    EXPECT_DOUBLE_EQ(r.nu_minus, 0.5);
    ASSERT_TRUE(m.ell().has_value());
    EXPECT_DOUBLE_EQ(*m.ell(), 2.0 * M_PI);
}

TEST(ToyModel, RejectsBfViolation) {
    try {
        make_toy_model(ModelKind::ads2_strip, -1.0, 1.0);
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("BF bound violated"), std::string::npos);
    }
    EXPECT_THROW(make_toy_model(ModelKind::ads2_strip, 0.0, 1.0), PreconditionError);
}

TEST(ToyModel, EllRequiredExactlyForCylinder) {
    EXPECT_THROW(make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0), PreconditionError);
    EXPECT_THROW(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0, 3.0), PreconditionError);
    EXPECT_THROW(make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0, -1.0), PreconditionError);
    EXPECT_THROW(make_toy_model(ModelKind::ads2_strip, 1.0, 0.0), PreconditionError);
}

TEST(ToyModel, ExactEvennessAndUnitBeta) {
    const auto m = make_toy_model(ModelKind::ads2_strip, 2.5, 1.0);
    EXPECT_EQ(m.evenness_order(), MetricModel::kExactEvenness);
    EXPECT_DOUBLE_EQ(m.beta_bound(), 1.0);
    // nu^2 = (n-1)^2/4 + m^2
    EXPECT_DOUBLE_EQ(m.mass_squared(), 2.5 * 2.5 - 0.25);
}

TEST(IndicialRoots, WorkedValues) {
    const auto a = indicial_roots(4, 1.0);
    EXPECT_DOUBLE_EQ(a.nu_plus, 2.5);
    EXPECT_DOUBLE_EQ(a.nu_minus, 0.5);
    const auto b = indicial_roots(2, 0.5);
    EXPECT_DOUBLE_EQ(b.nu_plus, 1.0);
    EXPECT_DOUBLE_EQ(b.nu_minus, 0.0);
}

TEST(IndicialRoots, IdentitiesOnRandomParameters) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> n_dist(2, 8);
    std::uniform_real_distribution<double> nu_dist(0.01, 6.0);
    for (int i = 0; i < 100; ++i) {
        const int n = n_dist(rng);
        const double nu = nu_dist(rng);
        const auto r = indicial_roots(n, nu);
        EXPECT_NEAR(r.nu_plus + r.nu_minus, n - 1.0, 1e-14);
        EXPECT_NEAR(r.nu_plus - r.nu_minus, 2.0 * nu, 1e-14);
        EXPECT_NEAR(r.nu_plus * r.nu_minus, (n - 1.0) * (n - 1.0) / 4.0 - nu * nu, 1e-12);
    }
}

TEST(ConformalSymbol, NullExamples) {
    const auto m2 = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(conformal_symbol(m2, PhasePointB::make(0.5, 0.0, 1.0, 1.0)), 0.0);
    EXPECT_DOUBLE_EQ(conformal_symbol(m2, PhasePointB::make(0.5, 0.0, 1.0, 0.0)), 1.0);
    const auto m3 = make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0, 2.0 * M_PI);
    EXPECT_NEAR(conformal_symbol(m3, PhasePointB::make(0.5, 0.0, std::sqrt(2.0), 1.0, 0.0, 1.0)), 0.0, 1e-15);
}

TEST(ConformalSymbol, RejectsBoundaryPointWithNormalMomentum) {
    const auto m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    PhasePointB p;
    p.x = 0.0;
    p.tau = 1.0;
    p.xi = 1.0;
    p.xi_bar = 0.5;
    EXPECT_THROW(conformal_symbol(m, p), PreconditionError);
}

TEST(ConformalSymbol, HomogeneousOfDegreeTwo) {
    const auto m = make_custom_model(3, 1.0, 1.0, 2.0,
                                     CoefficientFunction::from_closure([](double x) { return 1.0 + x * x; }),
                                     CoefficientFunction::from_closure([](double x) { return 2.0 - x; }));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const double x = 0.5 + 0.2 * U(rng);
        const double tau = U(rng), xi = U(rng), zeta = U(rng);
        const double base = conformal_symbol(m, PhasePointB::make(x, 0.0, tau, xi, 0.0, zeta));
        for (double lam : {2.0, 10.0}) {
            const double v = conformal_symbol(m, PhasePointB::make(x, 0.0, lam * tau, lam * xi, 0.0, lam * zeta));
            EXPECT_NEAR(v, lam * lam * base, 1e-12 * lam * lam);
        }
    }
}

TEST(CustomModel, TableCoefficientsAndBounds) {
    std::vector<double> xs, bs;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(i / 20.0);
        bs.push_back(1.0 + 0.25 * xs.back() * xs.back());
    }
    const auto m = make_custom_model(2, 0.7, 1.0, std::nullopt, CoefficientFunction::from_table(xs, bs),
                                     CoefficientFunction::constant(1.0));
    EXPECT_NEAR(m.beta()(0.5), 1.0625, 1e-4);
    EXPECT_GT(m.beta_bound(), 0.0);
    EXPECT_LE(m.beta_bound(), 1.0 / 1.25 + 1e-12);
    EXPECT_THROW(make_custom_model(2, 1.0, 1.0, std::nullopt, CoefficientFunction::constant(-1.0),
                                   CoefficientFunction::constant(1.0)),
                 PreconditionError);
}

TEST(CustomModel, EvennessFlag) {
    const auto odd = make_custom_model(2, 1.0, 1.0, std::nullopt,
                                       CoefficientFunction::from_closure([](double x) { return 1.0 + 0.5 * x; }),
                                       CoefficientFunction::constant(1.0));
    EXPECT_EQ(odd.evenness_order(), 0);
    const auto even = make_custom_model(2, 1.0, 1.0, std::nullopt,
                                        CoefficientFunction::from_closure([](double x) { return 1.0 + x * x; }),
                                        CoefficientFunction::constant(1.0));
    EXPECT_GE(even.evenness_order(), 3);
}

TEST(CoefficientFunction, TaylorOfPolynomial) {
    const auto f = CoefficientFunction::from_closure([](double x) { return 2.0 - 3.0 * x + 0.5 * x * x * x; });
    const auto c = f.taylor(4, 0.25);
    ASSERT_EQ(c.size(), 5u);
    EXPECT_NEAR(c[0], 2.0, 1e-10);
    EXPECT_NEAR(c[1], -3.0, 1e-8);
    EXPECT_NEAR(c[2], 0.0, 1e-6);
    EXPECT_NEAR(c[3], 0.5, 1e-5);
}

TEST(Config, ParsesToyAndRejectsBadInput) {
    const auto m = model_from_json_text(R"({"kind": "ads3_cylinder", "nu": 1.0, "L": 2.0, "ell": 3.0})");
    EXPECT_EQ(m.kind(), ModelKind::ads3_cylinder);
    EXPECT_DOUBLE_EQ(m.L(), 2.0);
    EXPECT_THROW(model_from_json_text("{not json"), PreconditionError);
    EXPECT_THROW(model_from_json_text(R"({"kind": "ads2_strip"})"), PreconditionError);
    EXPECT_THROW(model_from_json_text(R"({"kind": "ads2_strip", "nu": -0.5})"), PreconditionError);
    EXPECT_THROW(model_from_json_text(R"({"kind": "ads2_strip", "n": 3, "nu": 1})"), PreconditionError);
    EXPECT_THROW(model_from_json_text(R"({"kind": "wormhole", "nu": 1})"), PreconditionError);
}
