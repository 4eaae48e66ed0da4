#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "kgads/error.hpp"
#include "kgads/propagators.hpp"

using namespace kgads;
using cd = std::complex<double>;

namespace {

std::shared_ptr<const SpectralModel> small_model() {
    static const auto s = [] {
        SpectralOptions o;
        o.N = 200;
        o.n_modes = 15;
        return build_spectral(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0), o);
    }();
    return s;
}

const TimeGrid kGrid{0.0, 0.02, 800};

}  // namespace

TEST(Propagators, RetardedTemporalCoefficientClosedForm) {
    const auto k = make_propagator(small_model(), KernelKind::retarded, kGrid, Weighting::tilde);
    const double w = k.omega(0, 3);
    for (double t : {0.3, 1.7}) {
        for (double s : {0.0, 0.9, 2.5}) {
            const cd v = k.temporal(0, 3, t, s);
            const double expect = t > s ? std::sin((t - s) * w) / w : 0.0;
            EXPECT_NEAR(v.real(), expect, 1e-14);
            EXPECT_NEAR(v.imag(), 0.0, 1e-14);
        }
    }
    EXPECT_EQ(k.temporal(0, 3, 1.0, 1.0), cd(0.0));
}

TEST(Propagators, LambdaPlusTemporalCoefficientClosedForm) {
    const auto k = make_propagator(small_model(), KernelKind::lambda_plus, kGrid, Weighting::tilde);
    const auto km = make_propagator(small_model(), KernelKind::lambda_minus, kGrid, Weighting::tilde);
    const double w = k.omega(0, 0);
    const double d = 0.73;
    const cd expect = std::polar(1.0, d * w) / (2.0 * w);
    EXPECT_NEAR(std::abs(k.temporal(0, 0, d, 0.0) - expect), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(km.temporal(0, 0, d, 0.0) - std::conj(expect)), 0.0, 1e-14);
}

TEST(Propagators, SignConventionSwapsPlusAndMinus) {
    PropagatorOptions flipped;
    flipped.sign_convention = -1;
    const auto a = make_propagator(small_model(), KernelKind::lambda_plus, kGrid, Weighting::tilde, flipped);
    const auto b = make_propagator(small_model(), KernelKind::lambda_minus, kGrid, Weighting::tilde);
    EXPECT_LT(kernel_difference(a, b), 1e-15);
}

class TwoPoint : public ::testing::TestWithParam<Weighting> {};

TEST_P(TwoPoint, VacuumIsATwoPointFunction) {
    const TimeGrid g{0.0, 0.02, 300};
    const auto lp = make_propagator(small_model(), KernelKind::lambda_plus, g, GetParam());
    const auto lm = make_propagator(small_model(), KernelKind::lambda_minus, g, GetParam());
    const auto G = make_propagator(small_model(), KernelKind::causal, g, GetParam());
    const auto r = verify_two_point(lp, lm, G);
    EXPECT_TRUE(r.pass_commutator) << r.commutator_defect;
    EXPECT_TRUE(r.pass_hermitian) << r.hermiticity_defect;
    EXPECT_TRUE(r.pass_gram) << r.gram_min_plus << " " << r.gram_min_minus;
    EXPECT_TRUE(r.pass_p) << r.p_residual_plus << " vs " << r.p_residual_bound;
}

TEST_P(TwoPoint, SwappedCommutatorIsDetected) {
    const TimeGrid g{0.0, 0.02, 300};
    const auto lp = make_propagator(small_model(), KernelKind::lambda_plus, g, GetParam());
    const auto lm = make_propagator(small_model(), KernelKind::lambda_minus, g, GetParam());
    const auto G = make_propagator(small_model(), KernelKind::causal, g, GetParam());
    EXPECT_FALSE(verify_two_point(lm, lp, G).pass_commutator);
}

INSTANTIATE_TEST_SUITE_P(Weightings, TwoPoint, ::testing::Values(Weighting::tilde, Weighting::physical));

TEST(Propagators, AdjointSupportAndCausalDifference) {
    const TimeGrid g{0.0, 0.02, 200};
    const auto ret = make_propagator(small_model(), KernelKind::retarded, g, Weighting::tilde);
    const auto adv = make_propagator(small_model(), KernelKind::advanced, g, Weighting::tilde);
    const auto G = make_propagator(small_model(), KernelKind::causal, g, Weighting::tilde);
    EXPECT_LE(adjoint_defect(ret, adv), 1e-12);
    EXPECT_EQ(support_violation(ret), 0.0);
    EXPECT_LE(kernel_difference(G, combine({{1.0, &ret}, {-1.0, &adv}})), 1e-12);
    EXPECT_GT(support_violation(adv), 0.0);
}

TEST(Propagators, FeynmanConsistency) {
    const TimeGrid g{0.0, 0.02, 200};
    const auto ret = make_propagator(small_model(), KernelKind::retarded, g, Weighting::tilde);
    const auto adv = make_propagator(small_model(), KernelKind::advanced, g, Weighting::tilde);
    const auto lp = make_propagator(small_model(), KernelKind::lambda_plus, g, Weighting::tilde);
    const auto lm = make_propagator(small_model(), KernelKind::lambda_minus, g, Weighting::tilde);
    const auto f = make_feynman(lp, lm, ret, adv);
    EXPECT_LE(f.consistency_defect, 1e-12);
    // P_F^{-1} - P_Fbar^{-1} = -i (Lambda^+ + Lambda^-) ... check at one mode by hand
    const double w = ret.omega(0, 2);
    const double t = 1.1, s = 0.4;
    const cd expect = cd(0.0, -1.0) * std::polar(1.0, (t - s) * w) / (2.0 * w);
    EXPECT_NEAR(std::abs(f.feynman.temporal(0, 2, t, s) - expect), 0.0, 1e-14);
    const auto direct = make_propagator(small_model(), KernelKind::feynman, g, Weighting::tilde);
    EXPECT_LE(kernel_difference(direct, f.feynman), 1e-14);
}

TEST(Propagators, CombineRejectsMismatchedGrids) {
    const auto a = make_propagator(small_model(), KernelKind::retarded, TimeGrid{0.0, 0.02, 100}, Weighting::tilde);
    const auto b = make_propagator(small_model(), KernelKind::retarded, TimeGrid{0.0, 0.01, 100}, Weighting::tilde);
    EXPECT_THROW(combine({{1.0, &a}, {1.0, &b}}), PreconditionError);
    const auto c = make_propagator(small_model(), KernelKind::retarded, TimeGrid{0.0, 0.02, 100}, Weighting::physical);
    EXPECT_THROW(combine({{1.0, &a}, {1.0, &c}}), PreconditionError);
}

TEST(Propagators, SecondOrderInTimeStep) {
    std::vector<double> r;
    for (double dt : {8e-3, 4e-3}) {
        const TimeGrid g{0.0, dt, static_cast<int>(std::lround(1.6 / dt)) + 1};
        r.push_back(inverse_residual(make_propagator(small_model(), KernelKind::retarded, g, Weighting::tilde), 0, 6));
    }
    EXPECT_GT(std::log2(r[0] / r[1]), 1.8);
}

TEST(Propagators, TimeSliceReproducesSolution) {
    const TimeGrid g{0.0, 2e-3, 801};
    const auto G = make_propagator(small_model(), KernelKind::causal, g, Weighting::tilde);
    ModeSolution u;
    u.modes = {0, 1, 4};
    u.cos_coeff = {1.0, -0.5, 0.25};
    u.sin_coeff = {0.3, 0.0, -0.7};
    const auto r = time_slice_check(G, TimeCutoff{0.5, 1.1}, u);
    EXPECT_GT(r.solution_max, 0.0);
    EXPECT_LT(r.residual / r.solution_max, 1e-2);
}

TEST(TimeCutoff, SmoothStep) {
    const TimeCutoff chi{1.0, 2.0};
    EXPECT_EQ(chi(0.5), 0.0);
    EXPECT_EQ(chi(1.0), 0.0);
    EXPECT_EQ(chi(2.5), 1.0);
    EXPECT_GT(chi(1.5), 0.0);
    EXPECT_LT(chi(1.5), 1.0);
    EXPECT_LE(chi(1.3), chi(1.7));
}

TEST(Frequency, VacuumIsOneSidedAndMutationIsCaught) {
    const auto s = small_model();
    const double mf = s->m_floor_sqrt();
    FrequencyTestOptions fo;
    fo.window = 40.0 / mf;
    const auto lp = make_propagator(s, KernelKind::lambda_plus, kGrid, Weighting::tilde);
    const auto lm = make_propagator(s, KernelKind::lambda_minus, kGrid, Weighting::tilde);
    EXPECT_LE(frequency_sign_test(lp, mf, fo).forbidden_fraction, 1e-6);
    EXPECT_LE(frequency_sign_test(lm, mf, fo).forbidden_fraction, 1e-6);
    const auto mutant = frequency_sign_test(flip_mode_signs(lp, 1), mf, fo);
    EXPECT_FALSE(mutant.pass);
    EXPECT_GE(mutant.forbidden_fraction, 1e-3);
}

TEST(Frequency, ScalarExponentialHasOneSidedSpectrum) {
    const double mf = 2.0;
    FrequencyTestOptions fo;
    fo.sign = 1;
    fo.window = 20.0;
    const TimeGrid g{0.0, 0.05, 600};
    const auto plus = [](double t, double s) { return std::polar(1.0, 5.0 * (t - s)); };
    const auto minus = [](double t, double s) { return std::polar(1.0, -5.0 * (t - s)); };
    EXPECT_TRUE(frequency_sign_scalar(plus, g, mf, fo).pass);
    EXPECT_FALSE(frequency_sign_scalar(minus, g, mf, fo).pass);
}

TEST(Propagators, KindNames) {
    for (auto k : {KernelKind::retarded, KernelKind::advanced, KernelKind::causal, KernelKind::lambda_plus,
                   KernelKind::lambda_minus, KernelKind::feynman, KernelKind::antifeynman})
        EXPECT_EQ(kernel_kind_from_string(to_string(k)), k);
    EXPECT_THROW(kernel_kind_from_string("wightman"), PreconditionError);
    EXPECT_EQ(weighting_from_string("physical"), Weighting::physical);
}
