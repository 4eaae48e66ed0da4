#include <cmath>
#include <complex>
#include <sstream>

#include <gtest/gtest.h>

#include "kgads/error.hpp"
#include "kgads/microlocal.hpp"

using namespace kgads;
using cd = std::complex<double>;

namespace {

std::shared_ptr<const SpectralModel> packet_model() {
    static const auto s = [] {
        SpectralOptions o;
        o.N = 1000;
        o.n_modes = 120;
        return build_spectral(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0), o);
    }();
    return s;
}

std::shared_ptr<const SpectralModel> kernel_model() {
    static const auto s = [] {
        SpectralOptions o;
        o.N = 200;
        o.n_modes = 15;
        return build_spectral(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0), o);
    }();
    return s;
}

const TimeGrid kGrid{0.0, 0.02, 800};
// long enough for windows away from the diagonal and for resolved decay lines
const TimeGrid kLongGrid{0.0, 0.02, 2100};

BiKernel kernel(KernelKind kind, const TimeGrid& g = kGrid) {
    return make_propagator(kernel_model(), kind, g, Weighting::tilde);
}

ScanOptions scan_options() {
    ScanOptions so;
    so.window = 40.0 / kernel_model()->m_floor_sqrt();
    return so;
}

}  // namespace

TEST(Wavepacket, MomentsMatchTheGaussian) {
    const auto w = make_wavepacket(*packet_model(), 0.5, -80.0, 0.05, EnergySign::plus);
    EXPECT_LE(w.tail, 1e-6);
    EXPECT_NEAR(w.coeffs.norm(), 1.0, 1e-12);
    const auto mo = wavepacket_moments(*packet_model(), w);
    EXPECT_NEAR(mo.mean_x, 0.5, 1e-3);
    EXPECT_NEAR(mo.var_x, 0.05 * 0.05, 5e-5);
    EXPECT_NEAR(mo.mean_xi, -80.0, 0.5);
    EXPECT_NEAR(mo.var_xi, 1.0 / (4.0 * 0.05 * 0.05), 5.0);
}

TEST(Wavepacket, Preconditions) {
    const auto& s = *packet_model();
    EXPECT_THROW(make_wavepacket(s, 0.1, -80.0, 0.05, EnergySign::plus), PreconditionError);
    EXPECT_THROW(make_wavepacket(s, 0.5, -40.0, 0.05, EnergySign::plus), PreconditionError);
    EXPECT_THROW(make_wavepacket(s, 0.5, -80.0, 0.0, EnergySign::plus), PreconditionError);
    WavepacketOptions o;
    o.allow_low_momentum = true;
    EXPECT_NO_THROW(make_wavepacket(s, 0.5, 0.0, 0.1, EnergySign::plus, o));
    EXPECT_THROW(make_wavepacket(s, 0.5, -400.0, 0.05, EnergySign::plus), NumericalError);
}

class PacketTrack : public ::testing::TestWithParam<std::tuple<double, double, double, EnergySign>> {};

TEST_P(PacketTrack, CentroidFollowsReflectedRay) {
    const auto [x0, xi0, sigma, sign] = GetParam();
    const auto w = make_wavepacket(*packet_model(), x0, xi0, sigma, sign);
    const auto tr = evolve_and_track(*packet_model(), w, 2.2 * x0, 1e-3);
    ASSERT_TRUE(tr.has_gbb);
    EXPECT_FALSE(tr.partial);
    EXPECT_TRUE(tr.agrees()) << tr.max_excess;
    EXPECT_GE(tr.boundary_reflections, 1);
    // unit-speed toy: the ray meets x = 0 at t = x0 and is back at 2 x0
    EXPECT_NEAR(tr.turnaround_time, x0, 2.0 * sigma);
    EXPECT_NEAR(tr.return_time, 2.0 * x0, 2.0 * sigma);
    std::ostringstream out;
    write_trajectory_csv(out, tr);
    EXPECT_EQ(out.str().substr(0, out.str().find('\r')), "t,centroid,spread,gbb_x,deviation");
}

INSTANTIATE_TEST_SUITE_P(Packets, PacketTrack,
                         ::testing::Values(std::make_tuple(0.5, -80.0, 0.05, EnergySign::plus),
                                           std::make_tuple(0.6, 100.0, 0.05, EnergySign::minus)),
                         [](const auto& info) {
                             return std::string(std::get<3>(info.param) == EnergySign::plus ? "plus" : "minus") +
                                    "_x0_" + std::to_string(static_cast<int>(std::get<0>(info.param) * 10));
                         });

TEST(Scan, VacuumQuadrants) {
    const double mf = kernel_model()->m_floor_sqrt();
    const auto so = scan_options();
    const auto rp = kernel_wavefront_scan(kernel(KernelKind::lambda_plus), mf, so);
    EXPECT_TRUE(rp.pass);
    EXPECT_LE(rp.max_off_pattern, 1e-6);
    EXPECT_FALSE(rp.windows.empty());
    EXPECT_LE(kernel_wavefront_scan(kernel(KernelKind::lambda_minus), mf, so).max_off_pattern, 1e-6);
    EXPECT_LE(kernel_wavefront_scan(kernel(KernelKind::causal), mf, so).max_off_pattern, 1e-6);
}

TEST(Scan, PrimedPairingPutsPlusInPlusPlus) {
    const double mf = kernel_model()->m_floor_sqrt();
    const auto r = kernel_wavefront_scan(kernel(KernelKind::lambda_plus), mf, scan_options());
    for (const auto& w : r.windows) EXPECT_GE(w.content_plus(), 1e6 * w.content_minus());
}

TEST(Scan, SignFlipIsDetected) {
    const double mf = kernel_model()->m_floor_sqrt();
    const auto r = kernel_wavefront_scan(flip_mode_signs(kernel(KernelKind::lambda_plus), 1), mf, scan_options());
    EXPECT_FALSE(r.pass);
    EXPECT_GE(r.max_off_pattern, 1e-3);
}

TEST(Scan, FeynmanPatternDependsOnTimeOrder) {
    const double mf = kernel_model()->m_floor_sqrt();
    const auto f = make_feynman(kernel(KernelKind::lambda_plus, kLongGrid), kernel(KernelKind::lambda_minus, kLongGrid),
                                kernel(KernelKind::retarded, kLongGrid), kernel(KernelKind::advanced, kLongGrid));
    auto so = scan_options();
    so.tolerance = 1e-5;
    const auto r = kernel_wavefront_scan(f.feynman, mf, so);
    EXPECT_LE(r.max_off_pattern, 1e-5);
    int judged = 0;
    for (const auto& w : r.windows) {
        if (w.excluded) continue;
        ++judged;
        if (w.t > w.s) EXPECT_GT(w.content_plus(), w.content_minus());
        else EXPECT_GT(w.content_minus(), w.content_plus());
    }
    EXPECT_GT(judged, 0);
    EXPECT_LE(kernel_wavefront_scan(f.antifeynman, mf, so).max_off_pattern, 1e-5);
}

TEST(States, EmptyRotationIsTheVacuum) {
    const auto p = make_perturbed_state(kernel(KernelKind::lambda_plus), kernel(KernelKind::lambda_minus), {});
    EXPECT_EQ(kernel_difference(p.plus_b, p.plus_a), 0.0);
    EXPECT_EQ(p.spec.describe(), "vacuum");
}

TEST(States, ThermalOccupationClosedForm) {
    const auto lp = kernel(KernelKind::lambda_plus);
    const auto lm = kernel(KernelKind::lambda_minus);
    RotationSpec th;
    th.thermal_beta = 0.4;
    const auto p = make_perturbed_state(lp, lm, th);
    const double w = lp.omega(0, 0);
    const double n = 1.0 / std::expm1(0.4 * w);
    const double t = 0.9, s = 0.2;
    const cd expect = ((1.0 + n) * std::polar(1.0, w * (t - s)) + n * std::polar(1.0, -w * (t - s))) / (2.0 * w);
    EXPECT_NEAR(std::abs(p.plus_b.temporal(0, 0, t, s) - expect), 0.0, 1e-14);
    const auto G = kernel(KernelKind::causal);
    EXPECT_TRUE(verify_two_point(p.plus_b, p.minus_b, G).pass());
}

TEST(States, RotatedStateKeepsCommutatorAndIsSmoothDifference) {
    const auto lp = kernel(KernelKind::lambda_plus);
    const auto lm = kernel(KernelKind::lambda_minus);
    RotationSpec rot;
    rot.rotations = {{0, 0, 0.3}, {0, 2, -0.2}};
    const auto p = make_perturbed_state(lp, lm, rot);
    const auto r = verify_two_point(p.plus_b, p.minus_b, kernel(KernelKind::causal));
    EXPECT_TRUE(r.pass()) << r.commutator_defect;
    EXPECT_EQ(p.spec.describe(), "bogoliubov 0:0:0.3 0:2:-0.2");
}

TEST(States, ThermalDifferenceDecaysFast) {
    const auto s = kernel_model();
    RotationSpec th;
    th.thermal_beta = 5.0 / s->m_floor_sqrt();
    const auto p = make_perturbed_state(kernel(KernelKind::lambda_plus, kLongGrid),
                                        kernel(KernelKind::lambda_minus, kLongGrid), th);
    const auto d = kernel_decay_order(p.difference_plus(), s->m_floor_sqrt());
    EXPECT_TRUE(d.pass);
    EXPECT_GE(d.order, 6.0);
}

TEST(States, Preconditions) {
    const auto lp = kernel(KernelKind::lambda_plus);
    const auto lm = kernel(KernelKind::lambda_minus);
    RotationSpec both;
    both.thermal_beta = 1.0;
    both.rotations = {{0, 0, 0.1}};
    EXPECT_THROW(make_perturbed_state(lp, lm, both), PreconditionError);
    RotationSpec twice;
    twice.rotations = {{0, 1, 0.1}, {0, 1, 0.2}};
    EXPECT_THROW(make_perturbed_state(lp, lm, twice), PreconditionError);
    RotationSpec big;
    big.rotations = {{0, 1, 20.0}};
    EXPECT_THROW(make_perturbed_state(lp, lm, big), PreconditionError);
    EXPECT_THROW(make_perturbed_state(lm, lp, {}), PreconditionError);
}
