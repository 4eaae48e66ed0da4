#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "kgads/bchar.hpp"
#include "kgads/error.hpp"

using namespace kgads;

namespace {
const MetricModel& ads2() {
    static const MetricModel m = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    return m;
}
}  // namespace

TEST(FlowSegment, StraightNullLineTowardBoundary) {
    const Arc arc = flow_segment(ads2(), PhasePointB::make(0.5, 0.0, 1.0, -1.0), 0.3, 1e-2);
    ASSERT_GE(arc.samples.size(), 2u);
    for (const auto& s : arc.samples) {
        // closed form of the 45-degree line: x = 0.5 - t
        EXPECT_NEAR(s.p.x, 0.5 - s.p.t, 1e-12);
        EXPECT_NEAR(s.p.xi_bar, s.p.x * *s.p.xi, 1e-14);
    }
    EXPECT_LE(arc.max_symbol_drift, 1e-8);
}

TEST(FlowSegment, PositiveMomentumMovesInward) {
    const Arc arc = flow_segment(ads2(), PhasePointB::make(0.5, 0.0, 1.0, 1.0), 0.2, 1e-2);
    EXPECT_NEAR(arc.samples.back().p.x, 0.5 + arc.samples.back().p.t, 1e-12);
    EXPECT_GT(arc.samples.back().p.x, 0.5);
}

TEST(FlowSegment, TangentialRayStaysAtConstantX) {
    const auto m = make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0, 2.0 * M_PI);
    const Arc arc = flow_segment(m, PhasePointB::make(0.4, 0.0, 1.0, 0.0, 0.0, 1.0), 1.0, 1e-2);
    for (const auto& s : arc.samples) {
        EXPECT_NEAR(s.p.x, 0.4, 1e-14);
        EXPECT_NEAR(*s.p.xi, 0.0, 1e-14);
    }
    EXPECT_NEAR(*arc.samples.back().p.y, arc.samples.back().p.t, 1e-12);
}

TEST(FlowSegment, RejectsNonNullData) {
    EXPECT_THROW(flow_segment(ads2(), PhasePointB::make(0.5, 0.0, 1.0, 0.5), 0.1, 1e-2), PreconditionError);
    EXPECT_THROW(flow_segment(ads2(), PhasePointB::make(0.5, 0.0, 1.0, 1.0), 0.1, -1.0), PreconditionError);
}

TEST(Reflect, FlipsNormalMomentumOnly) {
    PhasePointB p;
    p.x = 0.0;
    p.t = 1.0;
    p.tau = 1.0;
    p.xi = -1.0;
    const auto q = reflect(p);
    EXPECT_DOUBLE_EQ(*q.xi, 1.0);
    EXPECT_DOUBLE_EQ(q.t, 1.0);
    EXPECT_DOUBLE_EQ(q.tau, 1.0);
    EXPECT_DOUBLE_EQ(q.xi_bar, 0.0);

    PhasePointB r = p;
    r.tau = std::sqrt(2.0);
    r.y = 0.3;
    r.zeta = 1.0;
    const auto s = reflect(r);
    EXPECT_DOUBLE_EQ(*s.xi, 1.0);
    EXPECT_DOUBLE_EQ(*s.zeta, 1.0);
    EXPECT_DOUBLE_EQ(*s.y, 0.3);
}

TEST(Reflect, Errors) {
    auto inner = PhasePointB::make(0.3, 0.0, 1.0, -1.0);
    EXPECT_THROW(reflect(inner), PreconditionError);
    PhasePointB glancing;
    glancing.x = 0.0;
    glancing.tau = 1.0;
    glancing.xi = 0.0;
    glancing.zeta = 1.0;
    EXPECT_THROW(reflect(glancing), NumericalError);
    PhasePointB outgoing;
    outgoing.x = 0.0;
    outgoing.tau = 1.0;
    outgoing.xi = 1.0;
    EXPECT_THROW(reflect(outgoing), PreconditionError);
}

class ReturnTime : public ::testing::TestWithParam<double> {};

TEST_P(ReturnTime, HitsBoundaryAtAAndReturnsAt2A) {
    const double a = GetParam();
    const GBBPath path = trace_gbb(ads2(), PhasePointB::make(a, 0.0, 1.0, -1.0), 2.5 * a, 1e-3);
    ASSERT_FALSE(path.reflections.empty());
    const auto& ev = path.reflections.front();
    EXPECT_FALSE(ev.artificial);
    EXPECT_NEAR(ev.point.t, a, 1e-10);
    EXPECT_NEAR(ev.xi_in, -1.0, 1e-12);
    EXPECT_NEAR(ev.xi_out, 1.0, 1e-12);
    EXPECT_NEAR(path.x_at(2.0 * a), a, 1e-10);
    EXPECT_TRUE(path.t_monotone());
    EXPECT_LE(path.max_symbol_drift, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Toy, ReturnTime, ::testing::Values(0.2, 0.5));

TEST(TraceGbb, WallReflectionIsTagged) {
    const GBBPath path = trace_gbb(ads2(), PhasePointB::make(0.5, 0.0, 1.0, 1.0), 0.8, 1e-3);
    ASSERT_FALSE(path.reflections.empty());
    EXPECT_TRUE(path.reflections.front().artificial);
    EXPECT_NEAR(path.reflections.front().point.t, 0.5, 1e-10);
}

TEST(TraceGbb, MinusEnergyStillRunsForwardInTime) {
    const GBBPath path = trace_gbb(ads2(), PhasePointB::make(0.5, 0.0, -1.0, 1.0), 1.2, 1e-3);
    EXPECT_EQ(path.energy_sign, EnergySign::minus);
    EXPECT_TRUE(path.t_monotone());
    ASSERT_FALSE(path.reflections.empty());
    EXPECT_NEAR(path.reflections.front().point.t, 0.5, 1e-10);
}

TEST(TraceGbb, TangentialRayNeverMeetsTheBoundary) {
    const auto m = make_toy_model(ModelKind::ads3_cylinder, 1.0, 1.0, 2.0 * M_PI);
    const GBBPath path = trace_gbb(m, PhasePointB::make(0.4, 0.0, 1.0, 0.0, 0.0, 1.0), 1.0, 1e-2);
    EXPECT_TRUE(path.reflections.empty());
    EXPECT_NEAR(path.x_at(0.9), 0.4, 1e-12);
}

TEST(TraceGbb, CsvColumns) {
    const GBBPath path = trace_gbb(ads2(), PhasePointB::make(0.3, 0.0, 1.0, -1.0), 0.7, 1e-2);
    std::ostringstream out;
    write_gbb_csv(out, path);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\r')), "s,t,x,y,xi_bar,xi,zeta,tau,segment_id,event");
    EXPECT_NE(text.find("boundary"), std::string::npos);
}

TEST(TraceGbb, WarpedMetricKeepsSymbolNull) {
    const auto m = make_custom_model(2, 1.0, 1.0, std::nullopt,
                                     CoefficientFunction::from_closure([](double x) { return 1.0 + 0.5 * x * x; }),
                                     CoefficientFunction::constant(1.0));
    const double a = 0.4;
    const GBBPath path = trace_gbb(m, PhasePointB::make(a, 0.0, std::sqrt(m.beta()(a)), -1.0), 2.0, 1e-3);
    EXPECT_LE(path.max_symbol_drift, 1e-8);
    EXPECT_TRUE(path.t_monotone());
    ASSERT_FALSE(path.reflections.empty());
    // static metric: the return leg retraces the incoming one
    const double th = path.reflections.front().point.t;
    EXPECT_NEAR(path.x_at(2.0 * th), a, 1e-8);
}
