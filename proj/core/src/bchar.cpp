#include "kgads/bchar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "kgads/csv.hpp"
#include "kgads/error.hpp"

namespace kgads {

std::string to_string(EnergySign s) { return s == EnergySign::plus ? "plus" : "minus"; }

EnergySign energy_sign_of(const PhasePointB& p) {
    require(p.tau != 0.0, "energy sign undefined for tau = 0");
    return p.tau > 0.0 ? EnergySign::plus : EnergySign::minus;
}

namespace {

// State (t, x, y, xi); tau and zeta are constants of motion.
using State = std::array<double, 4>;

struct GaussLegendre4 {
    std::array<double, 4> c{};
    std::array<double, 4> b{};
    std::array<std::array<double, 4>, 4> a{};

    GaussLegendre4() {
        // nodes: roots of P_4 mapped to [0, 1]
        for (int i = 0; i < 4; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / 4.5);
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 1; k < 4; ++k) {
                    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                const double d = 4.0 * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / d;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            c[3 - i] = 0.5 * (1.0 + x);
        }
        std::sort(c.begin(), c.end());
        // integrals of the Lagrange basis through monomial coefficients
        Eigen::Matrix4d V;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) V(i, k) = std::pow(c[i], k);
        const Eigen::Matrix4d coef = V.inverse();  // column j: monomial coefficients of l_j
        for (int j = 0; j < 4; ++j) {
            double bj = 0.0;
            for (int k = 0; k < 4; ++k) bj += coef(k, j) / (k + 1.0);
            b[j] = bj;
            for (int i = 0; i < 4; ++i) {
                double aij = 0.0;
                for (int k = 0; k < 4; ++k) aij += coef(k, j) * std::pow(c[i], k + 1) / (k + 1.0);
                a[i][j] = aij;
            }
        }
    }
};

const GaussLegendre4& gl4() {
    static const GaussLegendre4 rule;
    return rule;
}

struct Field {
    const MetricModel& m;
    double tau;
    double zeta;
    double orient;

    State operator()(const State& s) const {
        const double x = s[1];
        const double beta = m.beta()(x);
        const double k = m.k_metric()(x);
        const double dinv_beta = -m.beta().derivative(x) / (beta * beta);
        const double dinv_k = -m.k_metric().derivative(x) / (k * k);
        return {orient * tau / beta, orient * s[3], orient * zeta / k,
                orient * 0.5 * (tau * tau * dinv_beta - zeta * zeta * dinv_k)};
    }
};

State gl_step(const Field& f, const State& y, double h) {
    const auto& r = gl4();
    std::array<State, 4> K;
    const State f0 = f(y);
    K.fill(f0);
    for (int it = 0; it < 100; ++it) {
        double change = 0.0;
        std::array<State, 4> Kn;
        for (int i = 0; i < 4; ++i) {
            State yi = y;
            for (int j = 0; j < 4; ++j)
                for (int d = 0; d < 4; ++d) yi[d] += h * r.a[i][j] * K[j][d];
            Kn[i] = f(yi);
            for (int d = 0; d < 4; ++d) change = std::max(change, std::abs(Kn[i][d] - K[i][d]));
        }
        K = Kn;
        double scale = 1.0;
        for (int d = 0; d < 4; ++d) scale = std::max(scale, std::abs(f0[d]));
        if (change <= 1e-15 * scale) break;
    }
    State out = y;
    for (int j = 0; j < 4; ++j)
        for (int d = 0; d < 4; ++d) out[d] += h * r.b[j] * K[j][d];
    return out;
}

double covector_scale(const PhasePointB& p) {
    const double xi = p.xi.value_or(0.0);
    return std::max({p.tau * p.tau, xi * xi, p.zeta_or_zero() * p.zeta_or_zero()});
}

PhasePointB to_point(const State& s, const PhasePointB& ref) {
    PhasePointB p = ref;
    p.t = s[0];
    p.x = s[1];
    if (ref.y) p.y = s[2];
    p.xi = s[3];
    p.xi_bar = s[1] * s[3];
    return p;
}

double symbol_at(const MetricModel& m, const PhasePointB& p) {
    const double x = p.x;
    const double xi = p.xi.value_or(0.0);
    const double z = p.zeta_or_zero();
    return p.tau * p.tau / m.beta()(x) - xi * xi - z * z / m.k_metric()(x);
}

enum class Stop { none, parameter, time, boundary, wall };

// Integrates from p0 (x in [0, L]) until the parameter budget, t_max, or a
// boundary contact. The arc's last sample sits exactly on the stopping set.
Arc integrate(const MetricModel& m, const PhasePointB& p0, double s0, double budget, double t_max,
              double step, const FlowOptions& opts) {
    require(step > 0.0, "flow step must be positive");
    require(p0.xi.has_value(), "flow needs the uncompressed xi");
    const double scale = covector_scale(p0);
    require(scale > 0.0, "flow needs a nonzero covector");
    const double sym0 = symbol_at(m, p0);
    require(std::abs(sym0) <= 1e-10 * scale, "initial data is not null (conformal symbol != 0)");
    const Field f{m, p0.tau, p0.zeta_or_zero(), p0.tau >= 0.0 ? 1.0 : -1.0};
    const double L = m.L();

    Arc arc;
    State y{p0.t, p0.x, p0.y.value_or(0.0), *p0.xi};
    double s = 0.0;
    arc.samples.push_back({s0, to_point(y, p0)});

    auto stop_of = [&](const State& st, double sp) {
        if (sp >= budget) return Stop::parameter;
        if (st[0] >= t_max) return Stop::time;
        if (st[1] <= 0.0) return Stop::boundary;
        if (st[1] >= L) return Stop::wall;
        return Stop::none;
    };
    // a sign test that is only true strictly after the crossing
    auto crossed = [&](const State& st, double sp, Stop which) {
        switch (which) {
            case Stop::parameter: return sp >= budget;
            case Stop::time: return st[0] >= t_max;
            case Stop::boundary: return st[1] <= 0.0;
            case Stop::wall: return st[1] >= L;
            default: return false;
        }
    };

    const long max_steps = 100000000L;
    for (long n = 0; n < max_steps; ++n) {
        double h = step;
        if (s + h > budget) h = budget - s;
        State next = gl_step(f, y, h);
        Stop which = stop_of(next, s + h);
        if (which == Stop::none) {
            y = next;
            s += h;
            const PhasePointB p = to_point(y, p0);
            arc.max_symbol_drift = std::max(arc.max_symbol_drift, std::abs(symbol_at(m, p)) / scale);
            arc.samples.push_back({s0 + s, p});
            if (arc.max_symbol_drift > opts.tol_symbol)
                throw NumericalError("flow step rejected: symbol drift " + std::to_string(arc.max_symbol_drift) +
                                     " exceeds tolerance; reduce the step");
            continue;
        }
        // resolve the stopping point by bisection in the flow parameter; the
        // earliest of simultaneous crossings wins
        double lo = h;
        which = crossed(next, s + h, Stop::parameter) ? Stop::parameter : Stop::none;
        for (Stop cand : {Stop::time, Stop::boundary, Stop::wall}) {
            if (!crossed(next, s + h, cand)) continue;
            double a = 0.0, b = h;
            while (b - a > opts.event_tol) {
                const double mid = 0.5 * (a + b);
                if (crossed(gl_step(f, y, mid), s + mid, cand))
                    b = mid;
                else
                    a = mid;
            }
            if (which == Stop::none || b < lo) {
                lo = b;
                which = cand;
            }
        }
        State end = gl_step(f, y, lo);
        s += lo;
        if (which == Stop::boundary) end[1] = 0.0;
        if (which == Stop::wall) end[1] = L;
        if (which == Stop::time) end[0] = t_max;
        PhasePointB p = to_point(end, p0);
        arc.max_symbol_drift = std::max(arc.max_symbol_drift, std::abs(symbol_at(m, p)) / scale);
        arc.samples.push_back({s0 + s, p});
        arc.end = which == Stop::parameter ? ArcEnd::parameter_limit
                  : which == Stop::time    ? ArcEnd::time_limit
                  : which == Stop::boundary ? ArcEnd::boundary
                                           : ArcEnd::wall;
        if (arc.max_symbol_drift > opts.tol_symbol)
            throw NumericalError("flow step rejected: symbol drift exceeds tolerance; reduce the step");
        return arc;
    }
    throw NumericalError("flow did not terminate");
}

}  // namespace

Arc flow_segment(const MetricModel& m, const PhasePointB& p0, double dt_param, double step,
                 const FlowOptions& opts) {
    require(p0.x > 0.0 && p0.x < m.L(), "flow_segment: start point must satisfy 0 < x < L");
    require(dt_param > 0.0, "flow_segment: parameter span must be positive");
    return integrate(m, p0, 0.0, dt_param, std::numeric_limits<double>::infinity(), step, opts);
}

PhasePointB reflect(const PhasePointB& p_in, double tol) {
    require(std::abs(p_in.x) <= tol, "reflect: not at boundary (x = " + std::to_string(p_in.x) + ")");
    require(p_in.xi.has_value(), "reflect: incoming uncompressed xi required");
    const double xi = *p_in.xi;
    const double orient = p_in.tau >= 0.0 ? 1.0 : -1.0;
    const double scale = std::sqrt(covector_scale(p_in));
    if (std::abs(xi) <= 1e-9 * scale)
        throw NumericalError("glancing ray at the boundary (xi = 0); glancing reflection is not supported");
    require(orient * xi < 0.0, "reflect: ray is not incoming (x must be decreasing along the flow)");
    PhasePointB out = p_in;
    out.x = 0.0;
    out.xi = -xi;
    out.xi_bar = 0.0;
    return out;
}

GBBPath trace_gbb(const MetricModel& m, const PhasePointB& p0, double t_max, double step,
                  const FlowOptions& opts) {
    require(p0.x > 0.0 && p0.x < m.L(), "trace_gbb: start point must satisfy 0 < x < L");
    require(t_max > p0.t, "trace_gbb: t_max must exceed the start time");
    GBBPath path;
    path.energy_sign = energy_sign_of(p0);
    PhasePointB p = p0;
    double s = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= opts.max_reflections; ++r) {
        Arc arc = integrate(m, p, s, inf, t_max, step, opts);
        path.max_symbol_drift = std::max(path.max_symbol_drift, arc.max_symbol_drift);
        const ArcSample last = arc.samples.back();
        const ArcEnd end = arc.end;
        path.segments.push_back(std::move(arc));
        if (end == ArcEnd::time_limit) return path;
        const double scale = std::sqrt(covector_scale(last.p));
        if (std::abs(last.p.xi.value_or(0.0)) <= opts.glancing_tol * scale)
            throw NumericalError("glancing event at t = " + std::to_string(last.p.t) + "; trace aborted");
        ReflectionEvent ev;
        ev.s = last.s;
        ev.xi_in = *last.p.xi;
        if (end == ArcEnd::boundary) {
            p = reflect(last.p);
        } else {
            p = last.p;
            p.x = m.L();
            p.xi = -*last.p.xi;
            p.xi_bar = p.x * *p.xi;
            ev.artificial = true;
        }
        ev.xi_out = *p.xi;
        ev.point = p;
        path.reflections.push_back(ev);
        s = last.s;
    }
    throw NumericalError("trace_gbb: reflection limit exceeded");
}

bool GBBPath::t_monotone() const {
    double prev = -std::numeric_limits<double>::infinity();
    bool first = true;
    for (const auto& seg : segments)
        for (std::size_t i = 0; i < seg.samples.size(); ++i) {
            const double t = seg.samples[i].p.t;
            // segment starts repeat the previous segment's end point
            if (!first && i == 0) {
                if (t != prev) return false;
                continue;
            }
            if (!first && !(t > prev)) return false;
            prev = t;
            first = false;
        }
    return true;
}

double GBBPath::x_at(double t) const {
    require(!segments.empty(), "empty path");
    const ArcSample* prev = nullptr;
    for (const auto& seg : segments)
        for (const auto& smp : seg.samples) {
            if (prev && smp.p.t >= t && prev->p.t <= t) {
                const double dt = smp.p.t - prev->p.t;
                if (dt <= 0.0) return smp.p.x;
                const double w = (t - prev->p.t) / dt;
                return (1.0 - w) * prev->p.x + w * smp.p.x;
            }
            prev = &smp;
        }
    const auto& first = segments.front().samples.front();
    if (t <= first.p.t) return first.p.x;
    return segments.back().samples.back().p.x;
}

std::size_t GBBPath::sample_count() const {
    std::size_t n = 0;
    for (const auto& seg : segments) n += seg.samples.size();
    return n;
}

void write_gbb_csv(std::ostream& out, const GBBPath& path) {
    csv::Writer w(out);
    w.header({"s", "t", "x", "y", "xi_bar", "xi", "zeta", "tau", "segment_id", "event"});
    for (std::size_t sid = 0; sid < path.segments.size(); ++sid) {
        const auto& seg = path.segments[sid];
        for (std::size_t i = 0; i < seg.samples.size(); ++i) {
            const auto& smp = seg.samples[i];
            std::string event;
            if (sid == 0 && i == 0) event = "start";
            if (i + 1 == seg.samples.size()) {
                switch (seg.end) {
                    case ArcEnd::boundary: event = "boundary"; break;
                    case ArcEnd::wall: event = "wall_artificial"; break;
                    case ArcEnd::time_limit: event = "end"; break;
                    case ArcEnd::parameter_limit: event = "end"; break;
                }
            }
            w.field(smp.s).field(smp.p.t).field(smp.p.x);
            if (smp.p.y)
                w.field(*smp.p.y);
            else
                w.field(std::string_view{});
            w.field(smp.p.xi_bar).field(smp.p.xi.value_or(0.0));
            if (smp.p.zeta)
                w.field(*smp.p.zeta);
            else
                w.field(std::string_view{});
            w.field(smp.p.tau).field(static_cast<long long>(sid)).field(event);
            w.end_row();
        }
    }
}

}  // namespace kgads
