#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kgads/geometry.hpp"
#include "kgads/phase_point.hpp"

namespace kgads {

enum class EnergySign { plus, minus };
std::string to_string(EnergySign s);

/// Energy components are fixed by the sign of tau: plus = {tau > 0}.
EnergySign energy_sign_of(const PhasePointB& p);

struct ArcSample {
    double s = 0.0;
    PhasePointB p;
};

/// How a smooth arc ended: parameter budget spent, time limit reached,
/// conformal boundary x = 0 hit, or the artificial wall x = L hit.
enum class ArcEnd { parameter_limit, time_limit, boundary, wall };

struct Arc {
    std::vector<ArcSample> samples;
    ArcEnd end = ArcEnd::parameter_limit;
    double max_symbol_drift = 0.0;
};

struct ReflectionEvent {
    double s = 0.0;
    PhasePointB point;
    double xi_in = 0.0;
    double xi_out = 0.0;
    /// true for the wall at x = L (regularization, not boundary physics).
    bool artificial = false;
};

struct GBBPath {
    std::vector<Arc> segments;
    std::vector<ReflectionEvent> reflections;
    EnergySign energy_sign = EnergySign::plus;
    /// max |p~| / max(tau^2, xi^2, zeta^2) over all samples.
    double max_symbol_drift = 0.0;

    /// Condition (TF): t strictly increasing along the samples.
    bool t_monotone() const;
    /// x at time t by interpolation between samples (t inside the path).
    double x_at(double t) const;
    std::size_t sample_count() const;
};

struct FlowOptions {
    /// Allowed relative drift of the symbol along an arc.
    double tol_symbol = 1e-8;
    /// Bisection tolerance in the flow parameter for boundary contacts.
    double event_tol = 1e-12;
    /// |xi| below this multiple of the covector scale counts as glancing.
    double glancing_tol = 1e-9;
    int max_reflections = 100000;
};

/// Hamilton flow of the rescaled symbol,
///   t' = tau/beta, x' = xi, y' = zeta/k, xi' = (tau^2 (1/beta)' - zeta^2 (1/k)')/2,
/// with the field multiplied by sign(tau) so that t increases.
/// Integrated with the 4-stage Gauss-Legendre method (order 8, symplectic).
/// Stops after dt_param, or on reaching x = 0 / x = L (resolved by bisection).
Arc flow_segment(const MetricModel& m, const PhasePointB& p0, double dt_param, double step,
                 const FlowOptions& opts = {});

/// Specular reflection at x = 0: xi -> -xi with (t, y, tau, zeta) unchanged.
/// Throws PreconditionError away from the boundary or for an outgoing ray,
/// NumericalError for a glancing (xi = 0) ray.
PhasePointB reflect(const PhasePointB& p_in, double tol = 1e-9);

/// Flow segments joined by reflections at x = 0 and at the wall x = L until
/// t reaches t_max.
GBBPath trace_gbb(const MetricModel& m, const PhasePointB& p0, double t_max, double step,
                  const FlowOptions& opts = {});

/// CSV with columns s, t, x, y, xi_bar, xi, zeta, tau, segment_id, event.
void write_gbb_csv(std::ostream& out, const GBBPath& path);

}  // namespace kgads
