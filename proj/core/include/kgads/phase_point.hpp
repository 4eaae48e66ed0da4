#pragma once

#include <optional>

namespace kgads {

/// Point of the b-cotangent bundle in coordinates (x, y, xi_bar = x xi, zeta, tau),
/// together with the time coordinate t and, away from the boundary, the
/// uncompressed normal momentum xi.
struct PhasePointB {
    double x = 0.0;
    double t = 0.0;
    std::optional<double> y;
    double xi_bar = 0.0;
    std::optional<double> xi;
    std::optional<double> zeta;
    double tau = 0.0;

    static PhasePointB make(double x, double t, double tau, double xi,
                            std::optional<double> y = std::nullopt,
                            std::optional<double> zeta = std::nullopt) {
        PhasePointB p;
        p.x = x;
        p.t = t;
        p.tau = tau;
        p.xi = xi;
        p.xi_bar = x * xi;
        p.y = y;
        p.zeta = zeta;
        return p;
    }

    double zeta_or_zero() const { return zeta.value_or(0.0); }

    /// Compression invariants: xi_bar = x xi for x > 0, xi_bar = 0 at x = 0,
    /// and a nonzero covector.
    bool invariants_hold(double tol = 0.0) const {
        if (x < 0.0) return false;
        if (x == 0.0 && xi_bar != 0.0) return false;
        if (x > 0.0 && xi) {
            const double d = xi_bar - x * *xi;
            if (d > tol || d < -tol) return false;
        }
        const double z = zeta_or_zero();
        return tau != 0.0 || xi.value_or(0.0) != 0.0 || z != 0.0;
    }
};

}  // namespace kgads
