#pragma once

#include <array>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kgads/bchar.hpp"
#include "kgads/propagators.hpp"
#include "kgads/spectral.hpp"

namespace kgads {

// ---------------------------------------------------------------------------
// wavepackets

struct WavepacketOptions {
    /// Transverse sector (zeta_0 = 2 pi m / ell); 0 for the strip.
    int m = 0;
    /// Largest admissible fraction of the packet's L^2 norm outside the retained modes.
    double max_tail = 1e-6;
    /// Skip the |xi_0| sigma >= 4 check (zero-momentum and other non-oscillatory packets).
    bool allow_low_momentum = false;
};

/// exp(-(x - x0)^2 / (4 sigma^2) + i xi0 x) in tilde weighting, projected on the
/// eigenbasis of sector m and normalized in L^2(Sigma). Its position variance
/// is sigma^2 and its momentum variance 1/(4 sigma^2).
struct Wavepacket {
    double x0 = 0.0;
    double xi0 = 0.0;
    double sigma = 0.0;
    EnergySign sign = EnergySign::plus;
    int m = 0;
    double zeta0 = 0.0;
    /// Coefficients <phi_k, f> / ||f|| over the n_modes of sector m.
    Eigen::VectorXcd coeffs;
    /// 1 - sum |c_k|^2 before normalization.
    double tail = 0.0;
};

Wavepacket make_wavepacket(const SpectralModel& s, double x0, double xi0, double sigma, EnergySign sign,
                           const WavepacketOptions& opts = {});

/// Nodal values of the packet (sum of retained modes).
Eigen::VectorXcd wavepacket_values(const SpectralModel& s, const Wavepacket& w);

struct PacketMoments {
    double mean_x = 0.0;
    double var_x = 0.0;
    double mean_xi = 0.0;
    double var_xi = 0.0;
};

/// Position moments of |u|^2 and momentum moments through
/// <xi> = Im <u, u'>, <xi^2> = ||u'||^2 (both over ||u||^2).
PacketMoments wavepacket_moments(const SpectralModel& s, const Wavepacket& w);

struct TrackOptions {
    /// Require that the reference GBB meets x = 0 before t_max.
    bool require_reflection = true;
    /// Stop once the spread exceeds this fraction of L (reported as partial).
    double max_spread_fraction = 0.25;
    /// Step of the reference ray integration.
    double gbb_step = 1e-3;
};

struct TrackPoint {
    double t = 0.0;
    double centroid = 0.0;
    double spread = 0.0;
    /// x of the reference GBB at time t (NaN without a transport direction).
    double gbb_x = std::numeric_limits<double>::quiet_NaN();
    double deviation = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    std::vector<TrackPoint> points;
    GBBPath gbb;
    bool has_gbb = false;
    /// Stopped early because the packet dispersed.
    bool partial = false;
    /// max over t of deviation - max(sigma, spread); <= 0 means agreement.
    double max_excess = -std::numeric_limits<double>::infinity();
    /// Time of the centroid minimum and first return of the centroid to x0 after it.
    double turnaround_time = std::numeric_limits<double>::quiet_NaN();
    double return_time = std::numeric_limits<double>::quiet_NaN();
    int boundary_reflections = 0;

    bool agrees() const { return has_gbb && max_excess <= 0.0; }
};

/// u(t) = sum_k c_k exp(-+ i omega_k t) phi_k (upper sign for plus packets),
/// tracked through the centroid and spread of |d_t u|^2 + |d_x u|^2 and
/// compared with the null GBB launched from (x0, xi0).
Trajectory evolve_and_track(const SpectralModel& s, const Wavepacket& w, double t_max, double dt,
                            const TrackOptions& opts = {});

/// CSV columns t, centroid, spread, gbb_x, deviation.
void write_trajectory_csv(std::ostream& out, const Trajectory& tr);

// ---------------------------------------------------------------------------
// quadrant scans

/// Frequency-sign quadrant of a window pair. The second slot is read with the
/// conjugated exponent (the primed pairing), so exp(i w (t - s)) lands in (+, +).
enum class Quadrant { pp, pm, mp, mm };
std::string to_string(Quadrant q);

struct ScanOptions {
    /// Window length T_w in each time slot.
    double window = 0.0;
    /// Spacing of window centres; 0 uses T_w / 2.
    double step = 0.0;
    double kaiser_beta = 12.0;
    /// Only bins with |lambda_1|, |lambda_2| >= omega_lo count; 0 uses 1.5 sqrt(m2_floor).
    double omega_lo = 0.0;
    /// Windows with |t - s| < exclude_halfwidth are reported but not judged; negative uses T_w.
    double exclude_halfwidth = -1.0;
    double tolerance = 1e-6;
    /// Allowed quadrants on {t > s} and {t < s}; empty infers them from the kernel kind.
    std::vector<Quadrant> allowed_future;
    std::vector<Quadrant> allowed_past;
};

struct ScanWindow {
    double t = 0.0;
    double s = 0.0;
    /// Band-limited spectral mass per quadrant, in the order pp, pm, mp, mm.
    std::array<double, 4> mass{};
    double off_pattern_fraction = 0.0;
    bool excluded = false;

    double content_plus() const { return mass[0]; }
    double content_minus() const { return mass[3]; }
};

struct ScanReport {
    std::vector<ScanWindow> windows;
    double max_off_pattern = 0.0;
    double omega_lo = 0.0;
    double window = 0.0;
    bool pass = false;
};

/// 2-D Kaiser-windowed DFT of the energy-flat scalar reduction of k over a
/// lattice of (t, s) window pairs.
ScanReport kernel_wavefront_scan(const BiKernel& k, double m_floor_sqrt, const ScanOptions& opts);

void write_scan_csv(std::ostream& out, const ScanReport& r);

// ---------------------------------------------------------------------------
// second states

/// Bogoliubov data per mode: n = sinh^2 r multiplies the reversed-frequency
/// term and c = cosh r sinh r the exp(+-i w (t + s)) cross terms.
struct ModeRotation {
    int m = 0;
    int mode = 0;
    double r = 0.0;
};

struct RotationSpec {
    std::vector<ModeRotation> rotations;
    /// Thermal state at inverse temperature beta_T: n_k = 1/(exp(beta_T w_k) - 1), no cross terms.
    std::optional<double> thermal_beta;

    std::string describe() const;
};

struct StatePair {
    BiKernel plus_a;
    BiKernel minus_a;
    BiKernel plus_b;
    BiKernel minus_b;
    RotationSpec spec;

    /// Lambda^pm_B - Lambda^pm_A.
    BiKernel difference_plus() const;
    BiKernel difference_minus() const;
};

StatePair make_perturbed_state(const BiKernel& lambda_plus, const BiKernel& lambda_minus, const RotationSpec& spec);

struct DecayOptions {
    /// Lower end of the resolved band; 0 uses 1.5 sqrt(m2_floor).
    double omega_lo = 0.0;
    double kaiser_beta = 30.0;
    /// Lines below floor * (largest line) are treated as unresolved.
    double floor = 1e-10;
    double min_order = 6.0;
};

struct DecayReport {
    /// -slope of log |F(omega_k)| against log omega_k; +inf when at most one resolved line.
    double order = std::numeric_limits<double>::infinity();
    int points = 0;
    std::vector<std::pair<double, double>> lines;
    bool pass = false;
};

/// Kaiser-windowed Fourier coefficients of f(t + tau, t) in tau at the given
/// frequencies (both signs), fitted for a power-law decay order.
DecayReport temporal_decay_order(const std::function<std::complex<double>(double, double)>& f,
                                 const TimeGrid& grid, const std::vector<double>& frequencies,
                                 double m_floor_sqrt, const DecayOptions& opts = {});

/// Same proxy on the energy-flat reduction of a kernel, probed at its mode frequencies.
DecayReport kernel_decay_order(const BiKernel& k, double m_floor_sqrt, const DecayOptions& opts = {});

}  // namespace kgads
