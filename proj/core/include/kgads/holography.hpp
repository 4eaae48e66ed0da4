#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgads/geometry.hpp"
#include "kgads/propagators.hpp"

namespace kgads {

/// c_alpha = (alpha - nu_-)(nu_+ - alpha), the coefficient in
/// P x^alpha w = c_alpha x^alpha w + O(x^{alpha+1}).
double indicial_polynomial(const MetricModel& m, double alpha);
double indicial_polynomial(int n, double nu, double alpha);

/// One boundary harmonic exp(-i omega t) exp(2 pi i m y / ell) with a complex
/// amplitude. Boundary data for the series are finite sums of these, on which
/// the time and transverse derivatives act diagonally.
struct BoundaryHarmonic {
    double omega = 0.0;
    int m = 0;
    std::complex<double> amplitude = 1.0;
};

struct SeriesOptions {
    /// Leading exponent; defaults to nu_+.
    std::optional<double> alpha;
    /// Residual fit window; zero picks [0.02, 0.2] times the natural length scale.
    double fit_lo = 0.0;
    double fit_hi = 0.0;
    int fit_points = 24;
};

/// u_K = x^alpha sum_{j <= K} x^j w_j per harmonic, from the recursion
///   c_{alpha+j} w_j = -sum_i E_i (alpha + j - i) w_{j-i} - sum_i b_i w_{j-2-i},
/// where E = -x d_x log sqrt(beta k) and b = -omega^2/beta + mu^2/k.
struct IndicialSeries {
    double alpha = 0.0;
    int K = 0;
    std::vector<BoundaryHarmonic> harmonics;
    /// coeffs[h][j] = w_j for harmonic h
    std::vector<std::vector<std::complex<double>>> coeffs;
    /// Fitted log-log slope of max_h |P u_K| over the fit window; +inf when the
    /// residual vanishes identically.
    double residual_slope = std::numeric_limits<double>::infinity();
    double fit_r2 = 1.0;
    double fit_lo = 0.0;
    double fit_hi = 0.0;

    std::complex<double> evaluate(std::size_t h, double x) const;
};

IndicialSeries build_series(const MetricModel& m, const std::vector<BoundaryHarmonic>& w0, int K,
                            const SeriesOptions& opts = {});

/// P u_K at x for harmonic h, evaluated with the model's coefficient
/// functions and exact monomial derivatives.
std::complex<double> series_residual(const MetricModel& m, const IndicialSeries& s, std::size_t h, double x);

struct BoundaryFitOptions {
    /// (x_lo, x_hi); zero picks (0.001 L, 0.02 L).
    double x_lo = 0.0;
    double x_hi = 0.0;
    /// Relative size of the x^{nu_-} branch at x_lo that triggers a warning / an error.
    double contamination_warn = 1e-4;
    double contamination_error = 1e-1;
    int min_nodes = 8;
};

struct BoundaryFit {
    std::complex<double> value;
    std::complex<double> slope;
    std::complex<double> curvature;
    /// RMS misfit of x^{-alpha} u against the polynomial, relative to |value|.
    double misfit = 0.0;
    double contamination = 0.0;
    bool contaminated = false;
    double alpha = 0.0;
    int nodes = 0;
    std::string warning;
};

/// Least-squares fit of x^{-alpha} u against 1 + a x + b x^2 on the window
/// (alpha = nu_+ in physical weighting, nu + 1/2 in tilde weighting).
BoundaryFit extract_boundary(const Eigen::VectorXcd& u, const Eigen::VectorXd& x, const MetricModel& m,
                             Weighting weighting, const BoundaryFitOptions& opts = {});

/// Boundary two-point kernel k(t, s) = sum_k cL_k cR_k a_k(t, s) per sector,
/// built from a physical-weighting kernel by fitting both space slots.
class BoundaryKernel {
public:
    struct Line {
        int m = 0;
        int mode = 0;
        double omega = 0.0;
        std::complex<double> c_left;
        std::complex<double> c_right;
        std::vector<ModeTerm> terms;
    };

    BoundaryKernel(TimeGrid grid, KernelKind kind, std::vector<Line> lines);

    const TimeGrid& grid() const { return grid_; }
    KernelKind kind() const { return kind_; }
    const std::vector<Line>& lines() const { return lines_; }
    std::vector<int> sectors() const;

    std::complex<double> value(int m, double t, double s) const;
    Eigen::MatrixXcd time_matrix(int m) const;

    struct SpectralLine {
        int m;
        double omega;
        double weight;
    };
    /// Weights of exp(+-i omega (t - s)) per mode: |cL cR amplitude|.
    std::vector<SpectralLine> spectral_lines() const;

private:
    TimeGrid grid_;
    KernelKind kind_;
    std::vector<Line> lines_;
};

BoundaryKernel boundary_two_point(const BiKernel& k, const BoundaryFitOptions& fit = {});

struct BoundaryKernelReport {
    double hermiticity_defect = 0.0;
    double gram_min = 0.0;
    double gram_norm = 0.0;
    FrequencyReport frequency;
    bool pass_psd = false;
    bool pass_hermitian = false;
};

/// Hermiticity, PSD of the time Gram matrix per sector, one-sided spectrum.
BoundaryKernelReport verify_boundary_kernel(const BoundaryKernel& k, double m_floor_sqrt,
                                            const FrequencyTestOptions& freq = {});

struct ExponentProbe {
    double alpha_hat = 0.0;
    double r2 = 0.0;
    bool reliable = false;
    int points = 0;
};

/// Leading exponent by log-log regression of |u| on [x_lo, x_hi] with
/// log-uniform weights. Zero limits pick [x_2, L/20].
ExponentProbe mellin_exponent_probe(const Eigen::VectorXd& u, const Eigen::VectorXd& x, const MetricModel& m,
                                    double x_lo = 0.0, double x_hi = 0.0, double r2_threshold = 0.999);

}  // namespace kgads
