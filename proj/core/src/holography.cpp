#include "kgads/holography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "kgads/error.hpp"
#include "kgads/parallel.hpp"

namespace kgads {

using cd = std::complex<double>;

double indicial_polynomial(int n, double nu, double alpha) {
    const auto r = indicial_roots(n, nu);
    return (alpha - r.nu_minus) * (r.nu_plus - alpha);
}

double indicial_polynomial(const MetricModel& m, double alpha) { return indicial_polynomial(m.n(), m.nu(), alpha); }

// ---------------------------------------------------------------------------
// indicial series

namespace {

double transverse_mu(const MetricModel& m, int mode) {
    if (mode == 0) return 0.0;
    require(m.has_transverse(), "transverse harmonic given for a model without a transverse circle");
    return 2.0 * std::numbers::pi * mode / *m.ell();
}

// E(x) = -x d/dx log sqrt(beta k)
double e_coefficient(const MetricModel& m, double x) {
    const double b = m.beta()(x), k = m.k_metric()(x);
    return -0.5 * x * (m.beta().derivative(x) / b + m.k_metric().derivative(x) / k);
}

double b_coefficient(const MetricModel& m, double x, double omega, double mu) {
    return -omega * omega / m.beta()(x) + mu * mu / m.k_metric()(x);
}

std::vector<double> taylor_of(const std::function<double(double)>& f, int order, double radius) {
    const int fit_order = order + 10;
    auto c = CoefficientFunction::from_closure(f, [](double) { return 0.0; }).taylor(fit_order, radius);
    c.resize(static_cast<std::size_t>(order) + 1);
    return c;
}

struct Fit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

Fit weighted_line(const std::vector<double>& X, const std::vector<double>& Y, const std::vector<double>& W) {
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sw += W[i];
        sx += W[i] * X[i];
        sy += W[i] * Y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += W[i] * (X[i] - mx) * (X[i] - mx);
        sxy += W[i] * (X[i] - mx) * (Y[i] - my);
        syy += W[i] * (Y[i] - my) * (Y[i] - my);
    }
    Fit f;
    require(sxx > 0.0, "degenerate fit: abscissae coincide");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

cd IndicialSeries::evaluate(std::size_t h, double x) const {
    cd acc = 0.0;
    double p = 1.0;
    for (const auto& w : coeffs[h]) {
        acc += w * p;
        p *= x;
    }
    return std::pow(x, alpha) * acc;
}

IndicialSeries build_series(const MetricModel& m, const std::vector<BoundaryHarmonic>& w0, int K,
                            const SeriesOptions& opts) {
    require(K >= 0, "build_series: order K must be >= 0");
    require(!w0.empty(), "build_series: boundary data must list at least one harmonic");
    IndicialSeries s;
    s.alpha = opts.alpha.value_or(indicial_roots(m).nu_plus);
    s.K = K;
    s.harmonics = w0;
    const double c0 = indicial_polynomial(m, s.alpha);
    require(std::abs(c0) <= 1e-12 * std::max(1.0, m.nu() * m.nu()),
            "build_series: alpha is not an indicial root");
    const double cscale = std::max(1.0, m.nu() * m.nu());
    for (int j = 1; j <= K; ++j) {
        if (std::abs(indicial_polynomial(m, s.alpha + j)) <= 1e-12 * cscale)
            throw PreconditionError("build_series: resonant order " + std::to_string(j) +
                                    " (c_{alpha+j} = 0, log terms would be needed)");
    }

    double wmax = 1.0;
    for (const auto& h : w0) wmax = std::max({wmax, std::abs(h.omega), transverse_mu(m, h.m)});
    const double scale_len = std::min(m.L(), 1.0 / wmax);
    const bool constant = m.beta().is_constant() && m.k_metric().is_constant();
    const double radius = std::min(m.L(), 0.25);
    // Taylor data reaches four orders past K so the leading residual terms are known
    const int order = K + 4;
    const std::vector<double> E = constant ? std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0)
                                           : taylor_of([&m](double x) { return e_coefficient(m, x); }, order, radius);
    std::vector<double> rho(static_cast<std::size_t>(order) + 1, 0.0);

    for (const auto& h : w0) {
        const double mu = transverse_mu(m, h.m);
        std::vector<double> b;
        if (constant) {
            b.assign(static_cast<std::size_t>(order) + 1, 0.0);
            b[0] = b_coefficient(m, 0.0, h.omega, mu);
        } else {
            b = taylor_of([&](double x) { return b_coefficient(m, x, h.omega, mu); }, order, radius);
        }
        std::vector<cd> w(static_cast<std::size_t>(K) + 1, 0.0);
        w[0] = h.amplitude;
        for (int j = 1; j <= K; ++j) {
            cd rhs = 0.0;
            for (int i = 1; i <= j; ++i) rhs += E[i] * (s.alpha + j - i) * w[j - i];
            for (int i = 0; i <= j - 2; ++i) rhs += b[i] * w[j - 2 - i];
            w[j] = -rhs / indicial_polynomial(m, s.alpha + j);
        }
        // P u_K = sum_{j > K} rho_j x^{alpha + j}
        for (int j = K + 1; j <= order; ++j) {
            cd r = 0.0;
            for (int i = 1; i <= j; ++i)
                if (j - i <= K) r += E[i] * (s.alpha + j - i) * w[j - i];
            for (int i = 0; i <= j - 2; ++i)
                if (j - 2 - i <= K) r += b[i] * w[j - 2 - i];
            rho[j] = std::max(rho[j], std::abs(r));
        }
        s.coeffs.push_back(std::move(w));
    }

    // Default window: where the leading residual term dominates the next one,
    // kept above the roundoff floor of the cancellation in P u_K.
    double hi = 0.2 * scale_len;
    int lead = -1;
    for (int j = K + 1; j <= order; ++j) {
        if (rho[j] == 0.0) continue;
        if (lead < 0) {
            lead = j;
            continue;
        }
        hi = std::min(hi, 0.05 * std::pow(rho[lead] / rho[j], 1.0 / (j - lead)));
        break;
    }
    double lo = 0.1 * hi;
    if (lead > 0) {
        const double floor_x = std::pow(1e-12, 1.0 / lead);
        if (lo < floor_x) {
            lo = floor_x;
            hi = std::max(hi, 10.0 * floor_x);
        }
    }
    s.fit_lo = opts.fit_lo > 0.0 ? opts.fit_lo : lo;
    s.fit_hi = opts.fit_hi > 0.0 ? opts.fit_hi : std::min(hi, m.L());
    require(s.fit_lo < s.fit_hi && s.fit_hi <= m.L(), "build_series: invalid residual fit window");
    const int P = std::max(4, opts.fit_points);
    std::vector<double> X, Y, W;
    double amp = 0.0;
    for (const auto& h : w0) amp = std::max(amp, std::abs(h.amplitude));
    for (int i = 0; i < P; ++i) {
        const double x = s.fit_lo * std::pow(s.fit_hi / s.fit_lo, static_cast<double>(i) / (P - 1));
        double r = 0.0;
        for (std::size_t hh = 0; hh < w0.size(); ++hh) r = std::max(r, std::abs(series_residual(m, s, hh, x)));
        if (r > 0.0) {
            X.push_back(std::log(x));
            Y.push_back(std::log(r));
            W.push_back(1.0);
        }
    }
    if (amp == 0.0 || X.size() < 3) {
        s.residual_slope = std::numeric_limits<double>::infinity();
        s.fit_r2 = 1.0;
        return s;
    }
    const Fit f = weighted_line(X, Y, W);
    s.residual_slope = f.slope;
    s.fit_r2 = f.r2;
    return s;
}

cd series_residual(const MetricModel& m, const IndicialSeries& s, std::size_t h, double x) {
    require(h < s.coeffs.size(), "series_residual: harmonic index out of range");
    require(x > 0.0, "series_residual: x must be positive");
    const double mu = transverse_mu(m, s.harmonics[h].m);
    const double n1 = m.n() - 1.0;
    const double E = e_coefficient(m, x);
    const double b = b_coefficient(m, x, s.harmonics[h].omega, mu);
    const double m2 = m.mass_squared();
    cd acc = 0.0;
    const auto& w = s.coeffs[h];
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double p = s.alpha + static_cast<double>(j);
        // P x^p = (-p^2 + (n-1) p + E(x) p + x^2 b(x) + m^2) x^p
        acc += w[j] * (-p * p + n1 * p + E * p + x * x * b + m2) * std::pow(x, p);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// boundary restriction

BoundaryFit extract_boundary(const Eigen::VectorXcd& u, const Eigen::VectorXd& x, const MetricModel& m,
                             Weighting weighting, const BoundaryFitOptions& opts) {
    require(u.size() == x.size(), "extract_boundary: u and x differ in length");
    const auto roots = indicial_roots(m);
    const double tilde_alpha = m.nu() + 0.5;
    // the conjugation x^{n/2-1} maps the tilde exponent onto nu_+
    require(std::abs((0.5 * m.n() - 1.0) + tilde_alpha - roots.nu_plus) <= 1e-12,
            "extract_boundary: exponent bookkeeping inconsistent");
    const double alpha = weighting == Weighting::physical ? roots.nu_plus : tilde_alpha;
    const double lo = opts.x_lo > 0.0 ? opts.x_lo : 0.001 * m.L();
    const double hi = opts.x_hi > 0.0 ? opts.x_hi : 0.02 * m.L();
    require(lo < hi, "extract_boundary: window must satisfy x_lo < x_hi");
    require(hi <= 0.1 * m.L() * (1.0 + 1e-12), "extract_boundary: window must lie inside x <= L/10");
    std::vector<int> idx;
    for (int i = 0; i < x.size(); ++i)
        if (x(i) >= lo && x(i) <= hi) idx.push_back(i);
    require(static_cast<int>(idx.size()) >= opts.min_nodes,
            "extract_boundary: window too thin (" + std::to_string(idx.size()) + " nodes, need " +
                std::to_string(opts.min_nodes) + ")");
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXd A(n, 4);
    Eigen::VectorXd yr(n), yi(n);
    const double contam_exp = roots.nu_minus - roots.nu_plus;
    for (int r = 0; r < n; ++r) {
        const double xv = x(idx[r]);
        const double s = xv / hi;
        A(r, 0) = 1.0;
        A(r, 1) = s;
        A(r, 2) = s * s;
        A(r, 3) = std::pow(xv / lo, contam_exp);
        const cd v = u(idx[r]) * std::pow(xv, -alpha);
        yr(r) = v.real();
        yi(r) = v.imag();
    }
    const Eigen::MatrixXd A3 = A.leftCols(3);
    const auto qr3 = A3.colPivHouseholderQr();
    const Eigen::VectorXd cr = qr3.solve(yr), ci = qr3.solve(yi);
    BoundaryFit f;
    f.alpha = alpha;
    f.nodes = n;
    f.value = {cr(0), ci(0)};
    f.slope = cd{cr(1), ci(1)} / hi;
    f.curvature = cd{cr(2), ci(2)} / (hi * hi);
    const Eigen::VectorXd rr = A3 * cr - yr, ri = A3 * ci - yi;
    const double vabs = std::abs(f.value);
    const double rms = std::sqrt((rr.squaredNorm() + ri.squaredNorm()) / n);
    f.misfit = vabs > 0.0 ? rms / vabs : (rms > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    const auto qr4 = A.colPivHouseholderQr();
    const Eigen::VectorXd dr = qr4.solve(yr), di = qr4.solve(yi);
    const double c4 = std::abs(cd{dr(3), di(3)});
    const double c0 = std::abs(cd{dr(0), di(0)});
    f.contamination = c0 > 0.0 ? c4 / c0 : (c4 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (f.contamination > opts.contamination_error)
        throw NumericalError("extract_boundary: x^{nu_-} branch detected above threshold (ratio " +
                             std::to_string(f.contamination) + "); data is not Dirichlet");
    if (f.contamination > opts.contamination_warn) {
        f.contaminated = true;
        f.warning = "x^{nu_-} branch detected (ratio " + std::to_string(f.contamination) + ")";
    }
    return f;
}

// ---------------------------------------------------------------------------
// boundary kernels

BoundaryKernel::BoundaryKernel(TimeGrid grid, KernelKind kind, std::vector<Line> lines)
    : grid_(grid), kind_(kind), lines_(std::move(lines)) {}

std::vector<int> BoundaryKernel::sectors() const {
    std::vector<int> ms;
    for (const auto& l : lines_)
        if (std::find(ms.begin(), ms.end(), l.m) == ms.end()) ms.push_back(l.m);
    return ms;
}

cd BoundaryKernel::value(int m, double t, double s) const {
    cd acc = 0.0;
    for (const auto& l : lines_) {
        if (l.m != m) continue;
        cd a = 0.0;
        for (const auto& term : l.terms) {
            if (term.support == Support::future && !(t > s)) continue;
            if (term.support == Support::past && !(t < s)) continue;
            a += term.amplitude * std::polar(1.0, l.omega * (term.sign_t * t + term.sign_s * s));
        }
        acc += l.c_left * l.c_right * a;
    }
    return acc;
}

Eigen::MatrixXcd BoundaryKernel::time_matrix(int m) const {
    Eigen::MatrixXcd a(grid_.T, grid_.T);
    for (int j = 0; j < grid_.T; ++j)
        for (int i = 0; i < grid_.T; ++i) a(i, j) = value(m, grid_.at(i), grid_.at(j));
    return a;
}

std::vector<BoundaryKernel::SpectralLine> BoundaryKernel::spectral_lines() const {
    std::vector<SpectralLine> out;
    for (const auto& l : lines_) {
        double amp = 0.0;
        for (const auto& t : l.terms) amp += std::abs(t.amplitude);
        out.push_back({l.m, l.omega, std::abs(l.c_left * l.c_right) * amp});
    }
    return out;
}

BoundaryKernel boundary_two_point(const BiKernel& k, const BoundaryFitOptions& fit) {
    require(k.weighting() == Weighting::physical, "boundary_two_point: kernel must carry physical weighting");
    const SpectralModel& s = k.spectral();
    const auto& modes = k.modes();
    std::vector<BoundaryKernel::Line> lines(modes.size());
    parallel_for(modes.size(), [&](std::size_t q) {
        const auto [m, mode] = modes[q];
        const Eigen::VectorXd phi = s.sector(m).phi.col(mode);
        const Eigen::VectorXcd left = k.left_factor().cwiseProduct(phi).cast<cd>();
        const Eigen::VectorXcd right = k.right_factor().cwiseProduct(phi).cast<cd>();
        BoundaryKernel::Line l;
        l.m = m;
        l.mode = mode;
        l.omega = k.omega(m, mode);
        l.c_left = extract_boundary(left, s.x(), s.model(), Weighting::physical, fit).value;
        l.c_right = extract_boundary(right, s.x(), s.model(), Weighting::physical, fit).value;
        for (const auto& t : k.terms())
            if (t.m == m && t.mode == mode) l.terms.push_back(t);
        lines[q] = std::move(l);
    });
    KernelKind kind = k.kind();
    return BoundaryKernel(k.grid(), kind, std::move(lines));
}

BoundaryKernelReport verify_boundary_kernel(const BoundaryKernel& k, double m_floor_sqrt,
                                            const FrequencyTestOptions& freq) {
    BoundaryKernelReport r;
    const Eigen::VectorXd w = k.grid().trapezoid().cwiseSqrt();
    r.gram_min = std::numeric_limits<double>::infinity();
    for (int m : k.sectors()) {
        const Eigen::MatrixXcd A = k.time_matrix(m);
        r.hermiticity_defect = std::max(r.hermiticity_defect, (A - A.adjoint()).cwiseAbs().maxCoeff());
        const Eigen::MatrixXcd H = w.asDiagonal() * (0.5 * (A + A.adjoint())) * w.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        r.gram_min = std::min(r.gram_min, ev(0));
        r.gram_norm = std::max({r.gram_norm, std::abs(ev(0)), std::abs(ev(ev.size() - 1))});
    }
    double scale = 0.0;
    for (const auto& l : k.lines()) scale = std::max(scale, std::abs(l.c_left * l.c_right));
    r.pass_hermitian = r.hermiticity_defect <= 1e-12 * std::max(1.0, r.gram_norm / k.grid().dt);
    r.pass_psd = r.gram_min >= -1e-10 * r.gram_norm;
    FrequencyTestOptions o = freq;
    if (o.sign == 0) {
        require(k.kind() == KernelKind::lambda_plus || k.kind() == KernelKind::lambda_minus,
                "verify_boundary_kernel: frequency sign must be given for this kernel kind");
        o.sign = k.kind() == KernelKind::lambda_plus ? 1 : -1;
    }
    const auto sectors = k.sectors();
    r.frequency = frequency_sign_scalar(
        [&](double t, double s) {
            cd acc = 0.0;
            for (int m : sectors) acc += k.value(m, t, s);
            return acc;
        },
        k.grid(), m_floor_sqrt, o);
    (void)scale;
    return r;
}

// ---------------------------------------------------------------------------
// exponent probe

ExponentProbe mellin_exponent_probe(const Eigen::VectorXd& u, const Eigen::VectorXd& x, const MetricModel& m,
                                    double x_lo, double x_hi, double r2_threshold) {
    require(u.size() == x.size() && x.size() >= 3, "mellin_exponent_probe: u and x must match (>= 3 nodes)");
    const double lo = x_lo > 0.0 ? x_lo : x(1);
    const double hi = x_hi > 0.0 ? x_hi : m.L() / 20.0;
    std::vector<int> idx;
    for (int i = 0; i < x.size(); ++i)
        if (x(i) >= lo && x(i) <= hi && u(i) != 0.0) idx.push_back(i);
    if (idx.size() < 3) throw PreconditionError("mellin_exponent_probe: degenerate fit (u vanishes near the boundary)");
    std::vector<double> X, Y, W;
    for (std::size_t q = 0; q < idx.size(); ++q) {
        const double lx = std::log(x(idx[q]));
        const double lprev = q > 0 ? std::log(x(idx[q - 1])) : lx;
        const double lnext = q + 1 < idx.size() ? std::log(x(idx[q + 1])) : lx;
        X.push_back(lx);
        Y.push_back(std::log(std::abs(u(idx[q]))));
        W.push_back(std::max(0.5 * (lnext - lprev), 1e-300));
    }
    const Fit f = weighted_line(X, Y, W);
    ExponentProbe p;
    p.alpha_hat = f.slope;
    p.r2 = f.r2;
    p.points = static_cast<int>(idx.size());
    p.reliable = f.r2 >= r2_threshold;
    return p;
}

}  // namespace kgads
