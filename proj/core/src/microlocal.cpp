#include "kgads/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kgads/csv.hpp"
#include "kgads/error.hpp"
#include "kgads/fourier.hpp"
#include "kgads/parallel.hpp"

namespace kgads {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

// ---------------------------------------------------------------------------
// wavepackets

Wavepacket make_wavepacket(const SpectralModel& s, double x0, double xi0, double sigma, EnergySign sign,
                           const WavepacketOptions& opts) {
    const double L = s.model().L();
    require(sigma > 0.0, "make_wavepacket: sigma must be positive");
    require(x0 > 3.0 * sigma && x0 < L - 3.0 * sigma,
            "make_wavepacket: packet touches the boundary (need 3 sigma < x0 < L - 3 sigma)");
    require(opts.allow_low_momentum || std::abs(xi0) * sigma >= 4.0,
            "make_wavepacket: |xi0| sigma must be >= 4 (oscillatory regime)");
    const auto& sec = s.sector(opts.m);
    const Eigen::VectorXd& x = s.x();
    const Eigen::VectorXd& M = s.weights();
    Eigen::VectorXcd f(x.size());
    for (int i = 0; i < x.size(); ++i) {
        const double d = x(i) - x0;
        f(i) = std::exp(cd{-d * d / (4.0 * sigma * sigma), xi0 * x(i)});
    }
    const double norm2 = (M.cast<cd>().asDiagonal() * f).dot(f).real();
    Wavepacket w;
    w.x0 = x0;
    w.xi0 = xi0;
    w.sigma = sigma;
    w.sign = sign;
    w.m = opts.m;
    if (opts.m != 0) w.zeta0 = 2.0 * std::numbers::pi * opts.m / *s.model().ell();
    w.coeffs = sec.phi.transpose().cast<cd>() * (M.cast<cd>().asDiagonal() * f);
    const double kept = w.coeffs.squaredNorm();
    w.tail = std::max(0.0, 1.0 - kept / norm2);
    if (w.tail > opts.max_tail)
        throw NumericalError("make_wavepacket: mode truncation insufficient (tail " + std::to_string(w.tail) +
                             " > " + std::to_string(opts.max_tail) + "); increase n_modes");
    w.coeffs /= std::sqrt(kept);
    return w;
}

Eigen::VectorXcd wavepacket_values(const SpectralModel& s, const Wavepacket& w) {
    return s.sector(w.m).phi.cast<cd>() * w.coeffs;
}

namespace {

Eigen::VectorXcd complex_derivative(const SpectralModel& s, const Eigen::VectorXcd& u) {
    const Eigen::VectorXd re = s.derivative(u.real());
    const Eigen::VectorXd im = s.derivative(u.imag());
    Eigen::VectorXcd d(u.size());
    for (int i = 0; i < u.size(); ++i) d(i) = {re(i), im(i)};
    return d;
}

}  // namespace

PacketMoments wavepacket_moments(const SpectralModel& s, const Wavepacket& w) {
    const Eigen::VectorXcd u = wavepacket_values(s, w);
    const Eigen::VectorXcd du = complex_derivative(s, u);
    const Eigen::VectorXd& x = s.x();
    const Eigen::VectorXd& M = s.weights();
    double n0 = 0, n1 = 0, n2 = 0, p2 = 0;
    cd p1 = 0;
    for (int i = 0; i < x.size(); ++i) {
        const double rho = M(i) * std::norm(u(i));
        n0 += rho;
        n1 += rho * x(i);
        n2 += rho * x(i) * x(i);
        p1 += M(i) * std::conj(u(i)) * du(i);
        p2 += M(i) * std::norm(du(i));
    }
    PacketMoments pm;
    pm.mean_x = n1 / n0;
    pm.var_x = n2 / n0 - pm.mean_x * pm.mean_x;
    pm.mean_xi = p1.imag() / n0;
    pm.var_xi = p2 / n0 - pm.mean_xi * pm.mean_xi;
    return pm;
}

Trajectory evolve_and_track(const SpectralModel& s, const Wavepacket& w, double t_max, double dt,
                            const TrackOptions& opts) {
    require(t_max > 0.0 && dt > 0.0, "evolve_and_track: t_max and dt must be positive");
    const auto& sec = s.sector(w.m);
    require(w.coeffs.size() == sec.n_modes(), "evolve_and_track: packet does not match the spectral model");
    require(sec.omega(sec.n_modes() - 1) * dt < std::numbers::pi,
            "evolve_and_track: dt too coarse for the largest retained frequency (omega_max * dt >= pi)");
    const MetricModel& model = s.model();
    const int K = sec.n_modes();
    const Eigen::VectorXd& x = s.x();
    const Eigen::VectorXd& M = s.weights();
    Eigen::MatrixXd dphi(s.N(), K);
    for (int k = 0; k < K; ++k) dphi.col(k) = s.derivative(sec.phi.col(k));
    Eigen::VectorXd transverse = Eigen::VectorXd::Zero(s.N());
    if (w.zeta0 != 0.0)
        for (int i = 0; i < s.N(); ++i) transverse(i) = w.zeta0 * w.zeta0 / model.k_metric()(x(i));
    const double sg = w.sign == EnergySign::plus ? 1.0 : -1.0;
    const int nt = static_cast<int>(std::floor(t_max / dt + 1e-9)) + 1;

    Trajectory tr;
    tr.points.resize(nt);
    const Eigen::MatrixXcd Phi = sec.phi.cast<cd>();
    const Eigen::MatrixXcd DPhi = dphi.cast<cd>();
    parallel_for(static_cast<std::size_t>(nt), [&](std::size_t q) {
        const double t = dt * static_cast<double>(q);
        Eigen::VectorXcd a(K), at(K);
        for (int k = 0; k < K; ++k) {
            const double om = sec.omega(k);
            a(k) = w.coeffs(k) * std::polar(1.0, -sg * om * t);
            at(k) = -I * sg * om * a(k);
        }
        const Eigen::VectorXcd u = Phi * a, ut = Phi * at, ux = DPhi * a;
        double e0 = 0, e1 = 0, e2 = 0;
        for (int i = 0; i < x.size(); ++i) {
            const double e = M(i) * (std::norm(ut(i)) + std::norm(ux(i)) + transverse(i) * std::norm(u(i)));
            e0 += e;
            e1 += e * x(i);
            e2 += e * x(i) * x(i);
        }
        TrackPoint& p = tr.points[q];
        p.t = t;
        p.centroid = e1 / e0;
        p.spread = std::sqrt(std::max(0.0, e2 / e0 - p.centroid * p.centroid));
    });
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
        if (tr.points[q].spread > opts.max_spread_fraction * model.L()) {
            tr.points.resize(q);
            tr.partial = true;
            break;
        }
    }

    if (w.xi0 != 0.0) {
        const double b0 = model.beta()(w.x0);
        const double k0 = model.k_metric()(w.x0);
        const double tau = sg * std::sqrt(b0 * (w.xi0 * w.xi0 + w.zeta0 * w.zeta0 / k0));
        std::optional<double> y, zeta;
        if (model.has_transverse()) {
            y = 0.0;
            zeta = w.zeta0;
        }
        const PhasePointB p0 = PhasePointB::make(w.x0, 0.0, tau, w.xi0, y, zeta);
        tr.gbb = trace_gbb(model, p0, t_max, opts.gbb_step);
        tr.has_gbb = true;
        for (const auto& ev : tr.gbb.reflections)
            if (!ev.artificial) ++tr.boundary_reflections;
    }
    if (opts.require_reflection && tr.boundary_reflections == 0)
        throw PreconditionError("evolve_and_track: t_max does not reach a boundary reflection");

    if (tr.has_gbb) {
        for (auto& p : tr.points) {
            p.gbb_x = tr.gbb.x_at(p.t);
            p.deviation = std::abs(p.centroid - p.gbb_x);
            tr.max_excess = std::max(tr.max_excess, p.deviation - std::max(w.sigma, p.spread));
        }
    }
    if (!tr.points.empty()) {
        std::size_t imin = 0;
        for (std::size_t q = 1; q < tr.points.size(); ++q)
            if (tr.points[q].centroid < tr.points[imin].centroid) imin = q;
        tr.turnaround_time = tr.points[imin].t;
        for (std::size_t q = imin + 1; q < tr.points.size(); ++q) {
            const auto& a = tr.points[q - 1];
            const auto& b = tr.points[q];
            if (a.centroid < w.x0 && b.centroid >= w.x0) {
                tr.return_time = a.t + (w.x0 - a.centroid) / (b.centroid - a.centroid) * (b.t - a.t);
                break;
            }
        }
    }
    return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
    csv::Writer w(out);
    w.header({"t", "centroid", "spread", "gbb_x", "deviation"});
    for (const auto& p : tr.points) {
        w.field(p.t).field(p.centroid).field(p.spread).field(p.gbb_x).field(p.deviation);
        w.end_row();
    }
}

// ---------------------------------------------------------------------------
// quadrant scans

std::string to_string(Quadrant q) {
    switch (q) {
        case Quadrant::pp: return "++";
        case Quadrant::pm: return "+-";
        case Quadrant::mp: return "-+";
        case Quadrant::mm: return "--";
    }
    return "?";
}

namespace {

// Lambda^+ built with convention c carries exp(i c w (t - s)) in its first term.
int convention_of(const BiKernel& k) {
    const bool reversed = k.kind() == KernelKind::lambda_minus || k.kind() == KernelKind::antifeynman;
    for (const auto& t : k.terms())
        if (t.sign_t == -t.sign_s && t.sign_t != 0) return reversed ? -t.sign_t : t.sign_t;
    return 1;
}

struct Pattern {
    std::vector<Quadrant> future;
    std::vector<Quadrant> past;
    bool needs_exclusion = false;
};

Pattern default_pattern(const BiKernel& k) {
    const int c = convention_of(k);
    const Quadrant plus = c > 0 ? Quadrant::pp : Quadrant::mm;
    const Quadrant minus = c > 0 ? Quadrant::mm : Quadrant::pp;
    switch (k.kind()) {
        case KernelKind::lambda_plus: return {{plus}, {plus}, false};
        case KernelKind::lambda_minus: return {{minus}, {minus}, false};
        case KernelKind::causal: return {{plus, minus}, {plus, minus}, false};
        case KernelKind::retarded: return {{plus, minus}, {}, true};
        case KernelKind::advanced: return {{}, {plus, minus}, true};
        case KernelKind::feynman: return {{plus}, {minus}, true};
        case KernelKind::antifeynman: return {{minus}, {plus}, true};
        default:
            throw PreconditionError("kernel_wavefront_scan: give the allowed quadrants for kernel kind " +
                                    to_string(k.kind()));
    }
}

int quadrant_index(double l1, double l2_primed) {
    if (l1 > 0) return l2_primed > 0 ? 0 : 1;
    return l2_primed > 0 ? 2 : 3;
}

// Energy-flat reduction sampled on a window pair: sum over terms of
// omega * amplitude * exp(i omega (sign_t t + sign_s s)), masked by support.
Eigen::MatrixXcd window_samples(const BiKernel& k, int it0, int is0, int n) {
    const TimeGrid& g = k.grid();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (Support sup : {Support::all, Support::future, Support::past}) {
        std::vector<const ModeTerm*> sel;
        for (const auto& t : k.terms())
            if (t.support == sup) sel.push_back(&t);
        if (sel.empty()) continue;
        const int R = static_cast<int>(sel.size());
        Eigen::MatrixXcd U(n, R), V(n, R);
        for (int r = 0; r < R; ++r) {
            const ModeTerm& t = *sel[r];
            const double om = k.omega(t.m, t.mode);
            for (int i = 0; i < n; ++i) {
                U(i, r) = std::polar(1.0, om * t.sign_t * g.at(it0 + i));
                V(i, r) = om * t.amplitude * std::polar(1.0, om * t.sign_s * g.at(is0 + i));
            }
        }
        Eigen::MatrixXcd A = U * V.transpose();
        if (sup != Support::all) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const double t = g.at(it0 + i), s = g.at(is0 + j);
                    const bool keep = sup == Support::future ? t > s : t < s;
                    if (!keep) A(i, j) = 0.0;
                }
        }
        out += A;
    }
    return out;
}

}  // namespace

ScanReport kernel_wavefront_scan(const BiKernel& k, double m_floor_sqrt, const ScanOptions& opts) {
    const TimeGrid& g = k.grid();
    require(m_floor_sqrt > 0.0, "kernel_wavefront_scan: m_floor_sqrt must be positive");
    const double span = g.end() - g.at(0);
    require(opts.window > 0.0 && opts.window <= span + 1e-12, "kernel_wavefront_scan: window exceeds the kernel grid");
    require(2.0 * std::numbers::pi / opts.window < m_floor_sqrt / 4.0,
            "kernel_wavefront_scan: window too short (2 pi / T_w must be < m_floor_sqrt / 4)");
    Pattern pat;
    if (opts.allowed_future.empty() && opts.allowed_past.empty()) {
        pat = default_pattern(k);
    } else {
        pat.future = opts.allowed_future;
        pat.past = opts.allowed_past;
        pat.needs_exclusion = true;
    }
    const int n = static_cast<int>(std::floor(opts.window / g.dt + 1e-9)) + 1;
    const double step = opts.step > 0.0 ? opts.step : 0.5 * opts.window;
    const int istep = std::max(1, static_cast<int>(std::lround(step / g.dt)));
    std::vector<int> starts;
    for (int i0 = 0; i0 + n <= g.T; i0 += istep) starts.push_back(i0);
    const double excl = opts.exclude_halfwidth >= 0.0 ? opts.exclude_halfwidth
                                                       : (pat.needs_exclusion ? opts.window : 0.0);
    ScanReport rep;
    rep.omega_lo = opts.omega_lo > 0.0 ? opts.omega_lo : 1.5 * m_floor_sqrt;
    rep.window = opts.window;
    const Eigen::VectorXd win = fourier::kaiser(n, opts.kaiser_beta);
    const Eigen::MatrixXd W2 = win * win.transpose();
    std::vector<double> freq(n);
    for (int j = 0; j < n; ++j) freq[j] = fourier::bin_frequency(j, n, g.dt);

    const std::size_t P = starts.size();
    rep.windows.resize(P * P);
    parallel_for(P * P, [&](std::size_t q) {
        const int it0 = starts[q % P], is0 = starts[q / P];
        ScanWindow sw;
        sw.t = g.at(it0) + 0.5 * (n - 1) * g.dt;
        sw.s = g.at(is0) + 0.5 * (n - 1) * g.dt;
        const Eigen::MatrixXcd F = fourier::dft2(window_samples(k, it0, is0, n).cwiseProduct(W2.cast<cd>()));
        for (int j = 0; j < n; ++j) {
            const double l2 = -freq[j];  // primed reading of the second slot
            if (std::abs(l2) < rep.omega_lo) continue;
            for (int i = 0; i < n; ++i) {
                const double l1 = freq[i];
                if (std::abs(l1) < rep.omega_lo) continue;
                sw.mass[quadrant_index(l1, l2)] += std::norm(F(i, j));
            }
        }
        const double d = sw.t - sw.s;
        sw.excluded = std::abs(d) < excl;
        const auto& allowed = d >= 0.0 ? pat.future : pat.past;
        double total = 0.0, off = 0.0;
        for (int qd = 0; qd < 4; ++qd) {
            total += sw.mass[qd];
            if (std::find(allowed.begin(), allowed.end(), static_cast<Quadrant>(qd)) == allowed.end())
                off += sw.mass[qd];
        }
        sw.off_pattern_fraction = total > 0.0 ? off / total : 0.0;
        rep.windows[q] = sw;
    });
    for (const auto& sw : rep.windows)
        if (!sw.excluded) rep.max_off_pattern = std::max(rep.max_off_pattern, sw.off_pattern_fraction);
    rep.pass = rep.max_off_pattern <= opts.tolerance;
    return rep;
}

void write_scan_csv(std::ostream& out, const ScanReport& r) {
    csv::Writer w(out);
    w.header({"t", "s", "mass_pp", "mass_pm", "mass_mp", "mass_mm", "off_pattern_fraction", "excluded"});
    for (const auto& sw : r.windows) {
        w.field(sw.t).field(sw.s);
        for (double m : sw.mass) w.field(m);
        w.field(sw.off_pattern_fraction).field(static_cast<long long>(sw.excluded ? 1 : 0));
        w.end_row();
    }
}

// ---------------------------------------------------------------------------
// second states

std::string RotationSpec::describe() const {
    std::ostringstream os;
    if (thermal_beta) {
        os << "thermal beta_T=" << csv::format_double(*thermal_beta);
    } else if (rotations.empty()) {
        os << "vacuum";
    } else {
        os << "bogoliubov";
        for (const auto& r : rotations) os << ' ' << r.m << ':' << r.mode << ':' << csv::format_double(r.r);
    }
    return os.str();
}

BiKernel StatePair::difference_plus() const { return combine({{1.0, &plus_b}, {-1.0, &plus_a}}); }
BiKernel StatePair::difference_minus() const { return combine({{1.0, &minus_b}, {-1.0, &minus_a}}); }

namespace {

struct Occupation {
    double n = 0.0;
    double c = 0.0;
};

std::vector<ModeTerm> rotate_terms(const BiKernel& k, const std::map<std::pair<int, int>, Occupation>& occ) {
    std::vector<ModeTerm> out;
    for (const auto& t : k.terms()) {
        const auto it = occ.find({t.m, t.mode});
        if (it == occ.end()) {
            out.push_back(t);
            continue;
        }
        const Occupation& o = it->second;
        ModeTerm keep = t;
        keep.amplitude *= 1.0 + o.n;
        out.push_back(keep);
        if (o.n != 0.0) {
            ModeTerm rev = t;
            rev.amplitude *= o.n;
            rev.sign_t = -t.sign_t;
            rev.sign_s = -t.sign_s;
            out.push_back(rev);
        }
        if (o.c != 0.0) {
            ModeTerm a = t, b = t;
            a.amplitude *= o.c;
            b.amplitude *= o.c;
            a.sign_s = a.sign_t;
            b.sign_t = -t.sign_t;
            b.sign_s = -t.sign_t;
            out.push_back(a);
            out.push_back(b);
        }
    }
    return out;
}

void require_single_terms(const BiKernel& k, const char* what) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : k.terms()) {
        require(t.support == Support::all && t.sign_t == -t.sign_s && t.sign_t != 0,
                std::string("make_perturbed_state: ") + what + " is not a stationary two-point function");
        require(++count[{t.m, t.mode}] == 1,
                std::string("make_perturbed_state: ") + what + " must hold one term per mode");
    }
}

}  // namespace

StatePair make_perturbed_state(const BiKernel& lp, const BiKernel& lm, const RotationSpec& spec) {
    require(lp.kind() == KernelKind::lambda_plus && lm.kind() == KernelKind::lambda_minus,
            "make_perturbed_state: expects Lambda^+ and Lambda^- kernels");
    require(lp.spectral_ptr() == lm.spectral_ptr() && lp.grid() == lm.grid() && lp.weighting() == lm.weighting(),
            "make_perturbed_state: Lambda^+ and Lambda^- must share model, grid and weighting");
    require_single_terms(lp, "Lambda^+");
    require_single_terms(lm, "Lambda^-");
    require(!(spec.thermal_beta && !spec.rotations.empty()),
            "make_perturbed_state: give either a thermal beta_T or mode rotations, not both");
    std::map<std::pair<int, int>, Occupation> occ;
    if (spec.thermal_beta) {
        const double bT = *spec.thermal_beta;
        require(std::isfinite(bT) && bT > 0.0, "make_perturbed_state: beta_T must be positive and finite");
        for (const auto& [m, mode] : lp.modes()) occ[{m, mode}] = {1.0 / std::expm1(bT * lp.omega(m, mode)), 0.0};
    }
    for (const auto& r : spec.rotations) {
        require(std::isfinite(r.r) && std::abs(r.r) <= 10.0,
                "make_perturbed_state: Bogoliubov parameter must be finite with |r| <= 10");
        const auto& modes = lp.modes();
        require(std::find(modes.begin(), modes.end(), std::make_pair(r.m, r.mode)) != modes.end(),
                "make_perturbed_state: rotated mode is not retained by the kernel");
        require(!occ.count({r.m, r.mode}), "make_perturbed_state: mode rotated twice");
        const double sh = std::sinh(r.r);
        occ[{r.m, r.mode}] = {sh * sh, std::cosh(r.r) * sh};
    }
    StatePair sp{lp, lm,
                 BiKernel(lp.spectral_ptr(), lp.grid(), KernelKind::lambda_plus, lp.weighting(), rotate_terms(lp, occ)),
                 BiKernel(lm.spectral_ptr(), lm.grid(), KernelKind::lambda_minus, lm.weighting(), rotate_terms(lm, occ)),
                 spec};
    return sp;
}

// ---------------------------------------------------------------------------
// decay proxy

DecayReport temporal_decay_order(const std::function<cd(double, double)>& f, const TimeGrid& g,
                                 const std::vector<double>& frequencies, double m_floor_sqrt,
                                 const DecayOptions& opts) {
    require(m_floor_sqrt > 0.0, "temporal_decay_order: m_floor_sqrt must be positive");
    const double span = g.end() - g.at(0);
    std::vector<double> fr = frequencies;
    std::sort(fr.begin(), fr.end());
    const double mainlobe = 2.0 * std::sqrt(opts.kaiser_beta * opts.kaiser_beta + std::numbers::pi * std::numbers::pi) / span;
    for (std::size_t i = 1; i < fr.size(); ++i)
        require(fr[i] - fr[i - 1] > mainlobe || fr[i] == fr[i - 1],
                "temporal_decay_order: grid too short to separate neighbouring lines");
    const int n = g.T;
    const double sc = g.at(0) + 0.5 * span;
    const Eigen::VectorXd win = fourier::kaiser(n, opts.kaiser_beta);
    std::vector<cd> samples(n);
    std::vector<double> tau(n);
    for (int i = 0; i < n; ++i) {
        tau[i] = (i - 0.5 * (n - 1)) * g.dt;
        samples[i] = win(i) * f(sc + tau[i], sc);
    }
    auto coefficient = [&](double lam) {
        cd acc = 0.0;
        for (int i = 0; i < n; ++i) acc += samples[i] * std::polar(1.0, -lam * tau[i]);
        return std::abs(acc) * g.dt;
    };
    const double lo = opts.omega_lo > 0.0 ? opts.omega_lo : 1.5 * m_floor_sqrt;
    DecayReport r;
    double biggest = 0.0;
    std::vector<std::pair<double, double>> all;
    for (std::size_t i = 0; i < fr.size(); ++i) {
        if (i > 0 && fr[i] == fr[i - 1]) continue;
        const double v = std::max(coefficient(fr[i]), coefficient(-fr[i]));
        biggest = std::max(biggest, v);
        all.emplace_back(fr[i], v);
    }
    for (const auto& [om, v] : all)
        if (om >= lo && v > opts.floor * biggest && v > 0.0) r.lines.emplace_back(om, v);
    r.points = static_cast<int>(r.lines.size());
    if (r.points >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [om, v] : r.lines) {
            const double X = std::log(om), Y = std::log(v);
            sx += X;
            sy += Y;
            sxx += X * X;
            sxy += X * Y;
        }
        const double N = r.points;
        const double slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
        r.order = -slope;
    }
    r.pass = r.order >= opts.min_order;
    return r;
}

DecayReport kernel_decay_order(const BiKernel& k, double m_floor_sqrt, const DecayOptions& opts) {
    std::vector<double> freqs;
    for (const auto& [m, mode] : k.modes()) freqs.push_back(k.omega(m, mode));
    auto f = [&k](double t, double s) {
        cd acc = 0.0;
        for (const auto& [m, mode] : k.modes()) acc += k.omega(m, mode) * k.temporal(m, mode, t, s);
        return acc;
    };
    return temporal_decay_order(f, k.grid(), freqs, m_floor_sqrt, opts);
}

}  // namespace kgads
