#include "kgads/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "kgads/error.hpp"
#include "kgads/fourier.hpp"
#include "kgads/parallel.hpp"

namespace kgads {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::retarded: return "retarded";
        case KernelKind::advanced: return "advanced";
        case KernelKind::causal: return "causal";
        case KernelKind::lambda_plus: return "lambda_plus";
        case KernelKind::lambda_minus: return "lambda_minus";
        case KernelKind::feynman: return "feynman";
        case KernelKind::antifeynman: return "antifeynman";
        case KernelKind::combination: return "combination";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& s) {
    for (auto k : {KernelKind::retarded, KernelKind::advanced, KernelKind::causal, KernelKind::lambda_plus,
                   KernelKind::lambda_minus, KernelKind::feynman, KernelKind::antifeynman,
                   KernelKind::combination})
        if (to_string(k) == s) return k;
    throw PreconditionError("unknown kernel kind '" + s + "'");
}

std::string to_string(Weighting w) { return w == Weighting::tilde ? "tilde" : "physical"; }

Weighting weighting_from_string(const std::string& s) {
    if (s == "tilde") return Weighting::tilde;
    if (s == "physical") return Weighting::physical;
    throw PreconditionError("unknown weighting '" + s + "' (expected tilde or physical)");
}

Eigen::VectorXd TimeGrid::trapezoid() const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(T, dt);
    w(0) = w(T - 1) = 0.5 * dt;
    return w;
}

// ---------------------------------------------------------------------------
// BiKernel

BiKernel::BiKernel(std::shared_ptr<const SpectralModel> s, TimeGrid grid, KernelKind kind,
                   Weighting weighting, std::vector<ModeTerm> terms)
    : spectral_(std::move(s)), grid_(grid), kind_(kind), weighting_(weighting), terms_(std::move(terms)) {
    require(static_cast<bool>(spectral_), "kernel needs a spectral model");
    require(grid_.T >= 2 && grid_.dt > 0.0, "kernel time grid must have T >= 2 and dt > 0");
    for (const auto& t : terms_) {
        const int si = spectral_->sector_index(t.m);
        require(t.mode >= 0 && t.mode < spectral_->sectors()[si].n_modes(), "kernel term mode out of range");
        require((t.sign_t == 1 || t.sign_t == -1 || t.sign_t == 0) &&
                    (t.sign_s == 1 || t.sign_s == -1 || t.sign_s == 0),
                "kernel term signs must be in {-1, 0, 1}");
        auto it = std::find_if(groups_.begin(), groups_.end(),
                               [&](const Group& g) { return g.sector_index == si && g.mode == t.mode; });
        if (it == groups_.end()) {
            groups_.push_back({si, t.mode, spectral_->sectors()[si].omega(t.mode), {}});
            modes_.emplace_back(t.m, t.mode);
            it = groups_.end() - 1;
        }
        it->terms.push_back(t);
    }
    const int N = spectral_->N();
    if (weighting_ == Weighting::tilde) {
        left_ = Eigen::VectorXd::Ones(N);
        right_ = Eigen::VectorXd::Ones(N);
    } else {
        left_ = spectral_->weight_left();
        right_ = spectral_->weight_right().cwiseQuotient(spectral_->volume_density());
    }
}

const BiKernel::Group* BiKernel::find(int m, int mode) const {
    const int si = spectral_->sector_index(m);
    for (const auto& g : groups_)
        if (g.sector_index == si && g.mode == mode) return &g;
    return nullptr;
}

cd BiKernel::eval(const Group& g, double t, double s) {
    cd acc = 0.0;
    for (const auto& term : g.terms) {
        if (term.support == Support::future && !(t > s)) continue;
        if (term.support == Support::past && !(t < s)) continue;
        acc += term.amplitude * std::polar(1.0, g.omega * (term.sign_t * t + term.sign_s * s));
    }
    return acc;
}

double BiKernel::omega(int m, int mode) const { return spectral_->sector(m).omega(mode); }

cd BiKernel::temporal(int m, int mode, double t, double s) const {
    const Group* g = find(m, mode);
    return g ? eval(*g, t, s) : cd{0.0};
}

Eigen::MatrixXcd BiKernel::time_matrix(int m, int mode) const {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(grid_.T, grid_.T);
    const Group* g = find(m, mode);
    if (!g) return a;
    for (int j = 0; j < grid_.T; ++j)
        for (int i = 0; i < grid_.T; ++i) a(i, j) = eval(*g, grid_.at(i), grid_.at(j));
    return a;
}

Eigen::MatrixXcd BiKernel::time_block(int m, int mode, const std::vector<int>& rows,
                                      const std::vector<int>& cols) const {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    const Group* g = find(m, mode);
    if (!g) return a;
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            a(static_cast<int>(i), static_cast<int>(j)) = eval(*g, grid_.at(rows[i]), grid_.at(cols[j]));
    return a;
}

cd BiKernel::value(int m, double t, int a, double s, int b) const {
    const int si = spectral_->sector_index(m);
    const auto& phi = spectral_->sectors()[si].phi;
    cd acc = 0.0;
    for (const auto& g : groups_) {
        if (g.sector_index != si) continue;
        acc += eval(g, t, s) * phi(a, g.mode) * phi(b, g.mode);
    }
    return left_(a) * acc * right_(b);
}

Eigen::MatrixXcd BiKernel::spatial_block(int m, int i, int j) const {
    const int si = spectral_->sector_index(m);
    const auto& phi = spectral_->sectors()[si].phi;
    const int N = spectral_->N();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(N, N);
    for (const auto& g : groups_) {
        if (g.sector_index != si) continue;
        const cd a = eval(g, grid_.at(i), grid_.at(j));
        const Eigen::VectorXd l = left_.cwiseProduct(phi.col(g.mode));
        const Eigen::VectorXd r = right_.cwiseProduct(phi.col(g.mode));
        out += a * (l * r.transpose()).cast<cd>();
    }
    return out;
}

double BiKernel::tail_estimate() const { return 0.5 / spectral_->omega_max(); }

// ---------------------------------------------------------------------------
// construction

namespace {

void require_nyquist(const SpectralModel& s, const TimeGrid& grid) {
    require(s.omega_max() * grid.dt < std::numbers::pi,
            "time grid too coarse for the largest retained frequency (omega_max * dt >= pi)");
}

std::vector<ModeTerm> base_terms(const SpectralModel& s, KernelKind kind, int conv) {
    std::vector<ModeTerm> terms;
    for (const auto& sec : s.sectors()) {
        for (int k = 0; k < sec.n_modes(); ++k) {
            const double w = sec.omega(k);
            auto add = [&](cd amp, int st, int ss, Support sup) {
                terms.push_back({sec.m, k, amp, st, ss, sup});
            };
            switch (kind) {
                case KernelKind::retarded:
                    add(1.0 / (2.0 * I * w), 1, -1, Support::future);
                    add(-1.0 / (2.0 * I * w), -1, 1, Support::future);
                    break;
                case KernelKind::advanced:
                    add(-1.0 / (2.0 * I * w), 1, -1, Support::past);
                    add(1.0 / (2.0 * I * w), -1, 1, Support::past);
                    break;
                case KernelKind::causal:
                    add(1.0 / (2.0 * I * w), 1, -1, Support::all);
                    add(-1.0 / (2.0 * I * w), -1, 1, Support::all);
                    break;
                case KernelKind::lambda_plus: add(1.0 / (2.0 * w), conv, -conv, Support::all); break;
                case KernelKind::lambda_minus: add(1.0 / (2.0 * w), -conv, conv, Support::all); break;
                default: throw PreconditionError("not a base kernel kind");
            }
        }
    }
    return terms;
}

void require_compatible(const BiKernel& a, const BiKernel& b) {
    require(a.spectral_ptr() == b.spectral_ptr(), "kernels are built on different spectral models");
    require(a.grid() == b.grid(), "kernels are sampled on different time grids");
    require(a.weighting() == b.weighting(), "kernels carry different weightings");
}

}  // namespace

BiKernel make_propagator(std::shared_ptr<const SpectralModel> s, KernelKind kind, const TimeGrid& grid,
                         Weighting weighting, const PropagatorOptions& opts) {
    require(static_cast<bool>(s), "make_propagator: spectral model missing");
    require(grid.T >= 32, "make_propagator: time grid needs T >= 32");
    require(grid.dt > 0.0, "make_propagator: dt must be positive");
    require(opts.sign_convention == 1 || opts.sign_convention == -1, "sign convention must be +1 or -1");
    require_nyquist(*s, grid);
    const int conv = opts.sign_convention;
    if (kind == KernelKind::feynman || kind == KernelKind::antifeynman) {
        BiKernel lam(s, grid, kind == KernelKind::feynman ? KernelKind::lambda_plus : KernelKind::lambda_minus,
                     weighting,
                     base_terms(*s, kind == KernelKind::feynman ? KernelKind::lambda_plus : KernelKind::lambda_minus,
                                conv));
        BiKernel adv(s, grid, KernelKind::advanced, weighting, base_terms(*s, KernelKind::advanced, conv));
        const cd c = kind == KernelKind::feynman ? -I : I;
        return combine({{c, &lam}, {1.0, &adv}}, kind);
    }
    require(kind != KernelKind::combination, "make_propagator: 'combination' is not a propagator kind");
    return BiKernel(s, grid, kind, weighting, base_terms(*s, kind, conv));
}

BiKernel combine(const std::vector<std::pair<cd, const BiKernel*>>& parts, KernelKind kind) {
    require(!parts.empty(), "combine: no kernels given");
    const BiKernel& first = *parts.front().second;
    std::vector<ModeTerm> terms;
    for (const auto& [c, k] : parts) {
        require_compatible(first, *k);
        for (ModeTerm t : k->terms()) {
            t.amplitude *= c;
            terms.push_back(t);
        }
    }
    return BiKernel(first.spectral_ptr(), first.grid(), kind, first.weighting(), std::move(terms));
}

BiKernel flip_mode_signs(const BiKernel& k, int count) {
    const auto& modes = k.modes();
    const int n = static_cast<int>(modes.size());
    require(count >= 0 && count <= n, "flip_mode_signs: count out of range");
    std::vector<std::pair<int, int>> flipped;
    for (int j = 0; j < count; ++j)
        flipped.push_back(modes[static_cast<std::size_t>(std::floor((j + 0.5) * n / count))]);
    std::vector<ModeTerm> terms = k.terms();
    for (auto& t : terms) {
        if (std::find(flipped.begin(), flipped.end(), std::make_pair(t.m, t.mode)) != flipped.end()) {
            t.sign_t = -t.sign_t;
            t.sign_s = -t.sign_s;
        }
    }
    return BiKernel(k.spectral_ptr(), k.grid(), k.kind(), k.weighting(), std::move(terms));
}

// ---------------------------------------------------------------------------
// application

Eigen::MatrixXcd apply(const BiKernel& k, int m, const Eigen::MatrixXcd& f) {
    const SpectralModel& s = k.spectral();
    const TimeGrid& g = k.grid();
    require(f.rows() == s.N() && f.cols() == g.T, "apply: input does not match the kernel grid");
    const auto& sec = s.sector(m);
    Eigen::VectorXd pairing = s.weights();
    if (k.weighting() == Weighting::physical) pairing = pairing.cwiseProduct(s.weight_right());
    // c_k(s_j) = <phi_k, w f(s_j)>
    const Eigen::MatrixXcd coeff =
        sec.phi.transpose().cast<cd>() * (pairing.cast<cd>().asDiagonal() * f);
    const Eigen::VectorXd w = g.trapezoid();
    Eigen::MatrixXcd out_coeff = Eigen::MatrixXcd::Zero(sec.n_modes(), g.T);
    const int T = g.T;
    for (const auto& term : k.terms()) {
        if (term.m != m) continue;
        const double om = sec.omega(term.mode);
        // accumulate sum_j w_j exp(i om sign_s s_j) c(s_j) over the support of t_i
        std::vector<cd> v(T);
        for (int j = 0; j < T; ++j) v[j] = w(j) * std::polar(1.0, om * term.sign_s * g.at(j)) * coeff(term.mode, j);
        std::vector<cd> acc(T);
        if (term.support == Support::all) {
            cd total = 0.0;
            for (int j = 0; j < T; ++j) total += v[j];
            std::fill(acc.begin(), acc.end(), total);
        } else if (term.support == Support::future) {
            cd run = 0.0;
            for (int i = 0; i < T; ++i) {
                acc[i] = run;  // strict: j < i
                run += v[i];
            }
        } else {
            cd run = 0.0;
            for (int i = T - 1; i >= 0; --i) {
                acc[i] = run;  // strict: j > i
                run += v[i];
            }
        }
        for (int i = 0; i < T; ++i)
            out_coeff(term.mode, i) += term.amplitude * std::polar(1.0, om * term.sign_t * g.at(i)) * acc[i];
    }
    Eigen::MatrixXcd out = sec.phi.cast<cd>() * out_coeff;
    if (k.weighting() == Weighting::physical) out = s.weight_left().cast<cd>().asDiagonal() * out;
    return out;
}

Eigen::MatrixXcd apply_wave_operator(const SpectralModel& s, int m, const Eigen::MatrixXcd& u, double dt,
                                     Weighting weighting) {
    require(u.rows() == s.N() && u.cols() >= 3, "apply_wave_operator: input has the wrong shape");
    Eigen::MatrixXcd v = u;
    if (weighting == Weighting::physical) v = s.weight_left().cwiseInverse().cast<cd>().asDiagonal() * u;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(u.rows(), u.cols());
    const double inv = 1.0 / (dt * dt);
    for (int i = 1; i + 1 < u.cols(); ++i)
        out.col(i) = (v.col(i + 1) - 2.0 * v.col(i) + v.col(i - 1)) * inv + s.apply_form(m, v.col(i));
    if (weighting == Weighting::physical) out = s.weight_right().cwiseInverse().cast<cd>().asDiagonal() * out;
    return out;
}

// ---------------------------------------------------------------------------
// verification

namespace {

std::vector<int> spread_indices(int n, int count) {
    std::vector<int> idx;
    count = std::min(count, n);
    for (int j = 0; j < count; ++j) idx.push_back(static_cast<int>(std::floor((j + 0.5) * n / count)));
    return idx;
}

// Time indices used by entrywise checks: every node on short grids, an even
// subsample (the same for both slots, so t = s is hit) on long ones.
constexpr int kMaxTimeSamples = 384;

std::vector<int> time_samples(const TimeGrid& g) {
    if (g.T <= kMaxTimeSamples) {
        std::vector<int> all(g.T);
        for (int i = 0; i < g.T; ++i) all[i] = i;
        return all;
    }
    return spread_indices(g.T, kMaxTimeSamples);
}

// A_h phi_k for every mode of a sector.
Eigen::MatrixXd applied_modes(const SpectralModel& s, int m) {
    const auto& sec = s.sector(m);
    if (sec.form) return s.weights().cwiseInverse().asDiagonal() * (*sec.form * sec.phi);
    return sec.phi * sec.omega2.asDiagonal();
}

// residual scale factor for the t-slot of P acting in the given weighting
Eigen::VectorXd residual_left(const BiKernel& k) {
    if (k.weighting() == Weighting::tilde) return Eigen::VectorXd::Ones(k.spectral().N());
    return k.spectral().weight_right().cwiseInverse();
}

double central_error(double w, double dt) {
    const double s = std::sin(0.5 * w * dt);
    return std::abs(w * w - 4.0 * s * s / (dt * dt));
}

std::vector<int> distinct_sectors(const BiKernel& k) {
    std::vector<int> ms;
    for (const auto& [m, mode] : k.modes())
        if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
    return ms;
}

double p_residual_bound(const BiKernel& k) {
    const SpectralModel& s = k.spectral();
    const Eigen::VectorXd lres = residual_left(k);
    double bound = 0.0;
    for (int m : distinct_sectors(k)) {
        const auto& sec = s.sector(m);
        const Eigen::MatrixXd Aphi = applied_modes(s, m);
        for (const auto& t : k.terms()) {
            if (t.m != m) continue;
            const double w = sec.omega(t.mode);
            const Eigen::VectorXd phi = sec.phi.col(t.mode);
            const Eigen::VectorXd e = Aphi.col(t.mode) - sec.omega2(t.mode) * phi;
            const double r = k.right_factor().cwiseProduct(phi).cwiseAbs().maxCoeff();
            bound += std::abs(t.amplitude) * r *
                     (central_error(w, k.grid().dt) * lres.cwiseProduct(phi).cwiseAbs().maxCoeff() +
                      lres.cwiseProduct(e).cwiseAbs().maxCoeff());
        }
    }
    return bound;
}

double gram_min_eigen(const Eigen::MatrixXcd& H, double* norm) {
    const Eigen::MatrixXcd Hs = 0.5 * (H + H.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hs, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    *norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    return ev(0);
}

struct GramResult {
    double min_eig = 0.0;
    double norm = 0.0;
};

// Stationary modes are finite sums amp u(t) v(s) with full support, so the
// weighted Hermitian part is Z C Z^* with Z = W^{1/2}[U, conj V]; its nonzero
// spectrum follows from a QR factorization of Z, and it is rank deficient.
bool low_rank_spectrum(const BiKernel& k, int m, int mode, const Eigen::VectorXd& w, double* mn, double* norm) {
    std::vector<const ModeTerm*> sel;
    for (const auto& t : k.terms()) {
        if (t.m != m || t.mode != mode) continue;
        if (t.support != Support::all) return false;
        sel.push_back(&t);
    }
    const int R = static_cast<int>(sel.size());
    const TimeGrid& g = k.grid();
    const double om = k.omega(m, mode);
    Eigen::MatrixXcd Z(g.T, 2 * R);
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2 * R, 2 * R);
    for (int r = 0; r < R; ++r) {
        for (int i = 0; i < g.T; ++i) {
            Z(i, r) = w(i) * std::polar(1.0, om * sel[r]->sign_t * g.at(i));
            Z(i, R + r) = w(i) * std::polar(1.0, -om * sel[r]->sign_s * g.at(i));
        }
        C(r, R + r) = 0.5 * sel[r]->amplitude;
        C(R + r, r) = 0.5 * std::conj(sel[r]->amplitude);
    }
    // Z P = Q R: the spectrum of Z C Z^* is that of R P^T C P R^* on the rank of Z
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(Z);
    const int rank = std::max<Eigen::Index>(1, qr.rank());
    const Eigen::MatrixXcd Rm = qr.matrixR().topRows(rank).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXcd Cp = qr.colsPermutation().transpose() * C * qr.colsPermutation();
    const Eigen::MatrixXcd small = Rm * Cp * Rm.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (small + small.adjoint()), Eigen::EigenvaluesOnly);
    const auto& e = es.eigenvalues();
    *mn = std::min(0.0, e(0));
    *norm = std::max(std::abs(e(0)), std::abs(e(e.size() - 1)));
    return true;
}

GramResult gram_check(const BiKernel& k) {
    const SpectralModel& s = k.spectral();
    const Eigen::VectorXd w = k.grid().trapezoid().cwiseSqrt();
    std::vector<double> mins(k.modes().size()), norms(k.modes().size());
    parallel_for(k.modes().size(), [&](std::size_t q) {
        const auto [m, mode] = k.modes()[q];
        if (low_rank_spectrum(k, m, mode, w, &mins[q], &norms[q])) return;
        const Eigen::MatrixXcd A = w.asDiagonal() * k.time_matrix(m, mode) * w.asDiagonal();
        mins[q] = gram_min_eigen(A, &norms[q]);
    });
    GramResult r;
    r.min_eig = mins.empty() ? 0.0 : *std::min_element(mins.begin(), mins.end());
    r.norm = norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
    // sampled nodal space-time block, paired as the kernel's weighting requires
    Eigen::VectorXd rho = s.weights();
    if (k.weighting() == Weighting::physical) rho = rho.cwiseProduct(s.volume_density());
    const auto ti = spread_indices(k.grid().T, 24);
    const auto xi = spread_indices(s.N(), 12);
    const Eigen::VectorXd wt = k.grid().trapezoid();
    for (int m : distinct_sectors(k)) {
        const int B = static_cast<int>(ti.size() * xi.size());
        Eigen::MatrixXcd G(B, B);
        for (std::size_t i = 0; i < ti.size(); ++i)
            for (std::size_t a = 0; a < xi.size(); ++a)
                for (std::size_t j = 0; j < ti.size(); ++j)
                    for (std::size_t b = 0; b < xi.size(); ++b) {
                        const double sc = std::sqrt(wt(ti[i]) * wt(ti[j]) * rho(xi[a]) * rho(xi[b]));
                        G(static_cast<int>(i * xi.size() + a), static_cast<int>(j * xi.size() + b)) =
                            sc * k.value(m, k.grid().at(ti[i]), xi[a], k.grid().at(ti[j]), xi[b]);
                    }
        double norm = 0.0;
        const double mn = gram_min_eigen(G, &norm);
        if (norm > 0.0 && mn / norm < r.min_eig / std::max(r.norm, 1e-300)) {
            r.min_eig = mn;
            r.norm = norm;
        }
    }
    return r;
}

double hermiticity_defect(const BiKernel& k) {
    double d = 0.0;
    const auto ts = time_samples(k.grid());
    for (const auto& [m, mode] : k.modes()) {
        const Eigen::MatrixXcd A = k.time_block(m, mode, ts, ts);
        d = std::max(d, (A - A.adjoint()).cwiseAbs().maxCoeff());
    }
    const auto ti = spread_indices(k.grid().T, 8);
    const auto xi = spread_indices(k.spectral().N(), 8);
    for (int m : distinct_sectors(k))
        for (int i : ti)
            for (int j : ti)
                for (int a : xi)
                    for (int b : xi) {
                        const double t = k.grid().at(i), s = k.grid().at(j);
                        d = std::max(d, std::abs(k.value(m, t, a, s, b) - std::conj(k.value(m, s, b, t, a))));
                    }
    return d;
}

}  // namespace

double wave_residual(const BiKernel& k, int s_samples, int x_samples) {
    const SpectralModel& s = k.spectral();
    const TimeGrid& g = k.grid();
    const Eigen::VectorXd lres = residual_left(k);
    // interior rows where the central difference is evaluated, and their neighbours
    TimeGrid interior = g;
    interior.T = g.T - 2;
    std::vector<int> centre = time_samples(interior);
    for (int& i : centre) i += 1;
    std::vector<int> rows;
    for (int i : centre)
        for (int d = -1; d <= 1; ++d) rows.push_back(i + d);
    const int C = static_cast<int>(centre.size());
    double res = 0.0;
    for (int m : distinct_sectors(k)) {
        const auto& sec = s.sector(m);
        const Eigen::MatrixXd Phi = lres.asDiagonal() * sec.phi;
        const Eigen::MatrixXd APhi = lres.asDiagonal() * applied_modes(s, m);
        const int K = sec.n_modes();
        for (int j : spread_indices(g.T, s_samples)) {
            std::vector<Eigen::MatrixXcd> col(K);
            for (int mode = 0; mode < K; ++mode) col[mode] = k.time_block(m, mode, rows, {j});
            for (int b : spread_indices(s.N(), x_samples)) {
                Eigen::MatrixXcd c1 = Eigen::MatrixXcd::Zero(K, C);
                Eigen::MatrixXcd c2 = Eigen::MatrixXcd::Zero(K, C);
                for (int mode = 0; mode < K; ++mode) {
                    const double r = k.right_factor()(b) * sec.phi(b, mode);
                    const auto& a = col[mode];
                    for (int q = 0; q < C; ++q) {
                        c1(mode, q) = (a(3 * q + 2, 0) - 2.0 * a(3 * q + 1, 0) + a(3 * q, 0)) / (g.dt * g.dt) * r;
                        c2(mode, q) = a(3 * q + 1, 0) * r;
                    }
                }
                const Eigen::MatrixXd Rr = Phi * c1.real() + APhi * c2.real();
                const Eigen::MatrixXd Ri = Phi * c1.imag() + APhi * c2.imag();
                res = std::max(res, (Rr.array().square() + Ri.array().square()).sqrt().maxCoeff());
            }
        }
    }
    return res;
}

double inverse_residual(const BiKernel& k, int m, int modes) {
    const SpectralModel& s = k.spectral();
    const TimeGrid& g = k.grid();
    const auto& sec = s.sector(m);
    require(modes >= 1 && modes <= sec.n_modes(), "inverse_residual: mode count out of range");
    const double c = g.at(0) + 0.5 * (g.end() - g.at(0));
    const double hw = 0.3 * (g.end() - g.at(0));
    Eigen::MatrixXcd ft = Eigen::MatrixXcd::Zero(modes, g.T);
    for (int i = 0; i < g.T; ++i) {
        const double r = (g.at(i) - c) / hw;
        const double bump = std::abs(r) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
        for (int q = 0; q < modes; ++q) ft(q, i) = bump * std::cos(1.3 * g.at(i) + 0.7 * q) / (1.0 + q);
    }
    Eigen::MatrixXcd f = sec.phi.leftCols(modes).cast<cd>() * ft;
    if (k.weighting() == Weighting::physical) f = s.weight_right().cwiseInverse().cast<cd>().asDiagonal() * f;
    const Eigen::MatrixXcd u = apply(k, m, f);
    const Eigen::MatrixXcd pu = apply_wave_operator(s, m, u, g.dt, k.weighting());
    const Eigen::MatrixXcd r = (pu - f).middleCols(1, g.T - 2);
    return r.cwiseAbs().maxCoeff() / f.cwiseAbs().maxCoeff();
}

double kernel_difference(const BiKernel& a, const BiKernel& b) {
    require_compatible(a, b);
    std::vector<std::pair<int, int>> modes = a.modes();
    for (const auto& p : b.modes())
        if (std::find(modes.begin(), modes.end(), p) == modes.end()) modes.push_back(p);
    const SpectralModel& s = a.spectral();
    const auto xi = spread_indices(s.N(), 8);
    const auto ts = time_samples(a.grid());
    const int T = static_cast<int>(ts.size());
    double d = 0.0;
    // entries D(t_i, x_p; s_j, x_q) = sum_k dA_k(i, j) l_k(p) r_k(q), one sector at a time
    for (const auto& sec : s.sectors()) {
        std::vector<Eigen::MatrixXcd> partial(xi.size() * xi.size(), Eigen::MatrixXcd::Zero(T, T));
        bool any = false;
        for (const auto& [m, mode] : modes) {
            if (m != sec.m) continue;
            any = true;
            const Eigen::MatrixXcd dA = a.time_block(m, mode, ts, ts) - b.time_block(m, mode, ts, ts);
            for (std::size_t p = 0; p < xi.size(); ++p)
                for (std::size_t q = 0; q < xi.size(); ++q)
                    partial[p * xi.size() + q] += dA * (a.left_factor()(xi[p]) * sec.phi(xi[p], mode) *
                                                        a.right_factor()(xi[q]) * sec.phi(xi[q], mode));
        }
        if (!any) continue;
        for (const auto& P : partial) d = std::max(d, P.cwiseAbs().maxCoeff());
    }
    return d;
}

double adjoint_defect(const BiKernel& ret, const BiKernel& adv) {
    require_compatible(ret, adv);
    const SpectralModel& s = ret.spectral();
    const auto xi = spread_indices(s.N(), 8);
    const auto ts = time_samples(ret.grid());
    const int T = static_cast<int>(ts.size());
    std::vector<std::pair<int, int>> modes = ret.modes();
    for (const auto& p : adv.modes())
        if (std::find(modes.begin(), modes.end(), p) == modes.end()) modes.push_back(p);
    double d = 0.0;
    for (const auto& sec : s.sectors()) {
        std::vector<Eigen::MatrixXcd> partial(xi.size() * xi.size(), Eigen::MatrixXcd::Zero(T, T));
        for (const auto& [m, mode] : modes) {
            if (m != sec.m) continue;
            const Eigen::MatrixXcd Aa = adv.time_block(m, mode, ts, ts);
            const Eigen::MatrixXcd Ar = ret.time_block(m, mode, ts, ts).adjoint();
            const auto& phi = sec.phi;
            for (std::size_t p = 0; p < xi.size(); ++p)
                for (std::size_t q = 0; q < xi.size(); ++q) {
                    const double la = adv.left_factor()(xi[p]) * phi(xi[p], mode) * adv.right_factor()(xi[q]) *
                                      phi(xi[q], mode);
                    const double lr = ret.left_factor()(xi[q]) * phi(xi[q], mode) * ret.right_factor()(xi[p]) *
                                      phi(xi[p], mode);
                    partial[p * xi.size() + q] += Aa * la - Ar * lr;
                }
        }
        for (const auto& P : partial) d = std::max(d, P.cwiseAbs().maxCoeff());
    }
    return d;
}

double support_violation(const BiKernel& ret) {
    double v = 0.0;
    const int T = ret.grid().T;
    for (const auto& [m, mode] : ret.modes()) {
        const Eigen::MatrixXcd A = ret.time_matrix(m, mode);
        for (int j = 0; j < T; ++j)
            for (int i = 0; i <= j; ++i) v = std::max(v, std::abs(A(i, j)));
    }
    return v;
}

TwoPointReport verify_two_point(const BiKernel& lp, const BiKernel& lm, const BiKernel& g,
                                const TwoPointTolerances& tol) {
    require_compatible(lp, lm);
    require_compatible(lp, g);
    TwoPointReport r;
    r.p_residual_plus = wave_residual(lp);
    r.p_residual_minus = wave_residual(lm);
    r.p_residual_bound = std::max(p_residual_bound(lp), p_residual_bound(lm));
    r.pass_p = std::max(r.p_residual_plus, r.p_residual_minus) <= tol.p_residual_factor * r.p_residual_bound;
    const BiKernel diff = combine({{1.0, &lp}, {-1.0, &lm}});
    const BiKernel ig = combine({{I, &g}});
    r.commutator_defect = kernel_difference(diff, ig);
    r.pass_commutator = r.commutator_defect <= tol.commutator;
    r.hermiticity_defect = std::max(hermiticity_defect(lp), hermiticity_defect(lm));
    r.pass_hermitian = r.hermiticity_defect <= tol.hermiticity;
    const GramResult gp = gram_check(lp);
    const GramResult gm = gram_check(lm);
    r.gram_min_plus = gp.min_eig;
    r.gram_norm_plus = gp.norm;
    r.gram_min_minus = gm.min_eig;
    r.gram_norm_minus = gm.norm;
    r.pass_gram = gp.min_eig >= -tol.gram_relative * gp.norm && gm.min_eig >= -tol.gram_relative * gm.norm;
    return r;
}

// ---------------------------------------------------------------------------
// frequency sign

namespace {
int inferred_sign(KernelKind k) {
    if (k == KernelKind::lambda_plus) return 1;
    if (k == KernelKind::lambda_minus) return -1;
    throw PreconditionError("frequency_sign_test: pass sign = +1 or -1 for kernel kind " + to_string(k));
}
}  // namespace

FrequencyReport frequency_sign_scalar(const std::function<cd(double, double)>& kernel, const TimeGrid& g,
                                      double m_floor_sqrt, const FrequencyTestOptions& opts) {
    require(m_floor_sqrt > 0.0, "frequency_sign_test: m_floor_sqrt must be positive");
    const int sign = opts.sign;
    require(sign == 1 || sign == -1, "frequency_sign_test: sign must be +1 or -1");
    const double span = g.end() - g.at(0);
    const double Tw = opts.window > 0.0 ? opts.window : span;
    require(Tw <= span + 1e-12, "frequency_sign_test: window longer than the kernel grid");
    const double resolution = 2.0 * std::numbers::pi / Tw;
    require(resolution < m_floor_sqrt / 4.0,
            "frequency_sign_test: window too short (2 pi / T_w must be < m_floor_sqrt / 4)");
    const int n = static_cast<int>(std::floor(Tw / g.dt + 1e-9)) + 1;
    const double sc = g.at(0) + 0.5 * span;
    const Eigen::VectorXd win = fourier::kaiser(n, opts.kaiser_beta);
    Eigen::VectorXcd f(n);
    for (int i = 0; i < n; ++i) {
        const double tau = (i - 0.5 * (n - 1)) * g.dt;
        f(i) = win(i) * kernel(sc + tau, sc);
    }
    const int padded = std::max(1, opts.pad_factor) * n;
    const Eigen::VectorXcd F = fourier::dft(f, padded);
    double total = 0.0, forbidden = 0.0, pos = 0.0, neg = 0.0;
    for (int j = 0; j < padded; ++j) {
        const double lam = fourier::bin_frequency(j, padded, g.dt);
        const double p = std::norm(F(j));
        total += p;
        if (sign * lam <= 0.5 * m_floor_sqrt) forbidden += p;
        if (lam > 0.0) pos += p;
        if (lam < 0.0) neg += p;
    }
    FrequencyReport r;
    r.threshold = 0.5 * m_floor_sqrt;
    r.resolution = resolution;
    r.window = Tw;
    r.samples = n;
    if (total <= 0.0) throw NumericalError("frequency_sign_test: kernel has no spectral mass");
    r.forbidden_fraction = forbidden / total;
    r.positive_fraction = pos / total;
    r.negative_fraction = neg / total;
    r.pass = r.forbidden_fraction <= opts.tolerance;
    return r;
}

FrequencyReport frequency_sign_test(const BiKernel& k, double m_floor_sqrt, const FrequencyTestOptions& opts) {
    FrequencyTestOptions o = opts;
    if (o.sign == 0) o.sign = inferred_sign(k.kind());
    // energy-flat probe: mode k enters with weight omega_k, cancelling the 1/(2 omega_k)
    auto scalar = [&k](double t, double s) {
        cd acc = 0.0;
        for (const auto& [m, mode] : k.modes()) acc += k.omega(m, mode) * k.temporal(m, mode, t, s);
        return acc;
    };
    return frequency_sign_scalar(scalar, k.grid(), m_floor_sqrt, o);
}

FeynmanPair make_feynman(const BiKernel& lp, const BiKernel& lm, const BiKernel& ret, const BiKernel& adv,
                         double tol) {
    require_compatible(lp, lm);
    require_compatible(lp, ret);
    require_compatible(lp, adv);
    FeynmanPair out{combine({{-I, &lp}, {1.0, &adv}}, KernelKind::feynman),
                    combine({{I, &lm}, {1.0, &adv}}, KernelKind::antifeynman), 0.0};
    const BiKernel alt = combine({{-I, &lm}, {1.0, &ret}});
    out.consistency_defect = kernel_difference(out.feynman, alt);
    if (!(out.consistency_defect <= tol))
        throw NumericalError("make_feynman: -i Lambda^+ + P_-^{-1} != -i Lambda^- + P_+^{-1} (defect " +
                             std::to_string(out.consistency_defect) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// time slice

double TimeCutoff::operator()(double t) const {
    if (t <= t_a) return 0.0;
    if (t >= t_b) return 1.0;
    const double r = (t - t_a) / (t_b - t_a);
    const double a = std::exp(-1.0 / r);
    const double b = std::exp(-1.0 / (1.0 - r));
    return a / (a + b);
}

Eigen::MatrixXcd sample_solution(const SpectralModel& s, const ModeSolution& u, const TimeGrid& grid,
                                 Weighting weighting) {
    const auto& sec = s.sector(u.m);
    require(u.modes.size() == u.cos_coeff.size() && u.modes.size() == u.sin_coeff.size(),
            "mode solution: coefficient lists differ in length");
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(sec.n_modes(), grid.T);
    for (std::size_t q = 0; q < u.modes.size(); ++q) {
        const int k = u.modes[q];
        require(k >= 0 && k < sec.n_modes(), "mode solution: mode index out of range");
        const double w = sec.omega(k);
        for (int i = 0; i < grid.T; ++i)
            c(k, i) += u.cos_coeff[q] * std::cos(w * grid.at(i)) + u.sin_coeff[q] * std::sin(w * grid.at(i));
    }
    Eigen::MatrixXcd out = sec.phi.cast<cd>() * c;
    if (weighting == Weighting::physical) out = s.weight_left().cast<cd>().asDiagonal() * out;
    return out;
}

TimeSliceReport time_slice_check(const BiKernel& causal, const TimeCutoff& chi, const ModeSolution& u) {
    const TimeGrid& g = causal.grid();
    require(chi.t_a < chi.t_b, "time_slice_check: cutoff must rise from 0 to 1 (t_a < t_b)");
    require(chi.t_a >= g.at(2) && chi.t_b <= g.at(g.T - 3),
            "time_slice_check: cutoff must vary inside the grid interior");
    const SpectralModel& s = causal.spectral();
    const Eigen::MatrixXcd U = sample_solution(s, u, g, causal.weighting());
    Eigen::VectorXcd c(g.T);
    for (int i = 0; i < g.T; ++i) c(i) = chi(g.at(i));
    const Eigen::MatrixXcd CU = U * c.asDiagonal();
    const Eigen::MatrixXcd H = apply_wave_operator(s, u.m, CU, g.dt, causal.weighting()) -
                               apply_wave_operator(s, u.m, U, g.dt, causal.weighting()) * c.asDiagonal();
    const Eigen::MatrixXcd V = apply(causal, u.m, H);
    TimeSliceReport r;
    r.residual = (V - U).middleCols(1, g.T - 2).cwiseAbs().maxCoeff();
    r.solution_max = U.cwiseAbs().maxCoeff();
    return r;
}

}  // namespace kgads
