#include "kgads/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <json.hpp>

#include "kgads/config.hpp"
#include "kgads/error.hpp"
#include "kgads/holography.hpp"
#include "kgads/microlocal.hpp"
#include "kgads/propagators.hpp"
#include "kgads/spectral.hpp"

namespace kgads {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// configuration

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        require(known, where + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_tolerances(const json& j, VerifyTolerances& t) {
    reject_unknown(j,
                   {"spectral_oracle", "spectral_exact", "orthonormality", "spectral_calculus", "group_law",
                    "commutator", "adjoint", "hermiticity", "gram_relative", "feynman", "refinement_order",
                    "time_slice_factor", "frequency", "mutation_factor", "boundary_exponent", "exponent_chain",
                    "series_gain", "boundary_fit", "boundary_weight", "scan", "feynman_scan", "decay_order", "gbb"},
                   "tolerances");
    read_if(j, "spectral_oracle", t.spectral_oracle);
    read_if(j, "spectral_exact", t.spectral_exact);
    read_if(j, "orthonormality", t.orthonormality);
    read_if(j, "spectral_calculus", t.spectral_calculus);
    read_if(j, "group_law", t.group_law);
    read_if(j, "commutator", t.commutator);
    read_if(j, "adjoint", t.adjoint);
    read_if(j, "hermiticity", t.hermiticity);
    read_if(j, "gram_relative", t.gram_relative);
    read_if(j, "feynman", t.feynman);
    read_if(j, "refinement_order", t.refinement_order);
    read_if(j, "time_slice_factor", t.time_slice_factor);
    read_if(j, "frequency", t.frequency);
    read_if(j, "mutation_factor", t.mutation_factor);
    read_if(j, "boundary_exponent", t.boundary_exponent);
    read_if(j, "exponent_chain", t.exponent_chain);
    read_if(j, "series_gain", t.series_gain);
    read_if(j, "boundary_fit", t.boundary_fit);
    read_if(j, "boundary_weight", t.boundary_weight);
    read_if(j, "scan", t.scan);
    read_if(j, "feynman_scan", t.feynman_scan);
    read_if(j, "decay_order", t.decay_order);
    read_if(j, "gbb", t.gbb);
    for (double v : {t.spectral_oracle, t.spectral_exact, t.orthonormality, t.spectral_calculus, t.group_law,
                     t.commutator, t.adjoint, t.hermiticity, t.gram_relative, t.feynman, t.refinement_order,
                     t.time_slice_factor, t.frequency, t.mutation_factor, t.boundary_exponent, t.exponent_chain,
                     t.series_gain, t.boundary_fit, t.boundary_weight, t.scan, t.feynman_scan, t.decay_order, t.gbb})
        require(v > 0.0 && std::isfinite(v), "tolerances: every tolerance must be finite and > 0");
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("run config parse error: ") + e.what());
    }
    require(j.is_object(), "run config: top level must be an object");
    RunConfig c;
    try {
        reject_unknown(j, {"model", "numerics", "tolerances", "output_dir", "seed", "faults", "packets"}, "run config");
        if (j.contains("model")) {
            const json& m = j.at("model");
            if (m.is_string()) {
                std::filesystem::path p = m.get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                c.model = load_model_config(p);
            } else {
                c.model = model_from_json_text(m.dump(), base_dir);
            }
        }
        if (j.contains("numerics")) {
            const json& n = j.at("numerics");
            reject_unknown(n, {"N", "n_modes", "m_max", "T", "dt", "packet_modes"}, "numerics");
            read_if(n, "N", c.N);
            read_if(n, "n_modes", c.n_modes);
            read_if(n, "m_max", c.m_max);
            read_if(n, "T", c.T);
            read_if(n, "dt", c.dt);
            read_if(n, "packet_modes", c.packet_modes);
        }
        if (j.contains("tolerances")) read_tolerances(j.at("tolerances"), c.tol);
        if (j.contains("output_dir")) {
            std::filesystem::path p = j.at("output_dir").get<std::string>();
            c.output_dir = p.is_relative() ? base_dir / p : p;
        }
        read_if(j, "seed", c.seed);
        if (j.contains("faults")) {
            const json& f = j.at("faults");
            reject_unknown(f, {"sign_flip"}, "faults");
            read_if(f, "sign_flip", c.fault_sign_flip);
        }
        if (j.contains("packets")) {
            c.packets.clear();
            for (const json& p : j.at("packets")) {
                reject_unknown(p, {"x0", "xi0", "sigma", "sign"}, "packets");
                PacketConfig pc;
                read_if(p, "x0", pc.x0);
                read_if(p, "xi0", pc.xi0);
                read_if(p, "sigma", pc.sigma);
                const std::string sign = p.value("sign", std::string("plus"));
                require(sign == "plus" || sign == "minus", "packets: sign must be 'plus' or 'minus'");
                pc.sign = sign == "plus" ? EnergySign::plus : EnergySign::minus;
                c.packets.push_back(pc);
            }
        }
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("run config: ") + e.what());
    }
    require(c.N >= 64, "numerics: N must be >= 64");
    require(c.n_modes >= 10 && c.n_modes <= c.N / 4, "numerics: need 10 <= n_modes <= N/4");
    require(c.packet_modes >= c.n_modes && c.packet_modes <= c.N / 4, "numerics: need n_modes <= packet_modes <= N/4");
    require(c.m_max >= 0, "numerics: m_max must be >= 0");
    require(c.m_max == 0 || c.model.has_transverse(), "numerics: m_max > 0 needs a transverse circle");
    require(c.T >= 32, "numerics: T must be >= 32");
    require(c.dt > 0.0 && std::isfinite(c.dt), "numerics: dt must be > 0");
    require(!c.packets.empty(), "packets: at least one configuration is required");
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open run config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json_text(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// suites

namespace {

/// Portable uniform draws in [-1, 1) from a fixed-seed 64-bit engine.
class Draws {
public:
    explicit Draws(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-52 - 1.0; }
    double uniform(double lo, double hi) { return lo + 0.5 * (uniform() + 1.0) * (hi - lo); }

private:
    std::mt19937_64 eng_;
};

bool is_toy(const MetricModel& m) { return m.kind() != ModelKind::custom; }

double bessel_zero(double nu, int k) { return boost::math::cyl_bessel_j_zero(nu, k); }

/// Coefficient of x^{nu+1/2} in the normalized toy eigenfunction
/// sqrt(2)/(L |J_{nu+1}(j)|) sqrt(x) J_nu(j x / L).
double bessel_boundary_coefficient(double nu, double L, int k) {
    const double j = bessel_zero(nu, k);
    return std::sqrt(2.0) * std::pow(j / (2.0 * L), nu) /
           (L * std::tgamma(nu + 1.0) * std::abs(boost::math::cyl_bessel_j(nu + 1.0, j)));
}

double max_relative_oracle_error(const SpectralModel& s, int sector_m, int count) {
    const MetricModel& m = s.model();
    const auto& sec = s.sector(sector_m);
    double err = 0.0;
    for (int k = 0; k < count; ++k) {
        const double j = bessel_zero(m.nu(), k + 1) / m.L();
        const double exact = j * j + sec.transverse_eigenvalue;
        err = std::max(err, std::abs(sec.omega2(k) / exact - 1.0));
    }
    return err;
}

Eigen::VectorXcd random_span_vector(const SpectralModel& s, int modes, Draws& rng) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(s.n_modes());
    for (int k = 0; k < modes; ++k) c(k) = cd(rng.uniform(), rng.uniform());
    return s.sector(0).phi.cast<cd>() * c;
}

double rel_max(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

/// Smallest of the successive refinement orders log2(r_i / r_{i+1}).
double refinement_order(const std::vector<double>& r) {
    double order = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < r.size(); ++i) order = std::min(order, std::log2(r[i] / r[i + 1]));
    return order;
}

void geometry_suite(const RunConfig& c, Report& rep, Draws& rng) {
    const MetricModel& m = c.model;
    rep.add_flag("geometry.bf_bound", "nu > 0", m.nu() > 0.0);
    double root_defect = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + static_cast<int>(std::floor(rng.uniform(0.0, 5.0)));
        const double nu = rng.uniform(0.01, 5.0);
        const auto r = indicial_roots(n, nu);
        root_defect = std::max({root_defect, std::abs(r.nu_plus + r.nu_minus - (n - 1)),
                                std::abs(r.nu_plus - r.nu_minus - 2.0 * nu),
                                std::abs(r.nu_plus * r.nu_minus - ((n - 1) * (n - 1) / 4.0 - nu * nu))});
    }
    rep.add("geometry.indicial_root_identities", "nu_+ + nu_- = n - 1, nu_+ - nu_- = 2 nu", root_defect, 1e-12);

    double homog = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(0.05, 0.95) * m.L();
        PhasePointB p = PhasePointB::make(x, 0.0, rng.uniform(), rng.uniform());
        if (m.has_transverse()) {
            p.y = 0.0;
            p.zeta = rng.uniform();
        }
        const double base = conformal_symbol(m, p);
        for (double lam : {2.0, 10.0}) {
            PhasePointB q = PhasePointB::make(x, 0.0, lam * p.tau, lam * *p.xi, p.y,
                                              p.zeta ? std::optional<double>(lam * *p.zeta) : std::nullopt);
            const double scale = lam * lam * (p.tau * p.tau + *p.xi * *p.xi + p.zeta_or_zero() * p.zeta_or_zero());
            homog = std::max(homog, std::abs(conformal_symbol(m, q) - lam * lam * base) / scale);
        }
    }
    rep.add("geometry.symbol_homogeneity", "p~(lambda q) = lambda^2 p~(q)", homog, 1e-13);
    const double C = m.beta_bound();
    rep.add("geometry.beta_bounded", "C <= beta <= 1/C", C, 1e-12,
            Comparison::at_least);
    if (is_toy(m))
        rep.add_flag("geometry.toy_exact_evenness", "beta, k constant",
                     m.evenness_order() == MetricModel::kExactEvenness);

    // reflected null rays: continuity of (t, y, tau, zeta), time symmetry of the return
    double refl_defect = 0.0;
    bool monotone = true;
    double drift = 0.0;
    for (double a : {0.2 * m.L(), 0.5 * m.L()}) {
        const double tau = std::sqrt(m.beta()(a));
        const GBBPath path = trace_gbb(m, PhasePointB::make(a, 0.0, tau, -1.0), 1.5 * a * 4.0, 1e-3);
        monotone = monotone && path.t_monotone();
        drift = std::max(drift, path.max_symbol_drift);
        require(!path.reflections.empty() && !path.reflections.front().artificial,
                "geometry: traced ray did not meet the boundary");
        const auto& ev = path.reflections.front();
        refl_defect = std::max({refl_defect, std::abs(ev.point.tau - tau), std::abs(ev.xi_in + ev.xi_out),
                                std::abs(path.x_at(2.0 * ev.point.t) - a)});
        if (is_toy(m)) refl_defect = std::max(refl_defect, std::abs(ev.point.t - a));
    }
    rep.add("gbb.boundary_reflection", "xi -> -xi with (t, tau) continuous; return to x0 at 2 t_hit", refl_defect,
            c.tol.gbb);
    rep.add_flag("gbb.time_monotone", "t strictly monotone along GBBs", monotone);
    rep.add("gbb.symbol_drift", "p~ = 0 along Hamilton arcs", drift, 1e-8);
}

struct SpectralSuite {
    std::shared_ptr<const SpectralModel> s;
};

SpectralSuite spectral_suite(const RunConfig& c, Report& rep, Draws& rng) {
    const MetricModel& m = c.model;
    SpectralOptions so;
    so.N = c.N;
    so.n_modes = c.n_modes;
    so.m_max = c.m_max;
    auto s = build_spectral(m, so);
    const int count = std::min(10, s->n_modes());
    if (is_toy(m)) {
        double err = 0.0;
        for (const auto& sec : s->sectors()) err = std::max(err, max_relative_oracle_error(*s, sec.m, count));
        rep.add("spectral.bessel_oracle", "omega_k = j_{nu,k} / L (+ transverse shift)", err, c.tol.spectral_oracle);
        SpectralOptions coarse = so;
        coarse.m_max = 0;
        coarse.N = std::max(64, c.N / 4);
        coarse.n_modes = std::min(c.n_modes, coarse.N / 4);
        SpectralOptions mid = coarse;
        mid.N = std::max(64, c.N / 2);
        const double e1 = max_relative_oracle_error(*build_spectral(m, coarse), 0, count);
        const double e2 = max_relative_oracle_error(*build_spectral(m, mid), 0, count);
        rep.add("spectral.refinement_decrease", "eigenvalue error decreases under N -> 2N", e2 / e1, 1.0);
        const MetricModel half = make_toy_model(ModelKind::ads2_strip, 0.5, m.L());
        SpectralOptions ho = so;
        ho.m_max = 0;
        const auto sh = build_spectral(half, ho);
        double exact = 0.0;
        for (int k = 0; k < count; ++k) {
            const double w = (k + 1) * M_PI / m.L();
            exact = std::max(exact, std::abs(sh->sector(0).omega2(k) / (w * w) - 1.0));
        }
        rep.add("spectral.half_integer_exact", "nu = 1/2: omega_k^2 = (k pi / L)^2", exact, c.tol.spectral_exact);
    } else {
        SpectralOptions fine = so;
        fine.N = 2 * c.N;
        fine.m_max = 0;
        const auto sf = build_spectral(m, fine);
        double err = 0.0;
        for (int k = 0; k < count; ++k)
            err = std::max(err, std::abs(s->sector(0).omega2(k) / sf->sector(0).omega2(k) - 1.0));
        rep.add("spectral.refinement_agreement", "omega_k^2 stable under N -> 2N", err, c.tol.spectral_oracle);
    }

    double ortho = 0.0;
    double floor_gap = std::numeric_limits<double>::infinity();
    for (const auto& sec : s->sectors()) {
        const Eigen::MatrixXd G = sec.phi.transpose() * s->weights().asDiagonal() * sec.phi;
        ortho = std::max(ortho, (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff());
        floor_gap = std::min(floor_gap, sec.omega2.minCoeff() - s->m2_floor());
    }
    rep.add("spectral.orthonormality", "<phi_j, phi_k> = delta_jk", ortho, c.tol.orthonormality);
    rep.add("spectral.positive_floor", "A >= m^2 > 0", s->m2_floor(), 1e-12,
            Comparison::at_least);
    rep.add("spectral.floor_certified", "omega_k^2 >= m2_floor", floor_gap, 0.0, Comparison::at_least);

    // spectral calculus on a random vector in the span of the lowest modes
    const Eigen::VectorXcd v = random_span_vector(*s, count, rng);
    const double t = 0.37, h = 3e-4;
    auto S = [&](double tt) { return Eigen::VectorXcd(func_of_A(*s, SpectralFunction::sin_t_sqrt, {tt, 1}) * v); };
    const Eigen::VectorXcd dS = (-S(t + 2 * h) + 8.0 * S(t + h) - 8.0 * S(t - h) + S(t - 2 * h)) / (12.0 * h);
    const Eigen::VectorXcd Cv = func_of_A(*s, SpectralFunction::cos_t_sqrt, {t, 1}) * v;
    rep.add("spectral.sin_cos_derivative", "d/dt sin(t w)/w = cos(t w)", rel_max(dS, Cv), c.tol.spectral_calculus);
    auto U = [&](double tt, const Eigen::VectorXcd& w) {
        return Eigen::VectorXcd(func_of_A(*s, SpectralFunction::exp_pm_it_sqrt, {tt, 1}) * w);
    };
    const Eigen::VectorXcd u1 = U(0.6, v);
    const double unitary = std::abs(std::sqrt(std::abs(s->inner(u1, u1))) / std::sqrt(std::abs(s->inner(v, v))) - 1.0);
    rep.add("spectral.unitary_evolution", "|exp(i t A^{1/2}) v| = |v|", unitary, c.tol.group_law);
    rep.add("spectral.group_law", "U(t1) U(t2) = U(t1 + t2)", rel_max(U(0.25, U(0.35, v)), u1), c.tol.group_law);
    const Eigen::VectorXcd inv = func_of_A(*s, SpectralFunction::inv, {}) * s->apply_form(0, v);
    rep.add("spectral.inverse_consistency", "A^{-1} A = 1 on the mode span", rel_max(inv, v), 1e-8);

    const Eigen::VectorXd phi1 = s->sector(0).phi.col(0);
    const auto probe = mellin_exponent_probe(phi1, s->x(), m);
    rep.add("spectral.boundary_exponent", "phi_1 ~ x^{nu + 1/2}", std::abs(probe.alpha_hat - (m.nu() + 0.5)),
            c.tol.boundary_exponent);
    return {s};
}

struct Kernels {
    BiKernel ret, adv, causal, plus, minus;
};

Kernels make_kernels(std::shared_ptr<const SpectralModel> s, const TimeGrid& g, Weighting w) {
    return {make_propagator(s, KernelKind::retarded, g, w), make_propagator(s, KernelKind::advanced, g, w),
            make_propagator(s, KernelKind::causal, g, w), make_propagator(s, KernelKind::lambda_plus, g, w),
            make_propagator(s, KernelKind::lambda_minus, g, w)};
}

void two_point_records(Report& rep, const std::string& tag, const TwoPointReport& r, const VerifyTolerances& tol) {
    rep.add("propagators.commutator_" + tag, "Lambda^+ - Lambda^- = i G", r.commutator_defect, tol.commutator);
    rep.add("propagators.hermiticity_" + tag, "Lambda^pm(t, s) = Lambda^pm(s, t)^*", r.hermiticity_defect,
            tol.hermiticity);
    const double gp = -std::min(0.0, r.gram_min_plus) / std::max(r.gram_norm_plus, 1e-300);
    const double gm = -std::min(0.0, r.gram_min_minus) / std::max(r.gram_norm_minus, 1e-300);
    rep.add("propagators.positivity_" + tag, "Lambda^pm >= 0", std::max(gp, gm), tol.gram_relative, Comparison::at_most,
            "most negative Gram eigenvalue relative to the Gram norm");
    rep.add("propagators.bisolution_" + tag, "P Lambda^pm = 0 up to the central-difference error",
            std::max(r.p_residual_plus, r.p_residual_minus) / r.p_residual_bound, 1.0, Comparison::at_most,
            "residual over the predicted time-stencil error");
}

/// Largest |a_k(t, s)| of an advanced kernel on sampled pairs with t > s.
double wrong_side(const BiKernel& adv) {
    const TimeGrid& g = adv.grid();
    const int stride = std::max(1, g.T / 128);
    double v = 0.0;
    for (const auto& [m, mode] : adv.modes())
        for (int i = 0; i < g.T; i += stride)
            for (int j = 0; j < i; j += stride) v = std::max(v, std::abs(adv.temporal(m, mode, g.at(i), g.at(j))));
    return v;
}

void propagator_suite(const RunConfig& c, const SpectralModel& sref, std::shared_ptr<const SpectralModel> s,
                      const Kernels& k, const BiKernel& plus_checked, Report& rep, Draws& rng) {
    TwoPointTolerances tp;
    tp.commutator = c.tol.commutator;
    tp.hermiticity = c.tol.hermiticity;
    tp.gram_relative = c.tol.gram_relative;
    two_point_records(rep, "tilde", verify_two_point(plus_checked, k.minus, k.causal, tp), c.tol);

    const Kernels phys = make_kernels(s, k.plus.grid(), Weighting::physical);
    const BiKernel phys_plus = c.fault_sign_flip ? flip_mode_signs(phys.plus, 1) : phys.plus;
    two_point_records(rep, "physical", verify_two_point(phys_plus, phys.minus, phys.causal, tp), c.tol);

    rep.add("propagators.adjoint", "(P_+^{-1})^* = P_-^{-1}", adjoint_defect(k.ret, k.adv), c.tol.adjoint);
    rep.add("propagators.retarded_support", "supp P_+^{-1} in {t >= s}", support_violation(k.ret), 0.0);
    rep.add("propagators.advanced_support", "supp P_-^{-1} in {t <= s}", wrong_side(k.adv), 0.0);
    rep.add("propagators.causal_difference", "G = P_+^{-1} - P_-^{-1}",
            kernel_difference(k.causal, combine({{1.0, &k.ret}, {-1.0, &k.adv}})), c.tol.commutator);
    // infinite tolerance: the defect is recorded, not thrown, so a faulty kernel still yields a report
    const FeynmanPair f =
        make_feynman(plus_checked, k.minus, k.ret, k.adv, std::numeric_limits<double>::infinity());
    rep.add("propagators.feynman_consistency", "i^{-1} Lambda^+ + P_-^{-1} = i^{-1} Lambda^- + P_+^{-1}",
            f.consistency_defect, c.tol.feynman);

    // refinement orders on a short grid of a lighter model
    SpectralOptions lo;
    lo.N = std::min(c.N, 400);
    lo.n_modes = std::min(20, lo.N / 4);
    auto sl = build_spectral(sref.model(), lo);
    std::vector<double> r_lambda, r_inv;
    for (double dt : {8e-3, 4e-3, 2e-3}) {
        const TimeGrid g{0.0, dt, static_cast<int>(std::lround(1.6 / dt)) + 1};
        r_lambda.push_back(wave_residual(make_propagator(sl, KernelKind::lambda_plus, g, Weighting::tilde)));
        r_inv.push_back(inverse_residual(make_propagator(sl, KernelKind::retarded, g, Weighting::tilde), 0, 6));
    }
    rep.add("propagators.lambda_refinement_order", "P Lambda^pm = O(dt^2)", refinement_order(r_lambda),
            c.tol.refinement_order, Comparison::at_least);
    rep.add("propagators.inverse_refinement_order", "P P_+^{-1} - 1 = O(dt^2)", refinement_order(r_inv),
            c.tol.refinement_order, Comparison::at_least);

    // time-slice identity on a random 10-mode solution
    ModeSolution u;
    for (int q = 0; q < std::min(10, sl->n_modes()); ++q) {
        u.modes.push_back(q);
        u.cos_coeff.push_back(rng.uniform());
        u.sin_coeff.push_back(rng.uniform());
    }
    std::vector<double> r_slice;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        const TimeGrid g{0.0, dt, static_cast<int>(std::lround(1.6 / dt)) + 1};
        const TimeCutoff chi{0.5, 1.1};
        const auto G = make_propagator(sl, KernelKind::causal, g, Weighting::tilde);
        const auto r = time_slice_check(G, chi, u);
        r_slice.push_back(r.residual / r.solution_max);
    }
    const double p = std::log2(r_slice[0] / r_slice[1]);
    const double predicted = r_slice[1] * std::pow(0.5, p);
    rep.add("propagators.time_slice", "G [P, chi] u = u", r_slice[2] / predicted, c.tol.time_slice_factor,
            Comparison::at_most, "residual at dt = 1e-3 over the order-fit prediction");
}

void frequency_suite(const RunConfig& c, const SpectralModel& s, const Kernels& k, const BiKernel& plus_checked,
                     Report& rep) {
    const double mf = s.m_floor_sqrt();
    FrequencyTestOptions fo;
    fo.window = std::min(40.0 / mf, k.plus.grid().end() - k.plus.grid().at(0));
    fo.tolerance = c.tol.frequency;
    const auto fp = frequency_sign_test(plus_checked, mf, fo);
    const auto fm = frequency_sign_test(k.minus, mf, fo);
    rep.add("frequency.lambda_plus", "chi_-(D_t) Lambda^+ = 0", fp.forbidden_fraction, c.tol.frequency);
    rep.add("frequency.lambda_minus", "chi_+(D_t) Lambda^- = 0", fm.forbidden_fraction, c.tol.frequency);
    const int flips = std::max(1, s.n_modes() / 100);
    const auto fmut = frequency_sign_test(flip_mode_signs(k.plus, flips), mf, fo);
    rep.add("frequency.mutation_detected", "one-sided spectrum fails for sign-flipped modes",
            fmut.forbidden_fraction / c.tol.frequency, c.tol.mutation_factor, Comparison::at_least);
    FrequencyTestOptions fg = fo;
    fg.sign = 1;
    const auto fc = frequency_sign_test(k.causal, mf, fg);
    rep.add("frequency.causal_two_sided", "G carries both frequency signs",
            std::min(fc.positive_fraction, fc.negative_fraction), 0.1, Comparison::at_least);
}

void holography_suite(const RunConfig& c, std::shared_ptr<const SpectralModel> s, Report& rep, Draws& rng) {
    const MetricModel& m = s->model();
    const auto roots = indicial_roots(m);
    rep.add("indicial.root_plus", "c_{nu_+} = 0", std::abs(indicial_polynomial(m, roots.nu_plus)), 0.0);
    rep.add("indicial.root_minus", "c_{nu_-} = 0", std::abs(indicial_polynomial(m, roots.nu_minus)), 0.0);
    const double mid = 0.5 * (roots.nu_plus + roots.nu_minus);
    const double sym = std::abs(indicial_polynomial(m, mid + 0.3) - indicial_polynomial(m, mid - 0.3)) +
                       std::abs(indicial_polynomial(m, mid) - m.nu() * m.nu());
    rep.add("indicial.symmetry", "c_{nu_+ + s} = c_{nu_- - s}, c_mid = nu^2", sym, 1e-12);

    // series gains on a model with odd terms (even toys gain two orders at a time)
    const MetricModel series_model =
        m.evenness_order() == 0
            ? m
            : make_custom_model(m.n(), m.nu(), m.L(), m.ell(),
                                CoefficientFunction::from_closure([](double x) { return 1.0 + 0.5 * x; },
                                                                  [](double) { return 0.5; }),
                                CoefficientFunction::constant(1.0));
    std::vector<double> slopes;
    double slope_floor = std::numeric_limits<double>::infinity();
    for (int K = 0; K <= 4; ++K) {
        const auto sr = build_series(series_model, {{1.0, 0, 1.0}}, K);
        slopes.push_back(sr.residual_slope);
        slope_floor = std::min(slope_floor, sr.residual_slope - (roots.nu_plus + K + 1));
    }
    double gain = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i) gain = std::min(gain, slopes[i + 1] - slopes[i]);
    rep.add("indicial.series_gain", "P u_K = O(x^{nu_+ + K + 1}), one order per K", gain, c.tol.series_gain,
            Comparison::at_least);
    rep.add("indicial.series_slope", "slope of P u_K >= nu_+ + K + 1", slope_floor, -0.05, Comparison::at_least);
    const auto zero = build_series(m, {{1.0, 0, 0.0}}, 2);
    double zmax = 0.0;
    for (double x : {1e-3, 1e-2, 1e-1}) zmax = std::max(zmax, std::abs(series_residual(m, zero, 0, x)));
    rep.add("indicial.zero_data", "w_0 = 0 gives u_K = 0", zmax, 0.0);

    // exponents
    double chain = 0.0;
    const auto& sec = s->sector(0);
    for (int k = 0; k < sec.n_modes(); ++k) {
        const double hi = std::min(m.L() / 20.0, 0.2 / sec.omega(k));
        const auto pr = mellin_exponent_probe(Eigen::VectorXd(sec.phi.col(k)), s->x(), m, 0.0, hi);
        chain = std::max(chain, std::abs(pr.alpha_hat + (m.n() / 2.0 - 1.0) - roots.nu_plus));
    }
    rep.add("indicial.exponent_chain", "alpha(phi_k) + n/2 - 1 = nu_+", chain, c.tol.exponent_chain);
    const Eigen::VectorXd syn = s->x().array().pow(0.7);
    rep.add("indicial.exponent_synthetic", "x^{0.7} -> 0.7", std::abs(mellin_exponent_probe(syn, s->x(), m).alpha_hat - 0.7),
            1e-6);
    Eigen::VectorXd noise(s->N());
    for (int i = 0; i < s->N(); ++i) noise(i) = rng.uniform();
    rep.add_flag("indicial.exponent_noise_flagged", "noise has no leading exponent",
                 !mellin_exponent_probe(noise, s->x(), m).reliable);

    // weighted restriction
    Eigen::VectorXcd poly(s->N());
    for (int i = 0; i < s->N(); ++i) {
        const double x = s->x()(i);
        poly(i) = std::pow(x, roots.nu_plus) * (1.0 + x);
    }
    const auto pf = extract_boundary(poly, s->x(), m, Weighting::physical);
    rep.add("boundary.restriction_exact", "d_+ x^{nu_+}(1 + x) = 1", std::abs(pf.value - 1.0), c.tol.boundary_fit);
    Eigen::VectorXcd dirty = poly;
    for (int i = 0; i < s->N(); ++i) dirty(i) += 1e-8 * std::pow(s->x()(i), roots.nu_minus);
    bool flagged = false;
    try {
        flagged = extract_boundary(dirty, s->x(), m, Weighting::physical).contaminated;
    } catch (const NumericalError&) {
        flagged = true;
    }
    rep.add_flag("boundary.contamination_detected", "x^{nu_-} branch is not Dirichlet data", flagged);
    if (is_toy(m)) {
        const auto f1 = extract_boundary(sec.phi.col(0).cast<cd>(), s->x(), m, Weighting::tilde);
        const double oracle = bessel_boundary_coefficient(m.nu(), m.L(), 1);
        rep.add("boundary.ground_mode_coefficient", "phi_1 ~ c_1 x^{nu + 1/2}, c_1 from J_nu asymptotics",
                std::abs(std::abs(f1.value) / oracle - 1.0), c.tol.boundary_weight);
    }

    // boundary two-point function on a shorter grid
    const double mf = s->m_floor_sqrt();
    const int Tb = std::min(c.T, 600);
    const TimeGrid gb{0.0, c.dt, Tb};
    const auto lp = make_propagator(s, KernelKind::lambda_plus, gb, Weighting::physical);
    const auto lm = make_propagator(s, KernelKind::lambda_minus, gb, Weighting::physical);
    const auto bp = boundary_two_point(lp);
    const auto bm = boundary_two_point(lm);
    FrequencyTestOptions fo;
    fo.tolerance = c.tol.frequency;
    const auto rp = verify_boundary_kernel(bp, mf, fo);
    const auto rm = verify_boundary_kernel(bm, mf, fo);
    rep.add("boundary.hermitian", "k^pm(t, s) = k^pm(s, t)^*", std::max(rp.hermiticity_defect, rm.hermiticity_defect),
            c.tol.hermiticity);
    rep.add("boundary.positivity", "d_+ Lambda^pm d_+^* >= 0",
            std::max(-std::min(0.0, rp.gram_min) / rp.gram_norm, -std::min(0.0, rm.gram_min) / rm.gram_norm),
            c.tol.gram_relative);
    rep.add("boundary.one_sided_frequency", "WF'(d_+ Lambda^pm d_+^*) in +-(Gamma x Gamma)",
            std::max(rp.frequency.forbidden_fraction, rm.frequency.forbidden_fraction), c.tol.frequency);
    if (is_toy(m)) {
        double werr = 0.0;
        const auto lines = bp.spectral_lines();
        int seen = 0;
        for (const auto& ln : lines) {
            if (ln.m != 0 || seen >= 5) continue;
            const double cb = bessel_boundary_coefficient(m.nu(), m.L(), seen + 1);
            const double w = bessel_zero(m.nu(), seen + 1) / m.L();
            werr = std::max(werr, std::abs(ln.weight / (cb * cb / (2.0 * w)) - 1.0));
            ++seen;
        }
        rep.add("boundary.line_weights", "weight_k = c_k^2 / (2 omega_k)", werr, c.tol.boundary_weight);
    }
}

void wavepacket_suite(const RunConfig& c, Report& rep) {
    SpectralOptions so;
    so.N = c.N;
    so.n_modes = c.packet_modes;
    const auto s = build_spectral(c.model, so);
    for (std::size_t i = 0; i < c.packets.size(); ++i) {
        const PacketConfig& p = c.packets[i];
        const std::string tag = "wavepacket." + std::to_string(i + 1);
        const Wavepacket w = make_wavepacket(*s, p.x0, p.xi0, p.sigma, p.sign);
        const PacketMoments mo = wavepacket_moments(*s, w);
        const double spread = std::max(mo.var_x / (2.0 * p.sigma * p.sigma),
                                       (mo.var_xi + (mo.mean_xi - p.xi0) * (mo.mean_xi - p.xi0)) * p.sigma *
                                           p.sigma / 2.0);
        rep.add(tag + ".localization", "Var x <= 2 sigma^2, Var xi <= 2 / sigma^2", spread, 1.0);
        const Trajectory tr = evolve_and_track(*s, w, 2.2 * p.x0, 1e-3);
        double ratio = 0.0;
        for (const auto& pt : tr.points) ratio = std::max(ratio, pt.deviation / std::max(p.sigma, pt.spread));
        rep.add(tag + ".gbb_agreement", "centroid follows the reflected GBB within the packet width",
                tr.has_gbb && !tr.partial ? ratio : std::numeric_limits<double>::quiet_NaN(), 1.0);
        double expected = std::numeric_limits<double>::quiet_NaN();
        for (const auto& ev : tr.gbb.reflections)
            if (!ev.artificial) {
                expected = 2.0 * ev.point.t;
                break;
            }
        rep.add(tag + ".return_time", "return to x0 at 2 x0 / (unit speed)", std::abs(tr.return_time - expected) / p.sigma,
                2.0, Comparison::at_most, "|t_return - 2 t_hit| in units of sigma");
    }
}

void scan_suite(const RunConfig& c, const SpectralModel& s, const Kernels& k, const BiKernel& plus_checked,
                Report& rep) {
    const double mf = s.m_floor_sqrt();
    ScanOptions so;
    so.window = 40.0 / mf;
    so.tolerance = c.tol.scan;
    rep.add("scan.lambda_plus", "WF'_b(Lambda^+) in N+ x N+", kernel_wavefront_scan(plus_checked, mf, so).max_off_pattern,
            c.tol.scan);
    rep.add("scan.lambda_minus", "WF'_b(Lambda^-) in N- x N-", kernel_wavefront_scan(k.minus, mf, so).max_off_pattern,
            c.tol.scan);
    rep.add("scan.causal", "WF'(G) in diagonal quadrants", kernel_wavefront_scan(k.causal, mf, so).max_off_pattern,
            c.tol.scan);
    const auto f = make_feynman(k.plus, k.minus, k.ret, k.adv, c.tol.feynman);
    ScanOptions sf = so;
    sf.tolerance = c.tol.feynman_scan;
    rep.add("scan.feynman", "P_F^{-1}: N+ for t > s, N- for t < s", kernel_wavefront_scan(f.feynman, mf, sf).max_off_pattern,
            c.tol.feynman_scan);
    rep.add("scan.antifeynman", "P_Fbar^{-1}: N- for t > s, N+ for t < s",
            kernel_wavefront_scan(f.antifeynman, mf, sf).max_off_pattern, c.tol.feynman_scan);
    const int flips = std::max(1, s.n_modes() / 100);
    rep.add("scan.mutation_detected", "quadrant scan fails for sign-flipped modes",
            kernel_wavefront_scan(flip_mode_signs(k.plus, flips), mf, so).max_off_pattern / c.tol.scan,
            c.tol.mutation_factor, Comparison::at_least);
    double worst = 0.0;
    double prev = -1.0;
    for (double f_w : {30.0, 40.0, 60.0}) {
        ScanOptions sw = so;
        sw.window = f_w / mf;
        const double v = kernel_wavefront_scan(k.plus, mf, sw).max_off_pattern;
        if (prev > 0.0) worst = std::max(worst, v / prev);
        prev = v;
    }
    rep.add("scan.window_convergence", "off-pattern mass non-increasing in T_w", worst, 1.1, Comparison::at_most,
            "largest ratio between successive window lengths");
}

void state_suite(const RunConfig& c, const SpectralModel& s, const Kernels& k, Report& rep) {
    const double mf = s.m_floor_sqrt();
    TwoPointTolerances tp;
    tp.commutator = c.tol.commutator;
    tp.hermiticity = c.tol.hermiticity;
    tp.gram_relative = c.tol.gram_relative;

    const StatePair same = make_perturbed_state(k.plus, k.minus, RotationSpec{});
    rep.add("states.empty_rotation", "no rotation gives the same state", kernel_difference(same.plus_b, same.plus_a), 0.0);

    RotationSpec rot;
    rot.rotations = {{0, 0, 0.3}};
    const StatePair rp = make_perturbed_state(k.plus, k.minus, rot);
    const auto rr = verify_two_point(rp.plus_b, rp.minus_b, k.causal, tp);
    rep.add_flag("states.rotated_two_point", "rotated state is a two-point function", rr.pass());
    rep.add("states.rotated_commutator", "Lambda^+_B - Lambda^-_B = i G", rr.commutator_defect, c.tol.commutator);

    RotationSpec th;
    th.thermal_beta = 5.0 / mf;
    const StatePair tp_pair = make_perturbed_state(k.plus, k.minus, th);
    const auto tr = verify_two_point(tp_pair.plus_b, tp_pair.minus_b, k.causal, tp);
    rep.add_flag("states.thermal_two_point", "thermal state is a two-point function", tr.pass());
    ScanOptions so;
    so.window = 40.0 / mf;
    so.tolerance = c.tol.scan;
    const double sp = kernel_wavefront_scan(tp_pair.plus_b, mf, so).max_off_pattern;
    const double sm = kernel_wavefront_scan(tp_pair.minus_b, mf, so).max_off_pattern;
    rep.add("states.thermal_scan", "WF'_b(Lambda^pm_B) in N+- x N+-", std::max(sp, sm), c.tol.scan);
    DecayOptions dopt;
    dopt.min_order = c.tol.decay_order;
    const auto dp = kernel_decay_order(tp_pair.difference_plus(), mf, dopt);
    const auto dm = kernel_decay_order(tp_pair.difference_minus(), mf, dopt);
    rep.add("states.difference_smooth", "Lambda^pm_B - Lambda^pm_A smooth (decay order)", std::min(dp.order, dm.order),
            c.tol.decay_order, Comparison::at_least);
}

}  // namespace

VerifyResult run_verify(const RunConfig& c) {
    require(c.model.nu() > 0.0, "BF bound violated (nu <= 0)");
    VerifyResult out;
    Report& rep = out.report;
    Draws rng(c.seed);

    geometry_suite(c, rep, rng);
    const SpectralSuite sp = spectral_suite(c, rep, rng);
    const auto& s = sp.s;

    const TimeGrid g{0.0, c.dt, c.T};
    const Kernels k = make_kernels(s, g, Weighting::tilde);
    const BiKernel plus_checked = c.fault_sign_flip ? flip_mode_signs(k.plus, 1) : k.plus;

    propagator_suite(c, *s, s, k, plus_checked, rep, rng);
    frequency_suite(c, *s, k, plus_checked, rep);
    holography_suite(c, s, rep, rng);
    wavepacket_suite(c, rep);
    scan_suite(c, *s, k, plus_checked, rep);
    state_suite(c, *s, k, rep);

    out.exit_code = rep.all_pass() ? 0 : 1;
    return out;
}

}  // namespace kgads
