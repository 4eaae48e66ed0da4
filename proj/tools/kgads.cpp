// kgads: command-line front end for the Klein-Gordon / AdS toolkit.
//
// Exit codes: 0 success (verify: every check passed), 1 numerical failure,
// 2 usage or configuration error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgads/bchar.hpp"
#include "kgads/binary_io.hpp"
#include "kgads/config.hpp"
#include "kgads/csv.hpp"
#include "kgads/error.hpp"
#include "kgads/holography.hpp"
#include "kgads/microlocal.hpp"
#include "kgads/parallel.hpp"
#include "kgads/propagators.hpp"
#include "kgads/spectral.hpp"
#include "kgads/verify.hpp"

namespace fs = std::filesystem;
using namespace kgads;

namespace {

struct ModelArgs {
    std::string model = "ads2_strip";
    std::optional<double> nu;
    std::optional<double> L;
    std::optional<double> ell;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "Model config file, or a toy kind (ads2_strip, ads3_cylinder)");
        app->add_option("--nu", nu, "Override nu for toy kinds");
        app->add_option("--L", L, "Override the truncation radius for toy kinds");
        app->add_option("--ell", ell, "Override the circle circumference for ads3_cylinder");
    }

    MetricModel load() const {
        if (model == "ads2_strip" || model == "ads3_cylinder") {
            const ModelKind kind = model_kind_from_string(model);
            std::optional<double> circle = ell;
            if (kind == ModelKind::ads3_cylinder && !circle) circle = 2.0 * M_PI;
            return make_toy_model(kind, nu.value_or(1.0), L.value_or(1.0), circle);
        }
        require(!nu && !L && !ell, "--nu/--L/--ell override toy kinds only; edit the model file instead");
        return load_model_config(model);
    }
};

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw PreconditionError("cannot write " + p.string());
    return out;
}

void emit_json(const nlohmann::ordered_json& j, const std::optional<fs::path>& path) {
    if (path) {
        auto out = open_out(*path);
        out << j.dump(2) << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
}

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return csv::format_double(v);
}

// --- trace-gbb ------------------------------------------------------------

struct TraceArgs {
    ModelArgs model;
    double x0 = 0.5, t0 = 0.0, tau = 1.0, xi = -1.0;
    std::optional<double> zeta;
    double tmax = 1.0, step = 1e-3;
    std::string out;
};

int run_trace(const TraceArgs& a) {
    const MetricModel m = a.model.load();
    PhasePointB p = PhasePointB::make(a.x0, a.t0, a.tau, a.xi);
    if (m.has_transverse()) {
        p.y = 0.0;
        p.zeta = a.zeta.value_or(0.0);
    } else {
        require(!a.zeta, "--zeta needs a model with a transverse circle");
    }
    const GBBPath path = trace_gbb(m, p, a.tmax, a.step);
    if (a.out.empty()) {
        write_gbb_csv(std::cout, path);
    } else {
        auto out = open_out(a.out);
        write_gbb_csv(out, path);
    }
    std::cerr << "segments " << path.segments.size() << ", reflections " << path.reflections.size()
              << ", max symbol drift " << path.max_symbol_drift << "\n";
    return 0;
}

// --- build-spectral -------------------------------------------------------

struct BuildArgs {
    ModelArgs model;
    int N = 2000, modes = 40, mmax = 0;
    std::string out = "model.bin";
    bool json = false;
};

int run_build(const BuildArgs& a) {
    SpectralOptions o;
    o.N = a.N;
    o.n_modes = a.modes;
    o.m_max = a.mmax;
    const auto s = build_spectral(a.model.load(), o);
    binary::save_model(a.out, *s);
    if (a.json) {
        nlohmann::ordered_json j;
        j["N"] = s->N();
        j["n_modes"] = s->n_modes();
        j["m2_floor"] = s->m2_floor();
        nlohmann::ordered_json sectors = nlohmann::ordered_json::array();
        for (const auto& sec : s->sectors()) {
            nlohmann::ordered_json e;
            e["m"] = sec.m;
            e["omega2"] = std::vector<double>(sec.omega2.data(), sec.omega2.data() + sec.omega2.size());
            sectors.push_back(e);
        }
        j["sectors"] = sectors;
        emit_json(j, std::nullopt);
    } else {
        std::cerr << "wrote " << a.out << " (N " << s->N() << ", " << s->sectors().size() << " sector(s), "
                  << s->n_modes() << " modes, m2_floor " << s->m2_floor() << ")\n";
    }
    return 0;
}

// --- kernels --------------------------------------------------------------

struct KernelArgs {
    std::string model_bin;
    std::string kind = "lambda_plus";
    double tmin = 0.0, tmax = 10.0;
    int T = 501;
    std::string weighting = "tilde";
    std::string out = "kernel.bin";
    std::string csv;
    int csv_nodes = 4;
    int sector = 0;
};

int run_kernels(const KernelArgs& a) {
    require(a.T >= 2 && a.tmax > a.tmin, "kernels: need T >= 2 and tmax > tmin");
    const auto s = binary::load_model(a.model_bin);
    const TimeGrid g{a.tmin, (a.tmax - a.tmin) / (a.T - 1), a.T};
    const KernelKind kind = kernel_kind_from_string(a.kind);
    BiKernel k = [&] {
        if (kind != KernelKind::feynman && kind != KernelKind::antifeynman)
            return make_propagator(s, kind, g, weighting_from_string(a.weighting));
        const Weighting w = weighting_from_string(a.weighting);
        const auto f = make_feynman(make_propagator(s, KernelKind::lambda_plus, g, w),
                                    make_propagator(s, KernelKind::lambda_minus, g, w),
                                    make_propagator(s, KernelKind::retarded, g, w),
                                    make_propagator(s, KernelKind::advanced, g, w));
        return kind == KernelKind::feynman ? f.feynman : f.antifeynman;
    }();
    binary::save_kernel(a.out, k);
    if (!a.csv.empty()) {
        // slice export: a subsampled time lattice and a few spatial nodes
        auto out = open_out(a.csv);
        csv::Writer w(out);
        w.header({"t", "s", "x", "x_prime", "re", "im"});
        const int stride = std::max(1, g.T / 64);
        const int nodes = std::clamp(a.csv_nodes, 1, s->N());
        std::vector<int> xs;
        for (int q = 0; q < nodes; ++q) xs.push_back(static_cast<int>((q + 0.5) * s->N() / nodes));
        for (int i = 0; i < g.T; i += stride)
            for (int j = 0; j < g.T; j += stride)
                for (int p : xs)
                    for (int q : xs) {
                        const auto v = k.value(a.sector, g.at(i), p, g.at(j), q);
                        w.field(g.at(i)).field(g.at(j)).field(s->x()(p)).field(s->x()(q)).field(v.real()).field(v.imag());
                        w.end_row();
                    }
    }
    std::cerr << "wrote " << a.out << " (" << to_string(k.kind()) << ", " << to_string(k.weighting()) << ", T "
              << g.T << ", tail estimate " << k.tail_estimate() << ")\n";
    return 0;
}

// --- wavepacket -----------------------------------------------------------

struct PacketArgs {
    std::string model_bin;
    double x0 = 0.5, xi0 = -80.0, sigma = 0.05;
    std::string sign = "plus";
    double tmax = 1.1, dt = 1e-3;
    std::string out;
    bool allow_low_momentum = false;
    bool json = false;
};

int run_wavepacket(const PacketArgs& a) {
    require(a.sign == "plus" || a.sign == "minus", "--sign must be plus or minus");
    const auto s = binary::load_model(a.model_bin);
    WavepacketOptions wo;
    wo.allow_low_momentum = a.allow_low_momentum;
    const Wavepacket w =
        make_wavepacket(*s, a.x0, a.xi0, a.sigma, a.sign == "plus" ? EnergySign::plus : EnergySign::minus, wo);
    const Trajectory tr = evolve_and_track(*s, w, a.tmax, a.dt);
    if (a.out.empty()) {
        write_trajectory_csv(std::cout, tr);
    } else {
        auto out = open_out(a.out);
        write_trajectory_csv(out, tr);
    }
    nlohmann::ordered_json j;
    j["tail"] = w.tail;
    j["agrees"] = tr.agrees();
    j["partial"] = tr.partial;
    j["max_excess"] = number(tr.max_excess);
    j["turnaround_time"] = number(tr.turnaround_time);
    j["return_time"] = number(tr.return_time);
    j["boundary_reflections"] = tr.boundary_reflections;
    if (a.json) emit_json(j, std::nullopt);
    else std::cerr << j.dump() << "\n";
    return tr.partial || (tr.has_gbb && !tr.agrees()) ? 1 : 0;
}

// --- wf-scan --------------------------------------------------------------

struct ScanArgs {
    std::string kernel_bin;
    double window = 0.0;
    double tolerance = 1e-6;
    std::string out;
    bool json = false;
};

int run_scan(const ScanArgs& a) {
    const BiKernel k = binary::load_kernel(a.kernel_bin);
    const double mf = k.spectral().m_floor_sqrt();
    ScanOptions so;
    so.window = a.window > 0.0 ? a.window : 40.0 / mf;
    so.tolerance = a.tolerance;
    const ScanReport r = kernel_wavefront_scan(k, mf, so);
    if (a.out.empty()) {
        write_scan_csv(std::cout, r);
    } else {
        auto out = open_out(a.out);
        write_scan_csv(out, r);
    }
    nlohmann::ordered_json j;
    j["kind"] = to_string(k.kind());
    j["window"] = r.window;
    j["omega_lo"] = r.omega_lo;
    j["windows"] = r.windows.size();
    j["max_off_pattern"] = r.max_off_pattern;
    j["tolerance"] = so.tolerance;
    j["pass"] = r.pass;
    if (a.json) emit_json(j, std::nullopt);
    else std::cerr << j.dump() << "\n";
    return r.pass ? 0 : 1;
}

// --- boundary-2pt ---------------------------------------------------------

struct BoundaryArgs {
    std::string kernel_bin;
    std::vector<double> window;
    std::string out = "boundary.csv";
};

int run_boundary(const BoundaryArgs& a) {
    const BiKernel k = binary::load_kernel(a.kernel_bin);
    require(k.kind() == KernelKind::lambda_plus || k.kind() == KernelKind::lambda_minus,
            "boundary-2pt: expects a lambda_plus or lambda_minus kernel");
    BoundaryFitOptions fit;
    if (!a.window.empty()) {
        require(a.window.size() == 2, "--window takes x_lo,x_hi");
        fit.x_lo = a.window[0];
        fit.x_hi = a.window[1];
    }
    const KernelKind other = k.kind() == KernelKind::lambda_plus ? KernelKind::lambda_minus : KernelKind::lambda_plus;
    const BiKernel partner = make_propagator(k.spectral_ptr(), other, k.grid(), k.weighting());
    const BoundaryKernel b1 = boundary_two_point(k, fit);
    const BoundaryKernel b2 = boundary_two_point(partner, fit);
    const BoundaryKernel& bp = k.kind() == KernelKind::lambda_plus ? b1 : b2;
    const BoundaryKernel& bm = k.kind() == KernelKind::lambda_plus ? b2 : b1;

    auto out = open_out(a.out);
    csv::Writer w(out);
    w.header({"t", "s", "mode", "re_k_plus", "im_k_plus", "re_k_minus", "im_k_minus"});
    const TimeGrid& g = k.grid();
    for (int m : bp.sectors()) {
        const Eigen::MatrixXcd P = bp.time_matrix(m);
        const Eigen::MatrixXcd M = bm.time_matrix(m);
        for (int i = 0; i < g.T; ++i)
            for (int j = 0; j < g.T; ++j) {
                w.field(g.at(i)).field(g.at(j)).field(static_cast<long long>(m));
                w.field(P(i, j).real()).field(P(i, j).imag()).field(M(i, j).real()).field(M(i, j).imag());
                w.end_row();
            }
    }
    nlohmann::ordered_json lines = nlohmann::ordered_json::array();
    for (const auto& ln : bp.spectral_lines()) {
        nlohmann::ordered_json e;
        e["m"] = ln.m;
        e["omega_k"] = ln.omega;
        e["weight_k"] = ln.weight;
        lines.push_back(e);
    }
    nlohmann::ordered_json side;
    side["normalization"] = "d_+ u = (x^{-nu_+} u) at x = 0, bare power";
    side["spectral_lines"] = lines;
    emit_json(side, fs::path(a.out + ".json"));
    return 0;
}

// --- verify ---------------------------------------------------------------

struct VerifyArgs {
    std::string config;
    std::string out;
    bool json = false;
    bool csv = false;
};

int run_verify_cmd(const VerifyArgs& a) {
    const RunConfig c = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    const VerifyResult r = run_verify(c);
    const std::string json = r.report.to_json();
    fs::path target = a.out;
    if (target.empty() && !c.output_dir.empty()) target = c.output_dir / "report.json";
    if (!target.empty()) {
        auto out = open_out(target);
        out << json;
    }
    if (a.json) std::cout << json;
    if (a.csv) {
        csv::Writer w(std::cout);
        w.header({"check", "value", "comparison", "tolerance", "pass", "anchor"});
        for (const auto& rec : r.report.records()) {
            w.field(rec.check).field(rec.value).field(rec.comparison == Comparison::at_most ? "<=" : ">=");
            w.field(rec.tolerance).field(rec.pass ? "true" : "false").field(rec.anchor);
            w.end_row();
        }
    }
    std::cerr << r.report.to_text();
    const auto failed = r.report.failures();
    std::cerr << r.report.records().size() - failed.size() << "/" << r.report.records().size() << " checks passed\n";
    for (const auto& f : failed) std::cerr << "failed: " << f << "\n";
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Klein-Gordon fields on static asymptotically AdS toys"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (overrides KGADS_THREADS)")->check(CLI::NonNegativeNumber);

    TraceArgs ta;
    auto* trace = app.add_subcommand("trace-gbb", "Trace a generalized broken bicharacteristic");
    ta.model.attach(trace);
    trace->add_option("--x0", ta.x0);
    trace->add_option("--t0", ta.t0);
    trace->add_option("--tau", ta.tau);
    trace->add_option("--xi", ta.xi);
    trace->add_option("--zeta", ta.zeta);
    trace->add_option("--tmax", ta.tmax);
    trace->add_option("--step", ta.step);
    trace->add_option("--out", ta.out, "CSV path (stdout when omitted)");

    BuildArgs ba;
    auto* build = app.add_subcommand("build-spectral", "Discretize A and store its eigenpairs");
    ba.model.attach(build);
    build->add_option("--N", ba.N);
    build->add_option("--modes", ba.modes);
    build->add_option("--mmax", ba.mmax);
    build->add_option("--out", ba.out);
    build->add_flag("--json", ba.json, "Print the spectrum as JSON");

    KernelArgs ka;
    auto* kern = app.add_subcommand("kernels", "Build a propagator or two-point kernel");
    kern->add_option("--model-bin", ka.model_bin)->required();
    kern->add_option("--kind", ka.kind, "retarded, advanced, causal, lambda_plus, lambda_minus, feynman, antifeynman");
    kern->add_option("--tmin", ka.tmin);
    kern->add_option("--tmax", ka.tmax);
    kern->add_option("--T", ka.T);
    kern->add_option("--weighting", ka.weighting, "tilde or physical");
    kern->add_option("--out", ka.out);
    kern->add_option("--csv", ka.csv, "Also export a slice (t, s, x, x', re, im)");
    kern->add_option("--csv-nodes", ka.csv_nodes);
    kern->add_option("--sector", ka.sector);

    PacketArgs pa;
    auto* packet = app.add_subcommand("wavepacket", "Evolve a Gaussian packet and compare with the GBB");
    packet->add_option("--model-bin", pa.model_bin)->required();
    packet->add_option("--x0", pa.x0);
    packet->add_option("--xi0", pa.xi0);
    packet->add_option("--sigma", pa.sigma);
    packet->add_option("--sign", pa.sign);
    packet->add_option("--tmax", pa.tmax);
    packet->add_option("--dt", pa.dt);
    packet->add_option("--out", pa.out);
    packet->add_flag("--allow-low-momentum", pa.allow_low_momentum);
    packet->add_flag("--json", pa.json);

    ScanArgs sa;
    auto* scan = app.add_subcommand("wf-scan", "Quadrant scan of a kernel's two-slot frequency content");
    scan->add_option("--kernel-bin", sa.kernel_bin)->required();
    scan->add_option("--window", sa.window, "Window length T_w (default 40 / sqrt(m2_floor))");
    scan->add_option("--tolerance", sa.tolerance);
    scan->add_option("--out", sa.out);
    scan->add_flag("--json", sa.json);

    BoundaryArgs bda;
    auto* bnd = app.add_subcommand("boundary-2pt", "Boundary two-point functions of Lambda^pm");
    bnd->add_option("--kernel-bin", bda.kernel_bin)->required();
    bnd->add_option("--window", bda.window, "Fit window x_lo,x_hi")->delimiter(',');
    bnd->add_option("--out", bda.out);

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "Run the full verification suite");
    ver->add_option("--config", va.config, "Run config (JSON); built-in defaults when omitted");
    ver->add_option("--out", va.out, "Report path (default <output_dir>/report.json)");
    ver->add_flag("--json", va.json, "Print the JSON report on stdout");
    ver->add_flag("--csv", va.csv, "Print the checks as CSV on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) set_thread_count(threads);
        if (*trace) return run_trace(ta);
        if (*build) return run_build(ba);
        if (*kern) return run_kernels(ka);
        if (*packet) return run_wavepacket(pa);
        if (*scan) return run_scan(sa);
        if (*bnd) return run_boundary(bda);
        if (*ver) return run_verify_cmd(va);
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
