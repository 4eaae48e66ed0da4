#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgads/bchar.hpp"
#include "kgads/geometry.hpp"
#include "kgads/report.hpp"

namespace kgads {

struct VerifyTolerances {
    double spectral_oracle = 1e-3;
    double spectral_exact = 1e-6;
    double orthonormality = 1e-10;
    double spectral_calculus = 1e-6;
    double group_law = 1e-9;
    double commutator = 1e-12;
    double adjoint = 1e-12;
    double hermiticity = 1e-12;
    double gram_relative = 1e-10;
    double feynman = 1e-12;
    double refinement_order = 1.9;
    double time_slice_factor = 5.0;
    double frequency = 1e-6;
    double mutation_factor = 1e3;
    double boundary_exponent = 1e-2;
    double exponent_chain = 2e-2;
    double series_gain = 0.9;
    double boundary_fit = 1e-8;
    double boundary_weight = 1e-2;
    double scan = 1e-6;
    double feynman_scan = 1e-5;
    double decay_order = 6.0;
    double gbb = 1e-9;
};

struct PacketConfig {
    double x0 = 0.5;
    double xi0 = -80.0;
    double sigma = 0.05;
    EnergySign sign = EnergySign::plus;
};

/// Everything run_verify needs. Parsed from one JSON file whose "model" is
/// either an inline model object or a path to a model file.
struct RunConfig {
    MetricModel model = make_toy_model(ModelKind::ads2_strip, 1.0, 1.0);
    int N = 2000;
    int n_modes = 40;
    int m_max = 0;
    /// Time nodes and spacing of the kernel grid used by the algebra and scan suites.
    int T = 2100;
    double dt = 0.02;
    /// Mode count of the separate spectral build used by the wavepacket suite.
    int packet_modes = 120;
    std::vector<PacketConfig> packets = {{0.5, -80.0, 0.05, EnergySign::plus},
                                         {0.4, -120.0, 0.04, EnergySign::plus},
                                         {0.6, 100.0, 0.05, EnergySign::minus}};
    VerifyTolerances tol;
    std::filesystem::path output_dir;
    std::uint64_t seed = 20240917;
    /// Injected fault: reverse the frequency sign of one mode of Lambda^+.
    bool fault_sign_flip = false;
};

/// Throws PreconditionError on malformed input, unknown keys or tolerances <= 0.
RunConfig run_config_from_json_text(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct VerifyResult {
    Report report;
    /// 0 when every check passes, 1 otherwise.
    int exit_code = 0;
};

/// Runs the suites in order: geometry, spectral, propagator algebra, frequency
/// sign, indicial and boundary, wavepacket and GBB, state pairs. Output is a
/// pure function of the config (no timings, fixed seed).
VerifyResult run_verify(const RunConfig& config);

}  // namespace kgads
