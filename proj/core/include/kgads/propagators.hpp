#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kgads/spectral.hpp"

namespace kgads {

enum class KernelKind {
    retarded,
    advanced,
    causal,
    lambda_plus,
    lambda_minus,
    feynman,
    antifeynman,
    combination
};

/// tilde: kernels of P~ = d_t^2 + A with respect to dt dx.
/// physical: kernels of P with respect to the volume of g; left slot carries
/// x^{n/2-1} beta^{1/2}, right slot the matching factor of the g-pairing.
enum class Weighting { tilde, physical };

/// Time support of one term: everywhere, t > s, or t < s (theta(0) = 0).
enum class Support { all, future, past };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);
std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.01;
    int T = 64;

    double at(int i) const { return t0 + dt * i; }
    double end() const { return at(T - 1); }
    /// Trapezoid weights on [t0, end].
    Eigen::VectorXd trapezoid() const;
    bool operator==(const TimeGrid& o) const { return t0 == o.t0 && dt == o.dt && T == o.T; }
};

/// amplitude * exp(i omega (sign_t t + sign_s s)) phi_k(x) phi_k(x') restricted
/// to `support`, for eigenmode `mode` of transverse sector `m`.
struct ModeTerm {
    int m = 0;
    int mode = 0;
    std::complex<double> amplitude;
    int sign_t = 1;
    int sign_s = -1;
    Support support = Support::all;
};

/// Two-time, two-space kernel held as a lazy mode sum over the eigenbasis
/// of a SpectralModel. Immutable; cheap to copy (shares the spectral model).
class BiKernel {
public:
    BiKernel(std::shared_ptr<const SpectralModel> s, TimeGrid grid, KernelKind kind,
             Weighting weighting, std::vector<ModeTerm> terms);

    const SpectralModel& spectral() const { return *spectral_; }
    const std::shared_ptr<const SpectralModel>& spectral_ptr() const { return spectral_; }
    const TimeGrid& grid() const { return grid_; }
    KernelKind kind() const { return kind_; }
    Weighting weighting() const { return weighting_; }
    const std::vector<ModeTerm>& terms() const { return terms_; }

    /// Distinct (m, mode) pairs carrying at least one term, in first-seen order.
    const std::vector<std::pair<int, int>>& modes() const { return modes_; }
    double omega(int m, int mode) const;

    /// Temporal coefficient a_k(t, s) of one mode (sum of its terms).
    std::complex<double> temporal(int m, int mode, double t, double s) const;
    /// a_k(t_i, s_j) on the kernel's grid.
    Eigen::MatrixXcd time_matrix(int m, int mode) const;
    /// a_k(t_i, s_j) for the listed grid indices.
    Eigen::MatrixXcd time_block(int m, int mode, const std::vector<int>& rows, const std::vector<int>& cols) const;

    /// Spatial factors applied in the left (x) and right (x') slots.
    const Eigen::VectorXd& left_factor() const { return left_; }
    const Eigen::VectorXd& right_factor() const { return right_; }

    /// K(t, x_a; s, x_b) in sector m.
    std::complex<double> value(int m, double t, int a, double s, int b) const;
    /// Spatial matrix K(t_i, .; s_j, .) in sector m.
    Eigen::MatrixXcd spatial_block(int m, int i, int j) const;

    /// Size of the first omitted mode term, 1/(2 omega_max).
    double tail_estimate() const;

private:
    struct Group {
        int sector_index;
        int mode;
        double omega;
        std::vector<ModeTerm> terms;
    };
    const Group* find(int m, int mode) const;
    static std::complex<double> eval(const Group& g, double t, double s);

    std::shared_ptr<const SpectralModel> spectral_;
    TimeGrid grid_;
    KernelKind kind_;
    Weighting weighting_;
    std::vector<ModeTerm> terms_;
    std::vector<Group> groups_;
    std::vector<std::pair<int, int>> modes_;
    Eigen::VectorXd left_;
    Eigen::VectorXd right_;
};

struct PropagatorOptions {
    /// +1: Lambda^+ carries exp(+i(t-s)omega). -1 swaps the convention globally.
    int sign_convention = 1;
};

/// Mode-sum kernels of the static inverses and vacuum two-point functions:
/// retarded theta(t-s) sin((t-s)w)/w, Lambda^pm exp(+-i(t-s)w)/(2w), and the
/// Feynman combinations -i Lambda^+ + P_-^{-1}, i Lambda^- + P_-^{-1}.
BiKernel make_propagator(std::shared_ptr<const SpectralModel> s, KernelKind kind, const TimeGrid& grid,
                         Weighting weighting, const PropagatorOptions& opts = {});

/// sum c_i K_i over kernels on the same model, grid and weighting.
BiKernel combine(const std::vector<std::pair<std::complex<double>, const BiKernel*>>& parts,
                 KernelKind kind = KernelKind::combination);

/// Copy of k with the frequency sign of `count` evenly spaced modes reversed
/// (mutation harness for the sign diagnostics).
BiKernel flip_mode_signs(const BiKernel& k, int count);

/// (K f)(t_i) = sum_j w_j K(t_i, s_j) f(s_j) for sector m; f is N x T
/// (one column per time node). In physical weighting f is paired against g.
Eigen::MatrixXcd apply(const BiKernel& k, int m, const Eigen::MatrixXcd& f);

/// Discrete P~ u = D_t^2 u + A_h u (central differences in t, the assembled
/// form in x) in tilde weighting, or P u = w_R^{-1} P~ (w_L^{-1} u) in
/// physical weighting. Columns 0 and T-1 are left at zero.
Eigen::MatrixXcd apply_wave_operator(const SpectralModel& s, int m, const Eigen::MatrixXcd& u,
                                     double dt, Weighting weighting);

struct TwoPointTolerances {
    double commutator = 1e-12;
    double gram_relative = 1e-10;
    double hermiticity = 1e-12;
    /// Multiple of the predicted central-difference error allowed for P Lambda.
    double p_residual_factor = 2.0;
};

struct TwoPointReport {
    double p_residual_plus = 0.0;
    double p_residual_minus = 0.0;
    double p_residual_bound = 0.0;
    double commutator_defect = 0.0;
    double hermiticity_defect = 0.0;
    double gram_min_plus = 0.0;
    double gram_min_minus = 0.0;
    double gram_norm_plus = 0.0;
    double gram_norm_minus = 0.0;
    bool pass_p = false;
    bool pass_commutator = false;
    bool pass_hermitian = false;
    bool pass_gram = false;
    bool pass() const { return pass_p && pass_commutator && pass_hermitian && pass_gram; }
};

/// P Lambda^pm = 0, Lambda^+ - Lambda^- = iG, Hermiticity and positivity of
/// the space-time Gram matrices. Gram positivity is exact per mode (the
/// projection onto the eigenbasis is onto) and is cross-checked on a
/// sampled nodal space-time block.
TwoPointReport verify_two_point(const BiKernel& lambda_plus, const BiKernel& lambda_minus,
                                const BiKernel& causal, const TwoPointTolerances& tol = {});

/// max |P~ K - 1| style residuals used by the refinement-order fits.
/// p_lambda: max |(P ⊗ 1) K| over sampled (s, x') columns.
double wave_residual(const BiKernel& k, int s_samples = 4, int x_samples = 4);
/// max |P (K f) - f| on interior nodes for a smooth compactly supported f in
/// the span of the first `modes` eigenmodes of sector m.
double inverse_residual(const BiKernel& k, int m, int modes);

struct FrequencyTestOptions {
    /// +1 for Lambda^+-type kernels, -1 for Lambda^-; 0 infers from the kind.
    int sign = 0;
    /// Window length in time units; 0 uses the whole grid.
    double window = 0.0;
    double kaiser_beta = 12.0;
    double tolerance = 1e-6;
    int pad_factor = 2;
};

struct FrequencyReport {
    double forbidden_fraction = 0.0;
    double positive_fraction = 0.0;
    double negative_fraction = 0.0;
    double threshold = 0.0;
    double resolution = 0.0;
    double window = 0.0;
    int samples = 0;
    bool pass = false;
};

/// Windowed DFT in t - s of the kernel reduced by the energy-flat probe
/// (every retained mode contributes with weight omega_k), reporting the
/// spectral mass on the forbidden half-line {sign * lambda <= m_floor_sqrt / 2}.
FrequencyReport frequency_sign_test(const BiKernel& k, double m_floor_sqrt,
                                    const FrequencyTestOptions& opts = {});

/// Same test for a scalar kernel f(t, s) sampled on grid g; opts.sign must be set.
FrequencyReport frequency_sign_scalar(const std::function<std::complex<double>(double, double)>& f,
                                      const TimeGrid& g, double m_floor_sqrt, const FrequencyTestOptions& opts);

struct FeynmanPair {
    BiKernel feynman;
    BiKernel antifeynman;
    double consistency_defect = 0.0;
};

/// P_F^{-1} = -i Lambda^+ + P_-^{-1} and P_Fbar^{-1} = i Lambda^- + P_-^{-1};
/// checks -i Lambda^+ + P_-^{-1} = -i Lambda^- + P_+^{-1} entrywise.
FeynmanPair make_feynman(const BiKernel& lambda_plus, const BiKernel& lambda_minus,
                         const BiKernel& retarded, const BiKernel& advanced, double tol = 1e-12);

/// max over sampled entries of |K1 - K2| (time matrices per mode and nodal
/// entries through the spatial factors).
double kernel_difference(const BiKernel& a, const BiKernel& b);

/// max |K_adv(t, x; s, x') - conj K_ret(s, x'; t, x)|.
double adjoint_defect(const BiKernel& retarded, const BiKernel& advanced);

/// Largest |entry| of a retarded kernel on {t <= s}; exactly zero when the
/// theta factor is exact.
double support_violation(const BiKernel& retarded);

/// Finite sum of mode solutions u = sum_k (a_k cos(w_k t) + b_k sin(w_k t)) phi_k.
struct ModeSolution {
    int m = 0;
    std::vector<int> modes;
    std::vector<double> cos_coeff;
    std::vector<double> sin_coeff;
};

/// Smooth step chi: 0 for t <= t_a, 1 for t >= t_b.
struct TimeCutoff {
    double t_a = 0.0;
    double t_b = 1.0;
    double operator()(double t) const;
};

struct TimeSliceReport {
    double residual = 0.0;
    double solution_max = 0.0;
};

/// max |G [P, chi] u - u| over the grid interior.
TimeSliceReport time_slice_check(const BiKernel& causal, const TimeCutoff& chi, const ModeSolution& u);

/// Samples of u on the kernel grid for sector m in the requested weighting (N x T).
Eigen::MatrixXcd sample_solution(const SpectralModel& s, const ModeSolution& u, const TimeGrid& grid,
                                 Weighting weighting);

}  // namespace kgads
