#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgads/phase_point.hpp"

namespace kgads {

/// A smooth coefficient on the normal interval [0, L]. Holds a value closure
/// and a derivative closure; constant coefficients are flagged so that
/// downstream code can use exact values.
class CoefficientFunction {
public:
    static CoefficientFunction constant(double c);
    /// Derivative is taken by central finite differences when not supplied.
    static CoefficientFunction from_closure(std::function<double(double)> f,
                                            std::function<double(double)> df = {});
    /// Modified-Akima interpolation of (x, value) samples; constant extrapolation.
    static CoefficientFunction from_table(std::vector<double> xs, std::vector<double> values);

    double operator()(double x) const { return value_(x); }
    double derivative(double x) const { return derivative_(x); }
    bool is_constant() const { return constant_.has_value(); }

    /// Taylor coefficients a_0..a_order at x = 0. Exact for constants,
    /// otherwise a Chebyshev least-squares fit on [0, radius].
    std::vector<double> taylor(int order, double radius) const;

private:
    std::function<double(double)> value_;
    std::function<double(double)> derivative_;
    std::optional<double> constant_;
};

enum class ModelKind { ads2_strip, ads3_cylinder, custom };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Standard static asymptotically AdS model with warped coefficients
///   x^2 g = -dx^2 + beta(x) dt^2 - k(x) dy^2   on (0, L] x (transverse).
/// Immutable after construction; safe to share across threads.
class MetricModel {
public:
    static constexpr int kExactEvenness = std::numeric_limits<int>::max();
    static constexpr int kReferenceSamples = 257;

    ModelKind kind() const { return kind_; }
    int n() const { return n_; }
    double nu() const { return nu_; }
    double L() const { return L_; }
    /// Circumference of the transverse circle (n = 3 only).
    std::optional<double> ell() const { return ell_; }
    bool has_transverse() const { return ell_.has_value(); }

    const CoefficientFunction& beta() const { return beta_; }
    const CoefficientFunction& k_metric() const { return k_; }

    /// Coefficient samples on the reference grid used for invariant checks.
    const std::vector<double>& sample_x() const { return sample_x_; }
    const std::vector<double>& beta_samples() const { return beta_samples_; }
    const std::vector<double>& k_samples() const { return k_samples_; }

    /// 0: not even; 3: even modulo O(x^3); kExactEvenness: exactly even.
    int evenness_order() const { return evenness_order_; }

    /// m^2 implied by nu^2 = (n-1)^2/4 + m^2.
    double mass_squared() const;

    /// Constant C with C <= beta <= 1/C on the reference samples.
    double beta_bound() const;

    std::vector<double> sample_beta(const std::vector<double>& xs) const;
    std::vector<double> sample_k(const std::vector<double>& xs) const;

private:
    friend MetricModel make_toy_model(ModelKind, double, double, std::optional<double>);
    friend MetricModel make_custom_model(int, double, double, std::optional<double>,
                                         CoefficientFunction, CoefficientFunction);
    MetricModel() = default;
    void finalize();

    ModelKind kind_ = ModelKind::ads2_strip;
    int n_ = 2;
    double nu_ = 1.0;
    double L_ = 1.0;
    std::optional<double> ell_;
    CoefficientFunction beta_ = CoefficientFunction::constant(1.0);
    CoefficientFunction k_ = CoefficientFunction::constant(1.0);
    std::vector<double> sample_x_;
    std::vector<double> beta_samples_;
    std::vector<double> k_samples_;
    int evenness_order_ = kExactEvenness;
};

/// beta = k = 1 models: n = 2 strip or n = 3 cylinder with circle of length ell.
MetricModel make_toy_model(ModelKind kind, double nu, double L,
                           std::optional<double> ell = std::nullopt);

MetricModel make_custom_model(int n, double nu, double L, std::optional<double> ell,
                              CoefficientFunction beta, CoefficientFunction k);

struct IndicialRoots {
    double nu_plus;
    double nu_minus;
};

IndicialRoots indicial_roots(const MetricModel& m);
IndicialRoots indicial_roots(int n, double nu);

/// Principal symbol of the rescaled wave operator,
///   p~ = tau^2 / beta - xi^2 - zeta^2 / k.
double conformal_symbol(const MetricModel& m, const PhasePointB& p);

}  // namespace kgads
