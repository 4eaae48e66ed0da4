#include "kgads/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/interpolators/makima.hpp>

#include "kgads/error.hpp"

namespace kgads {

CoefficientFunction CoefficientFunction::constant(double c) {
    CoefficientFunction f;
    f.value_ = [c](double) { return c; };
    f.derivative_ = [](double) { return 0.0; };
    f.constant_ = c;
    return f;
}

CoefficientFunction CoefficientFunction::from_closure(std::function<double(double)> fn,
                                                      std::function<double(double)> dfn) {
    require(static_cast<bool>(fn), "coefficient closure is empty");
    CoefficientFunction f;
    f.value_ = fn;
    if (dfn) {
        f.derivative_ = std::move(dfn);
    } else {
        f.derivative_ = [fn](double x) {
            return boost::math::differentiation::finite_difference_derivative(fn, x);
        };
    }
    return f;
}

CoefficientFunction CoefficientFunction::from_table(std::vector<double> xs,
                                                    std::vector<double> values) {
    require(xs.size() == values.size(), "coefficient table: column length mismatch");
    require(xs.size() >= 4, "coefficient table needs at least 4 rows");
    for (std::size_t i = 1; i < xs.size(); ++i)
        require(xs[i] > xs[i - 1], "coefficient table: x column must be strictly increasing");
    const double lo = xs.front();
    const double hi = xs.back();
    const double v_lo = values.front();
    const double v_hi = values.back();
    using Makima = boost::math::interpolators::makima<std::vector<double>>;
    auto spline = std::make_shared<Makima>(std::move(xs), std::move(values));
    CoefficientFunction f;
    f.value_ = [spline, lo, hi, v_lo, v_hi](double x) {
        if (x <= lo) return v_lo;
        if (x >= hi) return v_hi;
        return (*spline)(x);
    };
    f.derivative_ = [spline, lo, hi](double x) {
        if (x < lo || x > hi) return 0.0;
        return spline->prime(x);
    };
    return f;
}

std::vector<double> CoefficientFunction::taylor(int order, double radius) const {
    require(order >= 0, "taylor order must be nonnegative");
    std::vector<double> coeffs(static_cast<std::size_t>(order) + 1, 0.0);
    if (constant_) {
        coeffs[0] = *constant_;
        return coeffs;
    }
    require(radius > 0.0, "taylor radius must be positive");
    const int samples = 4 * (order + 1) + 8;
    Eigen::MatrixXd V(samples, order + 1);
    Eigen::VectorXd rhs(samples);
    for (int i = 0; i < samples; ++i) {
        // Chebyshev points on [0, radius]
        const double c = std::cos(std::numbers::pi * (i + 0.5) / samples);
        const double x = 0.5 * radius * (1.0 + c);
        const double s = x / radius;
        double p = 1.0;
        for (int j = 0; j <= order; ++j) {
            V(i, j) = p;
            p *= s;
        }
        rhs(i) = value_(x);
    }
    const Eigen::VectorXd a = V.colPivHouseholderQr().solve(rhs);
    double scale = 1.0;
    for (int j = 0; j <= order; ++j) {
        coeffs[static_cast<std::size_t>(j)] = a(j) / scale;
        scale *= radius;
    }
    return coeffs;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::ads2_strip: return "ads2_strip";
        case ModelKind::ads3_cylinder: return "ads3_cylinder";
        case ModelKind::custom: return "custom";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "ads2_strip") return ModelKind::ads2_strip;
    if (name == "ads3_cylinder") return ModelKind::ads3_cylinder;
    if (name == "custom") return ModelKind::custom;
    throw PreconditionError("unknown model kind '" + name + "'");
}

double MetricModel::mass_squared() const {
    const double h = 0.5 * (n_ - 1);
    return nu_ * nu_ - h * h;
}

double MetricModel::beta_bound() const {
    const auto [lo, hi] = std::minmax_element(beta_samples_.begin(), beta_samples_.end());
    return std::min(*lo, 1.0 / *hi);
}

std::vector<double> MetricModel::sample_beta(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return beta_(x); });
    return out;
}

std::vector<double> MetricModel::sample_k(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return k_(x); });
    return out;
}

void MetricModel::finalize() {
    sample_x_.resize(kReferenceSamples);
    for (int i = 0; i < kReferenceSamples; ++i)
        sample_x_[static_cast<std::size_t>(i)] = L_ * i / (kReferenceSamples - 1);
    beta_samples_ = sample_beta(sample_x_);
    k_samples_ = sample_k(sample_x_);
    for (std::size_t i = 0; i < sample_x_.size(); ++i) {
        if (!(beta_samples_[i] > 0.0) || !std::isfinite(beta_samples_[i]))
            throw PreconditionError("beta must be positive and finite on [0, L]");
        if (!(k_samples_[i] > 0.0) || !std::isfinite(k_samples_[i]))
            throw PreconditionError("k must be positive and finite on [0, L]");
    }
    if (beta_.is_constant() && k_.is_constant()) {
        evenness_order_ = kExactEvenness;
    } else {
        const double tol = 1e-8;
        const bool even = std::abs(beta_.derivative(0.0)) <= tol * std::abs(beta_(0.0)) &&
                          std::abs(k_.derivative(0.0)) <= tol * std::abs(k_(0.0));
        evenness_order_ = even ? 3 : 0;
    }
}

namespace {

void check_common(double nu, double L) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw PreconditionError("BF bound violated: nu must be > 0 (got " + std::to_string(nu) + ")");
    require(L > 0.0 && std::isfinite(L), "truncation radius L must be > 0");
}

}  // namespace

MetricModel make_toy_model(ModelKind kind, double nu, double L, std::optional<double> ell) {
    check_common(nu, L);
    MetricModel m;
    m.kind_ = kind;
    m.nu_ = nu;
    m.L_ = L;
    switch (kind) {
        case ModelKind::ads2_strip:
            require(!ell.has_value(), "ads2_strip takes no transverse circle (ell must be absent)");
            m.n_ = 2;
            break;
        case ModelKind::ads3_cylinder:
            require(ell.has_value(), "ads3_cylinder requires ell");
            require(*ell > 0.0, "ell must be > 0");
            m.n_ = 3;
            m.ell_ = ell;
            break;
        case ModelKind::custom:
            throw PreconditionError("make_toy_model: use make_custom_model for custom kinds");
    }
    m.finalize();
    return m;
}

MetricModel make_custom_model(int n, double nu, double L, std::optional<double> ell,
                              CoefficientFunction beta, CoefficientFunction k) {
    check_common(nu, L);
    require(n == 2 || n == 3, "custom models support n = 2 or n = 3");
    if (n == 3) {
        require(ell.has_value() && *ell > 0.0, "n = 3 requires a transverse circle with ell > 0");
    } else {
        require(!ell.has_value(), "n = 2 takes no transverse circle");
    }
    MetricModel m;
    m.kind_ = ModelKind::custom;
    m.n_ = n;
    m.nu_ = nu;
    m.L_ = L;
    m.ell_ = ell;
    m.beta_ = std::move(beta);
    m.k_ = std::move(k);
    m.finalize();
    return m;
}

IndicialRoots indicial_roots(int n, double nu) {
    const double h = 0.5 * (n - 1);
    return {h + nu, h - nu};
}

IndicialRoots indicial_roots(const MetricModel& m) { return indicial_roots(m.n(), m.nu()); }

double conformal_symbol(const MetricModel& m, const PhasePointB& p) {
    require(p.x >= 0.0, "phase point has x < 0");
    if (p.x == 0.0 && p.xi_bar != 0.0)
        throw PreconditionError("point over the boundary with xi_bar != 0 is not in the compressed characteristic set");
    require(p.xi.has_value(), "conformal_symbol needs the uncompressed xi");
    const double xi = *p.xi;
    const double z = p.zeta_or_zero();
    return p.tau * p.tau / m.beta()(p.x) - xi * xi - z * z / m.k_metric()(p.x);
}

}  // namespace kgads
