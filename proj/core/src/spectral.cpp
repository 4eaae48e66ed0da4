#include "kgads/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <lapacke.h>

#include "kgads/error.hpp"
#include "kgads/parallel.hpp"

namespace kgads {

namespace {

struct BandEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

// Lowest `count` eigenpairs of a symmetric banded matrix: eigenvalues from
// the banded reduction, eigenvectors by shifted inverse iteration on the
// banded LU. Forming the full orthogonal reduction matrix is O(N^3) and
// dominated the build time otherwise.
BandEigen lowest_eigenpairs(const Eigen::SparseMatrix<double>& S, int kd, int count) {
    const int n = static_cast<int>(S.rows());
    const int ldab = kd + 1;
    std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
    const int ldlu = 3 * kd + 1;
    std::vector<double> band(static_cast<std::size_t>(ldlu) * n, 0.0);
    Eigen::VectorXd diag(n);
    for (int j = 0; j < S.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(S, j); it; ++it) {
            const int i = static_cast<int>(it.row());
            if (std::abs(i - j) > kd) continue;
            band[static_cast<std::size_t>(2 * kd + i - j) + static_cast<std::size_t>(j) * ldlu] = it.value();
            if (i == j) diag(i) = it.value();
            if (i <= j)
                ab[static_cast<std::size_t>(kd + i - j) + static_cast<std::size_t>(j) * ldab] = it.value();
        }
    }
    std::vector<double> w(n);
    std::vector<lapack_int> ifail(n);
    lapack_int found = 0;
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    double dummy = 0.0;
    lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, kd, ab.data(), ldab, &dummy, 1,
                                     0.0, 0.0, 1, count, abstol, &found, w.data(), &dummy, 1,
                                     ifail.data());
    if (info != 0 || found != count)
        throw NumericalError("banded eigensolve did not converge (info = " + std::to_string(info) + ")");

    BandEigen out;
    out.values = Eigen::Map<Eigen::VectorXd>(w.data(), count);
    out.vectors.resize(n, count);
    std::vector<double> lu(band.size());
    std::vector<lapack_int> piv(n);
    const double scale = std::max(1.0, std::abs(out.values(count - 1)));
    for (int k = 0; k < count; ++k) {
        std::copy(band.begin(), band.end(), lu.begin());
        // tiny offset keeps the factorization regular at the exact eigenvalue
        const double shift = out.values(k) - 64.0 * std::numeric_limits<double>::epsilon() * scale;
        for (int j = 0; j < n; ++j) lu[static_cast<std::size_t>(2 * kd) + static_cast<std::size_t>(j) * ldlu] -= shift;
        info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kd, kd, lu.data(), ldlu, piv.data());
        if (info < 0) throw NumericalError("banded factorization failed");
        Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
        for (int i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(0.37 * (i + 1) * (k + 1));
        for (int it = 0; it < 3; ++it) {
            info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kd, kd, 1, lu.data(), ldlu, piv.data(), v.data(), n);
            if (info != 0) throw NumericalError("banded solve failed");
            for (int j = 0; j < k; ++j) v -= out.vectors.col(j).dot(v) * out.vectors.col(j);
            v.normalize();
        }
        out.vectors.col(k) = v;
    }
    return out;
}

}  // namespace

SpectralModel::SpectralModel(MetricModel model, sem::Mesh mesh,
                             std::vector<TransverseSector> sectors, double tol_eig)
    : model_(std::move(model)), mesh_(std::move(mesh)), sectors_(std::move(sectors)),
      tol_eig_(tol_eig) {
    require(!sectors_.empty(), "spectral model needs at least one sector");
    x_ = sem::node_coordinates(mesh_);
    weights_ = sem::lumped_mass(mesh_);
    const int n = model_.n();
    const int N = static_cast<int>(x_.size());
    w_left_.resize(N);
    w_right_.resize(N);
    vol_density_.resize(N);
    for (int i = 0; i < N; ++i) {
        const double xi = x_(i);
        const double b = model_.beta()(xi);
        const double k = model_.k_metric()(xi);
        w_left_(i) = std::pow(xi, 0.5 * n - 1.0) * std::sqrt(b);
        w_right_(i) = std::sqrt(b) * std::pow(xi, -0.5 * n - 1.0);
        vol_density_(i) = std::pow(xi, -n) * std::sqrt(b * k);
    }
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& s : sectors_) {
        require(s.phi.rows() == N, "sector eigenvectors do not match the grid");
        floor = std::min(floor, s.omega2.minCoeff());
    }
    if (!(floor > 0.0)) throw NumericalError("non-positive form detected (lowest eigenvalue <= 0)");
    m2_floor_ = floor * (1.0 - tol_eig_);
}

const TransverseSector& SpectralModel::sector(int m) const { return sectors_[sector_index(m)]; }

int SpectralModel::sector_index(int m) const {
    for (std::size_t i = 0; i < sectors_.size(); ++i)
        if (sectors_[i].m == m) return static_cast<int>(i);
    throw PreconditionError("no transverse sector m = " + std::to_string(m));
}

int SpectralModel::m_max() const {
    int mm = 0;
    for (const auto& s : sectors_) mm = std::max(mm, std::abs(s.m));
    return mm;
}

double SpectralModel::omega_max() const {
    double w = 0.0;
    for (const auto& s : sectors_) w = std::max(w, std::sqrt(s.omega2.maxCoeff()));
    return w;
}

double SpectralModel::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (weights_.array() * u.array() * v.array()).sum();
}

std::complex<double> SpectralModel::inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const {
    return (weights_.array().cast<std::complex<double>>() * u.array().conjugate() * v.array()).sum();
}

Eigen::VectorXcd SpectralModel::project(int m, const Eigen::VectorXcd& u) const {
    const auto& s = sector(m);
    require(u.size() == N(), "project: vector size does not match the grid");
    const Eigen::VectorXcd wu = weights_.cast<std::complex<double>>().cwiseProduct(u);
    return s.phi.transpose().cast<std::complex<double>>() * wu;
}

Eigen::VectorXcd SpectralModel::apply_form(int m, const Eigen::VectorXcd& u) const {
    const auto& s = sector(m);
    require(u.size() == N(), "apply_form: vector size does not match the grid");
    if (s.form) {
        Eigen::VectorXcd out(N());
        out.real() = (*s.form * u.real()).cwiseQuotient(weights_);
        out.imag() = (*s.form * u.imag()).cwiseQuotient(weights_);
        return out;
    }
    const Eigen::VectorXcd c = project(m, u);
    return s.phi.cast<std::complex<double>>() * (s.omega2.cast<std::complex<double>>().cwiseProduct(c));
}

std::shared_ptr<const SpectralModel> build_spectral(const MetricModel& model,
                                                    const SpectralOptions& opts) {
    require(opts.N >= 64, "build_spectral: N must be >= 64");
    require(opts.n_modes >= 1, "build_spectral: n_modes must be >= 1");
    require(opts.n_modes <= opts.N / 4, "build_spectral: n_modes must be <= N/4");
    require(opts.m_max >= 0, "build_spectral: m_max must be >= 0");
    require(opts.degree >= 2 && opts.degree <= 16, "build_spectral: element degree must be in [2, 16]");
    require(opts.tol_eig > 0.0 && opts.tol_eig < 1e-2, "build_spectral: tol_eig must be in (0, 1e-2)");
    if (!model.has_transverse())
        require(opts.m_max == 0, "build_spectral: m_max > 0 needs a transverse circle");

    const int E = sem::elements_for_dof(opts.N, opts.degree);
    sem::Mesh mesh = sem::make_mesh(E, opts.degree, model.L(), opts.grading);
    const int N = mesh.dof();
    const int p = mesh.degree;
    const Eigen::VectorXd x = sem::node_coordinates(mesh);
    const Eigen::VectorXd M = sem::lumped_mass(mesh);

    // stiffness of -d^2/dx^2
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(E) * (p + 1) * (p + 1));
    const auto& D = mesh.rule.diff;
    const auto& rho = mesh.rule.weights;
    for (int e = 0; e < E; ++e) {
        const double scale = 2.0 / mesh.element_length(e);
        for (int a = 0; a <= p; ++a) {
            const int ga = mesh.global_index(e, a);
            if (ga < 0) continue;
            for (int b = 0; b <= p; ++b) {
                const int gb = mesh.global_index(e, b);
                if (gb < 0) continue;
                double v = 0.0;
                for (int q = 0; q <= p; ++q) v += rho(q) * D(q, a) * D(q, b);
                trip.emplace_back(ga, gb, v * scale);
            }
        }
    }
    Eigen::SparseMatrix<double> K0(N, N);
    K0.setFromTriplets(trip.begin(), trip.end());

    const double nu = model.nu();
    Eigen::VectorXd potential(N), bsqrt(N), kinv(N);
    for (int i = 0; i < N; ++i) {
        potential(i) = M(i) * (nu * nu - 0.25) / (x(i) * x(i));
        bsqrt(i) = std::sqrt(model.beta()(x(i)));
        kinv(i) = 1.0 / model.k_metric()(x(i));
    }
    const Eigen::VectorXd msqrt_inv = M.cwiseSqrt().cwiseInverse();

    const int m_max = opts.m_max;
    std::vector<TransverseSector> unique(static_cast<std::size_t>(m_max) + 1);
    parallel_for(unique.size(), [&](std::size_t idx) {
        const int m = static_cast<int>(idx);
        TransverseSector s;
        s.m = m;
        if (model.has_transverse()) {
            const double mu = 2.0 * std::numbers::pi * m / *model.ell();
            s.transverse_eigenvalue = mu * mu;
        }
        Eigen::VectorXd diag = potential + s.transverse_eigenvalue * M.cwiseProduct(kinv);
        Eigen::SparseMatrix<double> form = K0;
        for (int i = 0; i < N; ++i) form.coeffRef(i, i) += diag(i);
        form = bsqrt.asDiagonal() * form * bsqrt.asDiagonal();
        form.makeCompressed();
        const Eigen::SparseMatrix<double> S = msqrt_inv.asDiagonal() * form * msqrt_inv.asDiagonal();
        BandEigen be = lowest_eigenpairs(S, p, opts.n_modes);
        if (!(be.values(0) > 0.0))
            throw NumericalError("non-positive form detected in sector m = " + std::to_string(m) +
                                 " (the grid does not resolve the x^-2 potential)");
        s.omega2 = be.values;
        s.phi = msqrt_inv.asDiagonal() * be.vectors;
        for (int k = 0; k < s.phi.cols(); ++k) {
            // sign convention: positive near x = 0
            int i0 = 0;
            const double peak = s.phi.col(k).cwiseAbs().maxCoeff();
            while (i0 < N - 1 && std::abs(s.phi(i0, k)) < 1e-12 * peak) ++i0;
            if (s.phi(i0, k) < 0.0) s.phi.col(k) *= -1.0;
        }
        const Eigen::MatrixXd gram = s.phi.transpose() * M.asDiagonal() * s.phi;
        const double err = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
        if (err > 1e-10)
            throw NumericalError("eigenvectors not orthonormal (Gram error " + std::to_string(err) + ")");
        s.form = std::make_shared<const Eigen::SparseMatrix<double>>(std::move(form));
        unique[idx] = std::move(s);
    });

    std::vector<TransverseSector> sectors;
    for (int m = -m_max; m <= m_max; ++m) {
        TransverseSector s = unique[static_cast<std::size_t>(std::abs(m))];
        s.m = m;
        sectors.push_back(std::move(s));
    }
    return std::make_shared<const SpectralModel>(model, std::move(mesh), std::move(sectors), opts.tol_eig);
}

SpectralFunction spectral_function_from_string(const std::string& name) {
    if (name == "inv_sqrt") return SpectralFunction::inv_sqrt;
    if (name == "sqrt") return SpectralFunction::sqrt;
    if (name == "sin_t_sqrt") return SpectralFunction::sin_t_sqrt;
    if (name == "cos_t_sqrt") return SpectralFunction::cos_t_sqrt;
    if (name == "exp_pm_it_sqrt") return SpectralFunction::exp_pm_it_sqrt;
    if (name == "inv") return SpectralFunction::inv;
    throw PreconditionError("unknown spectral function descriptor '" + name + "'");
}

std::string to_string(SpectralFunction f) {
    switch (f) {
        case SpectralFunction::inv_sqrt: return "inv_sqrt";
        case SpectralFunction::sqrt: return "sqrt";
        case SpectralFunction::sin_t_sqrt: return "sin_t_sqrt";
        case SpectralFunction::cos_t_sqrt: return "cos_t_sqrt";
        case SpectralFunction::exp_pm_it_sqrt: return "exp_pm_it_sqrt";
        case SpectralFunction::inv: return "inv";
    }
    return "unknown";
}

std::complex<double> spectral_value(SpectralFunction f, double lambda, const SpectralArgs& args) {
    const double w = std::sqrt(lambda);
    switch (f) {
        case SpectralFunction::inv_sqrt: return 1.0 / w;
        case SpectralFunction::sqrt: return w;
        case SpectralFunction::sin_t_sqrt: return std::sin(args.t * w) / w;
        case SpectralFunction::cos_t_sqrt: return std::cos(args.t * w);
        case SpectralFunction::exp_pm_it_sqrt:
            require(args.sign == 1 || args.sign == -1, "exp_pm_it_sqrt: sign must be +1 or -1");
            return std::polar(1.0, args.sign * args.t * w);
        case SpectralFunction::inv: return 1.0 / lambda;
    }
    throw PreconditionError("unknown spectral function");
}

Eigen::MatrixXcd func_of_A(const SpectralModel& s, SpectralFunction f, const SpectralArgs& args, int m) {
    const auto& sec = s.sector(m);
    Eigen::VectorXcd fv(sec.n_modes());
    for (int k = 0; k < sec.n_modes(); ++k) fv(k) = spectral_value(f, sec.omega2(k), args);
    const Eigen::MatrixXcd phi = sec.phi.cast<std::complex<double>>();
    const Eigen::VectorXcd w = s.weights().cast<std::complex<double>>();
    return phi * fv.asDiagonal() * phi.transpose() * w.asDiagonal();
}

Eigen::MatrixXd form_operator(const SpectralModel& s, int m) {
    const auto& sec = s.sector(m);
    require(static_cast<bool>(sec.form), "form_operator: assembled form not available");
    return s.weights().cwiseInverse().asDiagonal() * Eigen::MatrixXd(*sec.form);
}

}  // namespace kgads
