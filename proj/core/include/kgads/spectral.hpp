#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kgads/geometry.hpp"
#include "kgads/sem.hpp"

namespace kgads {

/// One transverse Fourier sector m of the spatial operator A. For the strip
/// there is a single sector m = 0.
struct TransverseSector {
    int m = 0;
    /// (2 pi m / ell)^2, the eigenvalue of -d^2/dy^2 on the circle.
    double transverse_eigenvalue = 0.0;
    /// omega_k^2, ascending.
    Eigen::VectorXd omega2;
    /// Columns phi_k, orthonormal in the discrete L^2 inner product.
    Eigen::MatrixXd phi;
    /// Assembled (stiffness + potential) matrix; A_h = M^{-1} form. Absent
    /// when the model was read back from disk.
    std::shared_ptr<const Eigen::SparseMatrix<double>> form;

    int n_modes() const { return static_cast<int>(omega2.size()); }
    double omega(int k) const { return std::sqrt(omega2(k)); }
};

struct SpectralOptions {
    int N = 2000;
    int m_max = 0;
    int n_modes = 40;
    int degree = 8;
    double grading = 2.0;
    double tol_eig = 1e-9;
};

/// Discretization of A = beta^{1/2}(-d_x^2 + (nu^2 - 1/4) x^{-2} + mu^2/k) beta^{1/2}
/// with Friedrichs (form-domain) boundary behaviour at x = 0 and a Dirichlet
/// wall at x = L, by Gauss-Lobatto spectral elements on a graded mesh.
class SpectralModel {
public:
    SpectralModel(MetricModel model, sem::Mesh mesh, std::vector<TransverseSector> sectors,
                  double tol_eig);

    const MetricModel& model() const { return model_; }
    const sem::Mesh& mesh() const { return mesh_; }
    int N() const { return static_cast<int>(x_.size()); }
    const Eigen::VectorXd& x() const { return x_; }
    /// Quadrature weights of the discrete L^2(Sigma) inner product.
    const Eigen::VectorXd& weights() const { return weights_; }
    const std::vector<TransverseSector>& sectors() const { return sectors_; }
    const TransverseSector& sector(int m) const;
    int sector_index(int m) const;
    int m_max() const;
    int n_modes() const { return sectors_.front().n_modes(); }

    /// Certified lower bound of the computed spectrum.
    double m2_floor() const { return m2_floor_; }
    double m_floor_sqrt() const { return std::sqrt(m2_floor_); }
    double omega_max() const;
    double tol_eig() const { return tol_eig_; }

    /// x^{n/2-1} beta^{1/2} and beta^{1/2} x^{-n/2-1}: left and right factors
    /// mapping tilde-weighted kernels to physical ones.
    const Eigen::VectorXd& weight_left() const { return w_left_; }
    const Eigen::VectorXd& weight_right() const { return w_right_; }
    /// Density of the physical volume x^{-n} sqrt(beta k) with respect to dx.
    const Eigen::VectorXd& volume_density() const { return vol_density_; }

    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    std::complex<double> inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const;

    /// Coefficients <phi_k, u> for every retained mode of a sector.
    Eigen::VectorXcd project(int m, const Eigen::VectorXcd& u) const;

    /// A_h u using the assembled form when present, else the mode expansion.
    Eigen::VectorXcd apply_form(int m, const Eigen::VectorXcd& u) const;

    Eigen::VectorXd derivative(const Eigen::VectorXd& u) const { return sem::derivative(mesh_, u); }

private:
    MetricModel model_;
    sem::Mesh mesh_;
    std::vector<TransverseSector> sectors_;
    Eigen::VectorXd x_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd w_left_;
    Eigen::VectorXd w_right_;
    Eigen::VectorXd vol_density_;
    double m2_floor_ = 0.0;
    double tol_eig_ = 1e-9;
};

std::shared_ptr<const SpectralModel> build_spectral(const MetricModel& model,
                                                    const SpectralOptions& opts);

enum class SpectralFunction { inv_sqrt, sqrt, sin_t_sqrt, cos_t_sqrt, exp_pm_it_sqrt, inv };

SpectralFunction spectral_function_from_string(const std::string& name);
std::string to_string(SpectralFunction f);

struct SpectralArgs {
    double t = 0.0;
    /// +1 or -1, used by exp_pm_it_sqrt.
    int sign = 1;
};

/// f(lambda) for an eigenvalue lambda = omega^2. sin_t_sqrt is sin(t omega)/omega.
std::complex<double> spectral_value(SpectralFunction f, double lambda, const SpectralArgs& args);

/// Sum_k f(omega_k^2) phi_k <phi_k, .> as a dense nodal matrix for sector m.
Eigen::MatrixXcd func_of_A(const SpectralModel& s, SpectralFunction f, const SpectralArgs& args,
                           int m = 0);

/// Dense A_h = M^{-1} form for sector m (requires the assembled form).
Eigen::MatrixXd form_operator(const SpectralModel& s, int m = 0);

}  // namespace kgads
