#include "kgads/fourier.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "kgads/error.hpp"

namespace kgads::fourier {

namespace {
// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Eigen::VectorXd kaiser(int n, double beta) {
    require(n >= 2, "kaiser window needs at least 2 samples");
    Eigen::VectorXd w(n);
    const double norm = std::cyl_bessel_i(0.0, beta);
    for (int i = 0; i < n; ++i) {
        const double r = 2.0 * i / (n - 1) - 1.0;
        w(i) = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    }
    return w;
}

Eigen::VectorXcd dft(const Eigen::VectorXcd& x, int padded) {
    const int n = std::max<int>(static_cast<int>(x.size()), padded);
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(n);
    in.head(x.size()) = x;
    Eigen::VectorXcd out(n);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, pin, pout, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

Eigen::MatrixXcd dft2(const Eigen::MatrixXcd& x) {
    const int rows = static_cast<int>(x.rows());
    const int cols = static_cast<int>(x.cols());
    Eigen::MatrixXcd in = x;
    Eigen::MatrixXcd out(rows, cols);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        // FFTW is row-major; column-major storage is the transposed array,
        // and the 2-D DFT commutes with transposition.
        plan = fftw_plan_dft_2d(cols, rows, pin, pout, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

double bin_frequency(int j, int N, double dt) {
    const int k = (j <= N / 2) ? j : j - N;
    return 2.0 * std::numbers::pi * k / (N * dt);
}

}  // namespace kgads::fourier
