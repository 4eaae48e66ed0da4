#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace kgads::fourier {

/// Kaiser window of length n with shape parameter beta (symmetric form).
Eigen::VectorXd kaiser(int n, double beta);

/// Forward DFT, X_j = sum_n x_n exp(-2 pi i j n / N), zero-padded to `padded`
/// samples when padded > x.size().
Eigen::VectorXcd dft(const Eigen::VectorXcd& x, int padded = 0);

/// 2-D forward DFT of a rows x cols array (column-major Eigen storage).
Eigen::MatrixXcd dft2(const Eigen::MatrixXcd& x);

/// Angular frequency of DFT bin j for N samples at spacing dt, wrapped to
/// (-pi/dt, pi/dt]. With the forward sign above, exp(+i w t) lands at +w.
double bin_frequency(int j, int N, double dt);

}  // namespace kgads::fourier
