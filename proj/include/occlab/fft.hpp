#pragma once

#include <Eigen/Core>

namespace occlab {

/// Unscaled in-place n-dimensional FFT over a row-major n^dim array.
/// Forward uses e^{-2πi k·j/n}; inverse uses e^{+2πi k·j/n}.
void fft_nd(Eigen::VectorXcd& data, int dim, int n, bool inverse);

}  // namespace occlab
