#include "occlab/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace occlab {

namespace {

Eigen::FFT<double>& local_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

}  // namespace

void fft_nd(Eigen::VectorXcd& data, int dim, int n, bool inverse) {
  if (n == 1) return;
  auto& fft = local_fft();
  std::vector<std::complex<double>> line(n), out(n);
  const Eigen::Index total = data.size();
  Eigen::Index stride = total;
  for (int axis = 0; axis < dim; ++axis) {
    stride /= n;
    const Eigen::Index block = stride * n;
    for (Eigen::Index outer = 0; outer < total; outer += block) {
      for (Eigen::Index inner = 0; inner < stride; ++inner) {
        const Eigen::Index base = outer + inner;
        for (int t = 0; t < n; ++t) line[t] = data[base + t * stride];
        if (inverse)
          fft.inv(out, line);
        else
          fft.fwd(out, line);
        for (int t = 0; t < n; ++t) data[base + t * stride] = out[t];
      }
    }
  }
}

}  // namespace occlab
