#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace occlab {

struct KrylovOptions {
  double tol = 1e-10;  // absolute, Euclidean norm of the true residual
  int restart = 60;
  int max_iterations = 2000;
};

struct KrylovResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // true residual at each restart
};

/// Right-preconditioned restarted GMRES for A x = b; iterates stay in the range of M.
template <class Op, class Prec>
KrylovResult gmres(const Op& A, const Prec& M, const Eigen::VectorXd& b, Eigen::VectorXd x0,
                   const KrylovOptions& opt = {}) {
  using Eigen::VectorXd;
  KrylovResult out;
  out.x = std::move(x0);
  const int m = opt.restart;
  Eigen::MatrixXd V(b.size(), m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  VectorXd cs(m), sn(m), g(m + 1);

  while (true) {
    VectorXd r = b - A(out.x);
    double beta = r.norm();
    out.residual = beta;
    out.history.push_back(beta);
    if (beta <= opt.tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= opt.max_iterations || !std::isfinite(beta)) return out;

    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();
    int j = 0;
    for (; j < m && out.iterations < opt.max_iterations; ++j) {
      ++out.iterations;
      VectorXd w = A(M(V.col(j)));
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double h = V.col(i).dot(w);
          H(i, j) += h;
          w -= h * V.col(i);
        }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) > 0) V.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double rho = std::hypot(H(j, j), H(j + 1, j));
      cs(j) = rho > 0 ? H(j, j) / rho : 1.0;
      sn(j) = rho > 0 ? H(j + 1, j) / rho : 0.0;
      H(j, j) = rho;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      if (std::abs(g(j + 1)) <= opt.tol * 0.5 || rho == 0.0) {
        ++j;
        break;
      }
    }
    const VectorXd y =
        H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    out.x += M(V.leftCols(j) * y);
  }
}

}  // namespace occlab
