#include "dopf/nlp/kkt.hpp"

#include <cmath>
#include <stdexcept>

#include <lapacke.h>

static_assert(sizeof(lapack_int) == sizeof(int), "ipiv storage assumes 32-bit lapack_int");

namespace dopf::nlp {

bool SymIndefSolver::factor(const Eigen::MatrixXd& K) {
  const int n = (int)K.rows();
  if (K.cols() != n) throw std::invalid_argument("KKT matrix must be square");
  f_ = K;
  ipiv_.assign(n, 0);
  factored_ = false;
  inertia_ = {};

  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, ipiv_.data());
  if (info < 0) return false;
  factored_ = true;

  // Inertia from the block-diagonal D: 1x1 pivots carry their own sign,
  // Bunch-Kaufman 2x2 pivots get classified via their eigenvalues. The zero
  // threshold is absolute: barrier systems carry diagonals up to ~1e12 while
  // healthy constraint-block pivots shrink like their inverse, so a
  // max-relative threshold would misread those pivots as zeros.
  const double tiny = 1e-14;
  auto classify = [&](double ev) {
    if (ev > tiny)
      ++inertia_.n_pos;
    else if (ev < -tiny)
      ++inertia_.n_neg;
    else
      ++inertia_.n_zero;
  };
  for (int k = 0; k < n;) {
    if (ipiv_[k] > 0) {
      classify(f_(k, k));
      ++k;
    } else {
      double a = f_(k, k), c = f_(k + 1, k + 1), b = f_(k + 1, k);
      double t = 0.5 * (a + c);
      double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      classify(t + disc);
      classify(t - disc);
      k += 2;
    }
  }
  return true;
}

Eigen::VectorXd SymIndefSolver::solve(const Eigen::VectorXd& rhs) const {
  if (!factored_) throw std::logic_error("solve() before factor()");
  const int n = (int)f_.rows();
  Eigen::VectorXd x = rhs;
  lapack_int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, f_.data(), n,
                                   const_cast<int*>(ipiv_.data()), x.data(), n);
  if (info != 0) throw std::runtime_error("dsytrs failed");
  return x;
}

}  // namespace dopf::nlp
