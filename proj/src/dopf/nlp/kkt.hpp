#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dopf::nlp {

struct Inertia {
  int n_pos = 0;
  int n_neg = 0;
  int n_zero = 0;
};

/// Dense symmetric indefinite LDL^T (Bunch-Kaufman) with inertia readout,
/// backed by LAPACK dsytrf/dsytrs. factor() may be called repeatedly.
class SymIndefSolver {
 public:
  /// Returns false only when LAPACK rejects the matrix outright; a singular
  /// factorization still reports its inertia (n_zero > 0).
  bool factor(const Eigen::MatrixXd& K);
  const Inertia& inertia() const { return inertia_; }
  bool singular() const { return inertia_.n_zero > 0; }

  /// Solves K x = rhs using the last factorization.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd f_;
  std::vector<int> ipiv_;
  Inertia inertia_;
  bool factored_ = false;
};

}  // namespace dopf::nlp
