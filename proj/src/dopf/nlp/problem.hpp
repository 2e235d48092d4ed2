#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

namespace dopf::nlp {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Smooth equality-constrained NLP with box bounds:
///   min f(x)  s.t.  c(x) = 0,  lo <= x <= hi  (+-inf allowed).
/// All callbacks are dense; `lagrangian_hessian(x, nu)` must return the
/// Hessian of f + nu.c, which the interior-point method needs beyond the
/// plain objective Hessian whenever c is nonlinear.
struct NlpProblem {
  int n = 0;
  int m = 0;
  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&, const VectorXd&)> lagrangian_hessian;
  std::function<VectorXd(const VectorXd&)> eq_cons;
  std::function<MatrixXd(const VectorXd&)> eq_jacobian;
  VectorXd lo, hi;
  VectorXd x0;

  /// Optional separability structure. When non-empty the problem is a direct
  /// sum of the sub-problems: block b owns variables var_idx and equalities
  /// con_idx, objective terms split accordingly, and solve() handles each
  /// block independently (exact, not a relaxation).
  struct Block {
    std::vector<int> var_idx;
    std::vector<int> con_idx;
    std::shared_ptr<NlpProblem> sub;
  };
  std::vector<Block> partition;
};

enum class SolveStatus { optimal, max_iter, infeasible_detected, solver_error };

const char* to_string(SolveStatus s);

struct KktResiduals {
  double stationarity = 0.0;    // inf-norm of grad f + J'nu - z_lo + z_hi
  double feasibility = 0.0;     // inf-norm of c(x)
  double complementarity = 0.0; // inf-norm of slack .* z
};

struct NlpSolution {
  VectorXd x;
  VectorXd nu;
  VectorXd z_lo, z_hi;
  SolveStatus status = SolveStatus::solver_error;
  KktResiduals kkt;
  int iterations = 0;
  double objective = 0.0;
  std::string message;
};

struct IterTrace {
  int iter = 0;
  double mu = 0.0;
  double alpha = 0.0;
  double merit_before = 0.0;  // both merits under the iteration's own mu/zeta
  double merit_after = 0.0;
  bool relaxed = false;  // line search exhausted, step taken anyway
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 200;
  double mu0 = 0.1;
  double kappa_eps = 10.0;  // centering exit: barrier error <= kappa_eps * mu
  bool trace = false;       // per-iteration log on stderr
  std::function<void(const IterTrace&)> on_iter;
};

NlpSolution solve(const NlpProblem& p, const SolveOptions& opts = {});

/// Fills the whole-problem callbacks of a partitioned problem by scattering
/// and gathering through its blocks (the partition is the direct sum of the
/// sub-problems, so the assembled callbacks are exact).
void attach_partition_callbacks(NlpProblem& p);

/// Convex QP  min 1/2 x'Hx + g'x  s.t.  Ax = b, lo <= x <= hi.
/// H sparse PSD; a diagonal H gets a Schur-complement fast path.
struct BoxQp {
  SpMat H;
  VectorXd g;
  SpMat A;  // 0 rows allowed
  VectorXd b;
  VectorXd lo, hi;
};

struct QpOptions {
  double tol = 1e-9;
  int max_iter = 60;
};

/// Mehrotra predictor-corrector; independent of solve() by design so the two
/// can cross-check each other on convex instances.
NlpSolution solve_qp_box(const BoxQp& qp, const QpOptions& opts = {});

}  // namespace dopf::nlp
