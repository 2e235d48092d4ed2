#pragma once

#include <string>
#include <vector>

#include "dopf/nlp/problem.hpp"

namespace dopf::nlp {

struct DerivativeIssue {
  std::string kind;  // "gradient" | "jacobian" | "hessian"
  int row = 0, col = 0;
  double analytic = 0.0, numeric = 0.0, rel_err = 0.0;
};

struct DerivativeReport {
  double max_gradient_err = 0.0;
  double max_jacobian_err = 0.0;
  double max_hessian_err = 0.0;
  std::vector<DerivativeIssue> issues;  // entries above threshold
  bool pass = true;
};

/// Central finite differences against the problem callbacks at x. The
/// Hessian check differentiates the Lagrangian gradient at the supplied nu.
DerivativeReport check_derivatives(const NlpProblem& p, const VectorXd& x,
                                   const VectorXd& nu, double step = 1e-6,
                                   double threshold = 1e-5);

}  // namespace dopf::nlp
