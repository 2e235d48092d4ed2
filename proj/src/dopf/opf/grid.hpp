#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "dopf/model/case.hpp"

namespace dopf::opf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Bus admittance view of a Case plus the polar power-flow evaluations the
/// subproblem builders share: injections, their Jacobian blocks, and the
/// weighted second-derivative accumulation needed for Lagrangian Hessians.
/// All vectors are indexed by bus position (0..nb-1) in Case::buses order.
struct Grid {
  int nb = 0;
  int slack = 0;               // bus position of the slack
  MatrixXd G, B;               // dense admittance, radial cases are tiny
  std::vector<int> non_slack;  // bus positions in variable order
  std::map<int, int> pos_of_id;

  static Grid from_case(const model::Case& c);

  /// p_i = sum_j v_i v_j (G cos + B sin), q_i = sum_j v_i v_j (G sin - B cos).
  void injections(const VectorXd& v, const VectorXd& th, VectorXd& p, VectorXd& q) const;

  /// First derivatives of all injections wrt all (v_k, th_k); nb x nb each.
  void jacobians(const VectorXd& v, const VectorXd& th, MatrixXd& dp_dv, MatrixXd& dp_dth,
                 MatrixXd& dq_dv, MatrixXd& dq_dth) const;

  /// sum_i nu_p[i] hess(p_i) + nu_q[i] hess(q_i) over the stacked [v; th]
  /// coordinates; returns a symmetric 2nb x 2nb matrix.
  MatrixXd weighted_hessian(const VectorXd& v, const VectorXd& th, const VectorXd& nu_p,
                            const VectorXd& nu_q) const;
};

}  // namespace dopf::opf
