#include "dopf/opf/grid.hpp"

#include <cmath>

namespace dopf::opf {

Grid Grid::from_case(const model::Case& c) {
  Grid g;
  g.nb = (int)c.buses.size();
  g.G = MatrixXd::Zero(g.nb, g.nb);
  g.B = MatrixXd::Zero(g.nb, g.nb);
  for (int i = 0; i < g.nb; ++i) {
    g.pos_of_id[c.buses[i].id] = i;
    if (c.buses[i].is_slack) g.slack = i;
  }
  for (int i = 0; i < g.nb; ++i)
    if (i != g.slack) g.non_slack.push_back(i);

  for (const auto& l : c.lines) {
    int i = g.pos_of_id.at(l.from_bus);
    int j = g.pos_of_id.at(l.to_bus);
    g.G(i, j) -= l.g;
    g.G(j, i) -= l.g;
    g.B(i, j) -= l.b;
    g.B(j, i) -= l.b;
    g.G(i, i) += l.g;
    g.G(j, j) += l.g;
    g.B(i, i) += l.b;
    g.B(j, j) += l.b;
  }
  return g;
}

void Grid::injections(const VectorXd& v, const VectorXd& th, VectorXd& p, VectorXd& q) const {
  p = VectorXd::Zero(nb);
  q = VectorXd::Zero(nb);
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nb; ++j) {
      if (G(i, j) == 0.0 && B(i, j) == 0.0) continue;
      double tij = th[i] - th[j];
      double e = G(i, j) * std::cos(tij) + B(i, j) * std::sin(tij);
      double f = G(i, j) * std::sin(tij) - B(i, j) * std::cos(tij);
      p[i] += v[i] * v[j] * e;
      q[i] += v[i] * v[j] * f;
    }
  }
}

void Grid::jacobians(const VectorXd& v, const VectorXd& th, MatrixXd& dp_dv, MatrixXd& dp_dth,
                     MatrixXd& dq_dv, MatrixXd& dq_dth) const {
  dp_dv = MatrixXd::Zero(nb, nb);
  dp_dth = MatrixXd::Zero(nb, nb);
  dq_dv = MatrixXd::Zero(nb, nb);
  dq_dth = MatrixXd::Zero(nb, nb);
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nb; ++j) {
      if (G(i, j) == 0.0 && B(i, j) == 0.0) continue;
      double tij = th[i] - th[j];
      double e = G(i, j) * std::cos(tij) + B(i, j) * std::sin(tij);
      double f = G(i, j) * std::sin(tij) - B(i, j) * std::cos(tij);
      dp_dv(i, i) += v[j] * e;
      dq_dv(i, i) += v[j] * f;
      if (j == i) {
        dp_dv(i, i) += v[i] * G(i, i);
        dq_dv(i, i) -= v[i] * B(i, i);
      } else {
        dp_dv(i, j) = v[i] * e;
        dq_dv(i, j) = v[i] * f;
        dp_dth(i, i) -= v[i] * v[j] * f;
        dq_dth(i, i) += v[i] * v[j] * e;
        dp_dth(i, j) = v[i] * v[j] * f;
        dq_dth(i, j) = -v[i] * v[j] * e;
      }
    }
  }
}

MatrixXd Grid::weighted_hessian(const VectorXd& v, const VectorXd& th, const VectorXd& nu_p,
                                const VectorXd& nu_q) const {
  MatrixXd H = MatrixXd::Zero(2 * nb, 2 * nb);
  auto add = [&](int r, int c, double val) {
    H(r, c) += val;
    if (r != c) H(c, r) += val;
  };
  const int V = 0, T = nb;  // coordinate offsets
  for (int i = 0; i < nb; ++i) {
    double a = nu_p[i], b = nu_q[i];
    if (a == 0.0 && b == 0.0) continue;
    add(V + i, V + i, a * 2.0 * G(i, i) - b * 2.0 * B(i, i));
    for (int j = 0; j < nb; ++j) {
      if (j == i || (G(i, j) == 0.0 && B(i, j) == 0.0)) continue;
      double tij = th[i] - th[j];
      double e = G(i, j) * std::cos(tij) + B(i, j) * std::sin(tij);
      double f = G(i, j) * std::sin(tij) - B(i, j) * std::cos(tij);
      // p_i second derivatives, weight a
      add(V + i, V + j, a * e);
      add(V + i, T + i, -a * v[j] * f);
      add(V + i, T + j, a * v[j] * f);
      add(V + j, T + i, -a * v[i] * f);
      add(V + j, T + j, a * v[i] * f);
      add(T + i, T + i, -a * v[i] * v[j] * e);
      add(T + i, T + j, a * v[i] * v[j] * e);
      add(T + j, T + j, -a * v[i] * v[j] * e);
      // q_i second derivatives, weight b
      add(V + i, V + j, b * f);
      add(V + i, T + i, b * v[j] * e);
      add(V + i, T + j, -b * v[j] * e);
      add(V + j, T + i, b * v[i] * e);
      add(V + j, T + j, -b * v[i] * e);
      add(T + i, T + i, -b * v[i] * v[j] * f);
      add(T + i, T + j, b * v[i] * v[j] * f);
      add(T + j, T + j, -b * v[i] * v[j] * f);
    }
  }
  return H;
}

}  // namespace dopf::opf
