#pragma once

#include <Eigen/Dense>

#include "dopf/model/case.hpp"
#include "dopf/nlp/problem.hpp"
#include "dopf/opf/prosumer_problem.hpp"

namespace dopf::opf {

/// Variable layout of the centralized problem: T network slices
/// [v, theta, p_g+, p_g-, q_g] first, then one contiguous block per
/// prosumer laid out like the prosumer QP. The coupling p_hat == p is
/// eliminated by substitution, so no consensus copies exist here.
struct CentralIndex {
  int nb = 0, nh = 0, nt = 0;
  int w_net = 0;
  int off_th = 0, off_pgp = 0, off_pgm = 0, off_qg = 0;
  std::vector<int> pro_var_base, pro_con_base;
  std::vector<ProsumerIndex> pro;
  int n = 0, m = 0;

  int var_v(int t, int k) const { return t * w_net + k; }
  int var_th(int t, int k) const { return t * w_net + off_th + k; }
  int var_pgp(int t) const { return t * w_net + off_pgp; }
  int var_pgm(int t) const { return t * w_net + off_pgm; }
  int var_qg(int t) const { return t * w_net + off_qg; }
  int var_pro(int h, int t, int what) const { return pro_var_base[h] + pro[h].var(t, what); }
};

struct CentralProblem {
  nlp::NlpProblem nlp;
  CentralIndex idx;
};

/// Eq-(5)-style joint problem over the full horizon: one monolithic NLP,
/// intended for desk-scale cases (dense KKT).
CentralProblem build_centralized(const model::Case& c);

}  // namespace dopf::opf
