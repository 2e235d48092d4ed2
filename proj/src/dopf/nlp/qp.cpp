#include <Eigen/SparseCholesky>
#include <cmath>

#include "dopf/nlp/kkt.hpp"
#include "dopf/nlp/problem.hpp"

// Mehrotra predictor-corrector for box/equality QPs. Deliberately shares no
// code with the general interior-point solver in ipm.cpp: the two paths act
// as mutual oracles on convex instances.

namespace dopf::nlp {
namespace {

struct QpWork {
  const SpMat& H;
  const VectorXd& g;
  const SpMat& A;
  const VectorXd& b;
  const VectorXd& lo;
  const VectorXd& hi;
  int n, m;

  bool h_diagonal = false;
  bool schur_ready = false;
  Eigen::SimplicialLDLT<SpMat> schur;
  VectorXd winv;
  SymIndefSolver dense_kkt;

  explicit QpWork(const BoxQp& qp)
      : H(qp.H), g(qp.g), A(qp.A), b(qp.b), lo(qp.lo), hi(qp.hi),
        n((int)qp.g.size()), m((int)qp.b.size()) {
    h_diagonal = true;
    for (int k = 0; k < H.outerSize() && h_diagonal; ++k)
      for (SpMat::InnerIterator it(H, k); it; ++it)
        if (it.row() != it.col() && it.value() != 0.0) {
          h_diagonal = false;
          break;
        }
  }

  // Factors [H + diag(sigma), A'; A, 0] either via the diagonal Schur
  // complement A W^-1 A' or as a dense symmetric-indefinite system.
  bool factor(const VectorXd& sigma) {
    if (h_diagonal) {
      VectorXd w = sigma;
      for (int k = 0; k < H.outerSize(); ++k)
        for (SpMat::InnerIterator it(H, k); it; ++it)
          if (it.row() == it.col()) w[it.row()] += it.value();
      if ((w.array() <= 0.0).any()) return factor_dense(sigma);
      winv = w.cwiseInverse();
      if (m > 0) {
        SpMat S = A * winv.asDiagonal() * SpMat(A.transpose());
        if (!schur_ready) {
          schur.analyzePattern(S);
          schur_ready = true;
        }
        schur.factorize(S);
        if (schur.info() != Eigen::Success) return factor_dense(sigma);
      }
      use_dense_ = false;
      return true;
    }
    return factor_dense(sigma);
  }

  bool factor_dense(const VectorXd& sigma) {
    MatrixXd K = MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = MatrixXd(H);
    K.topLeftCorner(n, n).diagonal() += sigma;
    if (m > 0) K.bottomLeftCorner(m, n) = MatrixXd(A);
    if (!dense_kkt.factor(K) || dense_kkt.singular()) {
      K.topLeftCorner(n, n).diagonal().array() += 1e-10;
      K.bottomRightCorner(m, m).diagonal().array() -= 1e-12;
      if (!dense_kkt.factor(K) || dense_kkt.singular()) return false;
    }
    use_dense_ = true;
    return true;
  }

  void solve(const VectorXd& rx, const VectorXd& rp, VectorXd& dx, VectorXd& dnu) const {
    if (use_dense_) {
      VectorXd rhs(n + m);
      rhs.head(n) = rx;
      rhs.tail(m) = rp;
      VectorXd s = dense_kkt.solve(rhs);
      dx = s.head(n);
      dnu = s.tail(m);
      return;
    }
    if (m > 0) {
      dnu = schur.solve(A * winv.cwiseProduct(rx) - rp);
      dx = winv.cwiseProduct(rx - SpMat(A.transpose()) * dnu);
    } else {
      dnu.resize(0);
      dx = winv.cwiseProduct(rx);
    }
  }

 private:
  bool use_dense_ = false;
};

struct Reduced {
  BoxQp qp;
  std::vector<int> free_idx, fixed_idx;
  bool trivial = true;
};

Reduced reduce_fixed(const BoxQp& full) {
  Reduced r;
  const int n = (int)full.g.size();
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(full.lo[i]) && std::isfinite(full.hi[i]) &&
        full.hi[i] - full.lo[i] < 1e-12)
      r.fixed_idx.push_back(i);
    else
      r.free_idx.push_back(i);
  }
  if (r.fixed_idx.empty()) return r;
  r.trivial = false;

  std::vector<int> map(n, -1);
  for (int i = 0; i < (int)r.free_idx.size(); ++i) map[r.free_idx[i]] = i;
  const int nr = (int)r.free_idx.size();

  VectorXd xfix = VectorXd::Zero(n);
  for (int f : r.fixed_idx) xfix[f] = full.lo[f];

  std::vector<Eigen::Triplet<double>> ht;
  VectorXd gr = full.g(r.free_idx);
  for (int k = 0; k < full.H.outerSize(); ++k)
    for (SpMat::InnerIterator it(full.H, k); it; ++it) {
      int i = (int)it.row(), j = (int)it.col();
      if (map[i] >= 0 && map[j] >= 0)
        ht.emplace_back(map[i], map[j], it.value());
      else if (map[i] >= 0 && map[j] < 0)
        gr[map[i]] += it.value() * xfix[j];
    }
  r.qp.H.resize(nr, nr);
  r.qp.H.setFromTriplets(ht.begin(), ht.end());
  r.qp.g = gr;

  VectorXd br = full.b;
  std::vector<Eigen::Triplet<double>> at;
  for (int k = 0; k < full.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(full.A, k); it; ++it) {
      int i = (int)it.row(), j = (int)it.col();
      if (map[j] >= 0)
        at.emplace_back(i, map[j], it.value());
      else
        br[i] -= it.value() * xfix[j];
    }
  r.qp.A.resize(full.b.size(), nr);
  r.qp.A.setFromTriplets(at.begin(), at.end());
  r.qp.b = br;
  r.qp.lo = full.lo(r.free_idx);
  r.qp.hi = full.hi(r.free_idx);
  return r;
}

NlpSolution solve_core(const BoxQp& qp, const QpOptions& opts) {
  const int n = (int)qp.g.size();
  const int m = (int)qp.b.size();
  QpWork work(qp);

  NlpSolution sol;
  sol.x = VectorXd::Zero(n);
  sol.nu = VectorXd::Zero(m);
  sol.z_lo = VectorXd::Zero(n);
  sol.z_hi = VectorXd::Zero(n);
  VectorXd& x = sol.x;
  VectorXd& nu = sol.nu;
  VectorXd& zl = sol.z_lo;
  VectorXd& zh = sol.z_hi;

  int n_act = 0;
  for (int i = 0; i < n; ++i) {
    bool flo = std::isfinite(qp.lo[i]), fhi = std::isfinite(qp.hi[i]);
    if (flo && fhi)
      x[i] = 0.5 * (qp.lo[i] + qp.hi[i]);
    else if (flo)
      x[i] = qp.lo[i] + 1.0;
    else if (fhi)
      x[i] = qp.hi[i] - 1.0;
    if (flo) {
      zl[i] = 1.0;
      ++n_act;
    }
    if (fhi) {
      zh[i] = 1.0;
      ++n_act;
    }
  }

  const double gscale = 1.0 + qp.g.lpNorm<Eigen::Infinity>();
  const double bscale = 1.0 + (m > 0 ? qp.b.lpNorm<Eigen::Infinity>() : 0.0);

  if (n_act == 0) {
    // Pure equality QP: one KKT solve.
    if (!work.factor(VectorXd::Zero(n))) {
      sol.status = SolveStatus::solver_error;
      sol.message = "singular equality QP";
      return sol;
    }
    VectorXd dx, dnu;
    work.solve(-qp.g, qp.b, dx, dnu);
    x = dx;
    nu = dnu;
    VectorXd rd = qp.H * x + qp.g;
    if (m > 0) rd += SpMat(qp.A.transpose()) * nu;
    sol.kkt.stationarity = rd.lpNorm<Eigen::Infinity>();
    sol.kkt.feasibility = m > 0 ? (qp.A * x - qp.b).lpNorm<Eigen::Infinity>() : 0.0;
    sol.status = sol.kkt.feasibility <= 1e-6 * bscale ? SolveStatus::optimal
                                                      : SolveStatus::infeasible_detected;
    sol.iterations = 1;
    sol.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
    return sol;
  }

  sol.status = SolveStatus::max_iter;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    VectorXd rd = qp.H * x + qp.g - zl + zh;
    if (m > 0) rd += SpMat(qp.A.transpose()) * nu;
    VectorXd rp = m > 0 ? VectorXd(qp.A * x - qp.b) : VectorXd(0);

    double comp = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(qp.lo[i])) comp += (x[i] - qp.lo[i]) * zl[i];
      if (std::isfinite(qp.hi[i])) comp += (qp.hi[i] - x[i]) * zh[i];
    }
    double mu = comp / n_act;

    sol.kkt.stationarity = rd.lpNorm<Eigen::Infinity>();
    sol.kkt.feasibility = m > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0;
    sol.kkt.complementarity = mu;
    if (sol.kkt.stationarity <= opts.tol * gscale && sol.kkt.feasibility <= opts.tol * bscale &&
        mu <= opts.tol) {
      sol.status = SolveStatus::optimal;
      break;
    }

    VectorXd sigma = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(qp.lo[i])) sigma[i] += zl[i] / (x[i] - qp.lo[i]);
      if (std::isfinite(qp.hi[i])) sigma[i] += zh[i] / (qp.hi[i] - x[i]);
    }
    if (!work.factor(sigma)) {
      sol.status = SolveStatus::solver_error;
      sol.message = "QP KKT factorization failed";
      break;
    }

    auto directions = [&](double smu, const VectorXd& corr_l, const VectorXd& corr_h,
                          VectorXd& dx, VectorXd& dnu, VectorXd& dzl, VectorXd& dzh) {
      VectorXd rx = -(qp.H * x + qp.g);
      if (m > 0) rx -= SpMat(qp.A.transpose()) * nu;
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(qp.lo[i])) rx[i] += (smu - corr_l[i]) / (x[i] - qp.lo[i]);
        if (std::isfinite(qp.hi[i])) rx[i] -= (smu - corr_h[i]) / (qp.hi[i] - x[i]);
      }
      work.solve(rx, -rp, dx, dnu);
      dzl = VectorXd::Zero(n);
      dzh = VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(qp.lo[i])) {
          double s = x[i] - qp.lo[i];
          dzl[i] = (smu - corr_l[i]) / s - zl[i] - zl[i] / s * dx[i];
        }
        if (std::isfinite(qp.hi[i])) {
          double s = qp.hi[i] - x[i];
          dzh[i] = (smu - corr_h[i]) / s - zh[i] + zh[i] / s * dx[i];
        }
      }
    };
    auto max_steps = [&](const VectorXd& dx, const VectorXd& dzl, const VectorXd& dzh,
                         double& ap, double& ad) {
      ap = 1.0;
      ad = 1.0;
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(qp.lo[i]) && dx[i] < 0.0)
          ap = std::min(ap, -(x[i] - qp.lo[i]) / dx[i]);
        if (std::isfinite(qp.hi[i]) && dx[i] > 0.0)
          ap = std::min(ap, (qp.hi[i] - x[i]) / dx[i]);
        if (dzl[i] < 0.0) ad = std::min(ad, -zl[i] / dzl[i]);
        if (dzh[i] < 0.0) ad = std::min(ad, -zh[i] / dzh[i]);
      }
    };

    VectorXd zero = VectorXd::Zero(n);
    VectorXd dxa, dnua, dzla, dzha;
    directions(0.0, zero, zero, dxa, dnua, dzla, dzha);
    double apa, ada;
    max_steps(dxa, dzla, dzha, apa, ada);

    double mu_aff = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(qp.lo[i]))
        mu_aff += (x[i] - qp.lo[i] + apa * dxa[i]) * (zl[i] + ada * dzla[i]);
      if (std::isfinite(qp.hi[i]))
        mu_aff += (qp.hi[i] - x[i] - apa * dxa[i]) * (zh[i] + ada * dzha[i]);
    }
    mu_aff /= n_act;
    double sigma_c = std::pow(std::min(1.0, std::max(0.0, mu_aff / mu)), 3);

    VectorXd corr_l = dxa.cwiseProduct(dzla);
    VectorXd corr_h = (-dxa).cwiseProduct(dzha);
    VectorXd dx, dnu, dzl, dzh;
    directions(sigma_c * mu, corr_l, corr_h, dx, dnu, dzl, dzh);

    double ap, ad;
    max_steps(dx, dzl, dzh, ap, ad);
    ap = std::min(1.0, 0.995 * ap);
    ad = std::min(1.0, 0.995 * ad);

    x += ap * dx;
    if (m > 0) nu += ad * dnu;
    zl += ad * dzl;
    zh += ad * dzh;
  }

  sol.iterations = iter;
  sol.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
  if (sol.status == SolveStatus::max_iter &&
      sol.kkt.feasibility > 1e-7 * bscale)
    sol.status = SolveStatus::infeasible_detected;
  return sol;
}

}  // namespace

NlpSolution solve_qp_box(const BoxQp& qp, const QpOptions& opts) {
  const int n = (int)qp.g.size();
  Reduced red = reduce_fixed(qp);
  if (red.trivial) return solve_core(qp, opts);

  NlpSolution rs = solve_core(red.qp, opts);

  NlpSolution sol;
  sol.status = rs.status;
  sol.kkt = rs.kkt;
  sol.iterations = rs.iterations;
  sol.message = rs.message;
  sol.nu = rs.nu;
  sol.x = VectorXd::Zero(n);
  sol.z_lo = VectorXd::Zero(n);
  sol.z_hi = VectorXd::Zero(n);
  for (int f : red.fixed_idx) sol.x[f] = qp.lo[f];
  for (int i = 0; i < (int)red.free_idx.size(); ++i) {
    sol.x[red.free_idx[i]] = rs.x[i];
    sol.z_lo[red.free_idx[i]] = rs.z_lo[i];
    sol.z_hi[red.free_idx[i]] = rs.z_hi[i];
  }
  VectorXd stat = qp.H * sol.x + qp.g;
  if (qp.b.size() > 0) stat += SpMat(qp.A.transpose()) * sol.nu;
  for (int f : red.fixed_idx) {
    if (stat[f] >= 0.0)
      sol.z_lo[f] = stat[f];
    else
      sol.z_hi[f] = -stat[f];
  }
  sol.objective = 0.5 * sol.x.dot(qp.H * sol.x) + qp.g.dot(sol.x);
  return sol;
}

}  // namespace dopf::nlp
