#pragma once

#include <cstdint>
#include <string>

#include "dopf/admm/types.hpp"
#include "dopf/model/case.hpp"

namespace dopf::admm {

/// One Eq-(9b) round: the engine hands over the freshly quantized targets,
/// the backend returns every prosumer's net-power profile. Implemented by
/// in-process solves and by the UDP aggregator endpoint.
class ProsumerBackend {
 public:
  virtual ~ProsumerBackend() = default;

  struct RoundResult {
    Eigen::MatrixXd p;          // |H| x |T|, per-unit
    double max_solve_ms = 0.0;  // slowest single prosumer solve in the round
    std::uint64_t bytes_up = 0, bytes_down = 0;
    bool ok = true;
    bool transport_fault = false;  // false + !ok means a solver failure
    int failed_agent = -1;
    std::string error;
  };

  virtual RoundResult solve_round(int k, const Eigen::MatrixXd& p_hat,
                                  const Eigen::MatrixXd& lambda, double rho) = 0;

  /// Called once when the loop ends; lets remote backends broadcast DONE.
  virtual void finish(bool success) { (void)success; }
};

/// Reference backend: solves every prosumer QP locally, optionally on a
/// small thread pool (solves are independent, so the result is identical
/// for any worker count).
class InProcessBackend final : public ProsumerBackend {
 public:
  explicit InProcessBackend(const model::Case& c, int workers = 1);
  RoundResult solve_round(int k, const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& lambda,
                          double rho) override;

 private:
  const model::Case& case_;
  int workers_;
};

/// Consensus ADMM over the prosumer points of connection. lambda starts at
/// zero, p at the fixed demand profile; every exchanged array is float32-
/// quantized so deployments with different transports replay the same
/// iterate sequence.
AdmmResult run_admm(const model::Case& c, const AdmmConfig& cfg, ProsumerBackend& backend);

/// Convenience overload with an in-process backend.
AdmmResult run_admm(const model::Case& c, const AdmmConfig& cfg);

}  // namespace dopf::admm
