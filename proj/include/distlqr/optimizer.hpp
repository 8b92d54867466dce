#ifndef DISTLQR_OPTIMIZER_HPP
#define DISTLQR_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "distlqr/errors.hpp"
#include "distlqr/risk.hpp"
#include "distlqr/system.hpp"

namespace distlqr {

/// Settings for the zeroth-order risk-averse policy search. One run performs
/// `episodes` gradient updates; each update perturbs the current gain on a
/// Frobenius sphere of radius delta and differences two noisy objective
/// evaluations (the residual scheme), so the estimator variance depends
/// heavily on whether the evaluations share noise (crn).
struct PGConfig {
  double eta = 1e-4;        // gradient step size
  double delta = 0.1;       // perturbation radius
  int episodes = 1000;      // number of updates T
  int n_dim = 0;            // entry count of K; 0 means derive from the system
  int truncation = 10;      // return truncation depth N
  int samples = 20000;      // return draws per objective evaluation M
  double alpha = 1.0;       // CVaR tail fraction
  std::uint64_t seed = 0;
  bool crn = true;          // reuse one noise table across all evaluations
};

struct EpisodeRecord {
  int t = 0;
  Eigen::MatrixXd K;       // iterate at the start of the episode
  Eigen::MatrixXd K_hat;   // perturbed gain actually evaluated
  double objective = 0.0;  // CVaR estimate at K_hat
  Eigen::MatrixXd g;       // gradient estimate used for the update
  int stability_resamples = 0;
  int step_halvings = 0;
};

/// Audit trail of one run. Every K_hat recorded here passed the mean-square
/// stability check before being evaluated.
struct OptimizerTrace {
  Eigen::MatrixXd K0_hat;            // bootstrap probe gain K_0 + U_0
  double bootstrap_objective = 0.0;  // its objective value
  std::vector<EpisodeRecord> episodes;
  Eigen::MatrixXd final_K;           // iterate after the last update
};

/// Raised when perturbation resampling keeps landing on unstable gains; the
/// episodes completed before the failure are preserved.
class StabilityBoundaryError : public Error {
 public:
  StabilityBoundaryError(const std::string& what, OptimizerTrace partial)
      : Error(what), trace_(std::move(partial)) {}

  const OptimizerTrace& trace() const { return trace_; }

 private:
  OptimizerTrace trace_;
};

/// Random direction on the Frobenius sphere of radius delta in the
/// rows-by-cols entry space: i.i.d. gaussian entries normalized to delta.
Eigen::MatrixXd sample_perturbation(int rows, int cols, double delta,
                                    RngStream& rng);

/// CVaR of the truncated return under gain K from state x, estimated from
/// `samples` draws. Solves the policy cost matrix for K internally.
double evaluate_objective(const LinearSystem& sys, const FeedbackGain& K,
                          const NoiseModel& noise, const Eigen::VectorXd& x,
                          int truncation, int samples, double alpha,
                          const RngStream& rng);

/// Zeroth-order policy search with residual gradient estimates:
///   K_{t+1} = K_t - eta * (n_dim / delta^2) * (C(K_t + U_t) - C(prev)) * U_t.
/// Perturbed gains that break mean-square stability are resampled (capped at
/// 100 per episode); updates that would leave the stable region are
/// step-halved. Deterministic for a given config.
OptimizerTrace run_policy_search(const LinearSystem& sys,
                                 const NoiseModel& noise,
                                 const Eigen::VectorXd& x,
                                 const FeedbackGain& K0, const PGConfig& cfg);

}  // namespace distlqr

#endif  // DISTLQR_OPTIMIZER_HPP
