#ifndef DISTLQR_MC_HPP
#define DISTLQR_MC_HPP

#include <Eigen/Dense>
#include <vector>

#include "distlqr/return_dist.hpp"
#include "distlqr/rng.hpp"
#include "distlqr/system.hpp"

namespace distlqr {

/// Monte Carlo rollout settings. The horizon must be chosen so that the
/// deterministic discounted tail beyond it is below the tolerance the caller
/// reports alongside the results; default_horizon does that arithmetic.
struct RolloutConfig {
  int horizon = 0;
  int samples = 1;
};

/// Smallest H >= 50 with gamma^H * scale / (1 - gamma) <= tail_tol, where
/// scale estimates the stage-cost magnitude from the initial state and the
/// stationary noise response.
int default_horizon(const LinearSystem& sys, const ClosedLoop& cl,
                    const NoiseModel& noise, const Eigen::VectorXd& x,
                    double tail_tol);

/// Truncated discounted cost of one closed-loop trajectory:
/// sum_{t<H} gamma^t x_t' Q_K x_t with x_{t+1} = A_K x_t + w_t.
double rollout_return(const LinearSystem& sys, const FeedbackGain& K,
                      const NoiseModel& noise, const Eigen::VectorXd& x,
                      int horizon, RngStream& rng);

/// Same trajectory cost on a fixed noise sequence (>= horizon entries used).
double rollout_return_on_sequence(const LinearSystem& sys,
                                  const FeedbackGain& K,
                                  const Eigen::VectorXd& x, int horizon,
                                  const std::vector<Eigen::VectorXd>& noise);

/// cfg.samples independent rollouts, sorted; draw m uses the substream
/// ("rollout", m) of the parent key.
EmpiricalDistribution build_mc_distribution(const LinearSystem& sys,
                                            const FeedbackGain& K,
                                            const NoiseModel& noise,
                                            const Eigen::VectorXd& x,
                                            const RolloutConfig& cfg,
                                            const RngStream& rng);

}  // namespace distlqr

#endif  // DISTLQR_MC_HPP
