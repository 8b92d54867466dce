#include "distlqr/mc.hpp"

#include <cmath>
#include <vector>

#include "distlqr/errors.hpp"

namespace distlqr {

int default_horizon(const LinearSystem& sys, const ClosedLoop& cl,
                    const NoiseModel& noise, const Eigen::VectorXd& x,
                    double tail_tol) {
  if (tail_tol <= 0.0) {
    throw InvalidArgumentError("default_horizon: tail_tol must be positive");
  }
  constexpr int kFloor = 50;

  // Stage-cost scale along the trajectory: lambda_max(Q_K) times the squared
  // state magnitude. With a contractive loop the state stays within
  // ||x|| + rms(w)/(1 - rho); otherwise fall back to the initial scale and
  // rely on the floor (the tolerance is reported to the caller either way).
  const double rms_noise = std::sqrt(noise.sigma0_sq());
  double state_scale = x.norm() + rms_noise;
  if (cl.rho_K < 1.0) {
    state_scale = x.norm() + rms_noise / (1.0 - cl.rho_K);
  }
  const double lambda_max =
      cl.Q_K.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
  const double stage_scale = lambda_max * state_scale * state_scale;

  const double target = tail_tol * (1.0 - sys.gamma);
  if (stage_scale <= target) {
    return kFloor;
  }
  const double h = std::ceil(std::log(target / stage_scale) /
                             std::log(sys.gamma));
  return std::max(kFloor, static_cast<int>(h));
}

namespace {

// noise_at(t) supplies the disturbance entering between steps t and t+1.
template <typename NoiseAt>
double run_rollout(const LinearSystem& sys, const ClosedLoop& cl,
                   const Eigen::VectorXd& x0, int horizon, NoiseAt&& noise_at) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd next(x.size());
  double total = 0.0;
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    total += disc * x.dot(cl.Q_K * x);
    next.noalias() = cl.A_K * x;
    next += noise_at(t);
    x.swap(next);
    disc *= sys.gamma;
  }
  return total;
}

}  // namespace

double rollout_return(const LinearSystem& sys, const FeedbackGain& K,
                      const NoiseModel& noise, const Eigen::VectorXd& x,
                      int horizon, RngStream& rng) {
  if (horizon < 0) {
    throw InvalidArgumentError("rollout_return: horizon must be >= 0");
  }
  if (x.size() != sys.state_dim()) {
    throw DimensionError("rollout_return: initial state dimension mismatch");
  }
  if (noise.dim() != sys.state_dim()) {
    throw DimensionError("rollout_return: noise dimension mismatch");
  }
  const ClosedLoop cl = close_loop(sys, K);
  if (!stability_flags(cl, sys.gamma).mean_square_stable) {
    throw UnstableGainError("rollout_return: closed loop is not mean-square stable");
  }
  return run_rollout(sys, cl, x, horizon,
                     [&](int) { return noise.sample(rng); });
}

double rollout_return_on_sequence(const LinearSystem& sys,
                                  const FeedbackGain& K,
                                  const Eigen::VectorXd& x, int horizon,
                                  const std::vector<Eigen::VectorXd>& noise) {
  if (horizon < 0) {
    throw InvalidArgumentError("rollout_return: horizon must be >= 0");
  }
  if (noise.size() < static_cast<std::size_t>(horizon)) {
    throw InvalidArgumentError(
        "rollout_return: noise sequence shorter than horizon");
  }
  const ClosedLoop cl = close_loop(sys, K);
  if (!stability_flags(cl, sys.gamma).mean_square_stable) {
    throw UnstableGainError("rollout_return: closed loop is not mean-square stable");
  }
  return run_rollout(sys, cl, x, horizon,
                     [&](int t) -> const Eigen::VectorXd& {
                       return noise[static_cast<std::size_t>(t)];
                     });
}

EmpiricalDistribution build_mc_distribution(const LinearSystem& sys,
                                            const FeedbackGain& K,
                                            const NoiseModel& noise,
                                            const Eigen::VectorXd& x,
                                            const RolloutConfig& cfg,
                                            const RngStream& rng) {
  if (cfg.horizon < 1) {
    throw InvalidArgumentError("build_mc_distribution: horizon must be >= 1");
  }
  if (cfg.samples < 1) {
    throw InvalidArgumentError("build_mc_distribution: samples must be >= 1");
  }
  const ClosedLoop cl = close_loop(sys, K);
  if (!stability_flags(cl, sys.gamma).mean_square_stable) {
    throw UnstableGainError(
        "build_mc_distribution: closed loop is not mean-square stable");
  }
  std::vector<double> values(static_cast<std::size_t>(cfg.samples));
  for (int m = 0; m < cfg.samples; ++m) {
    RngStream draw = rng.substream("rollout", static_cast<std::uint64_t>(m));
    values[static_cast<std::size_t>(m)] =
        run_rollout(sys, cl, x, cfg.horizon,
                    [&](int) { return noise.sample(draw); });
  }
  return EmpiricalDistribution(std::move(values));
}

}  // namespace distlqr
