#include "distlqr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "distlqr/lqr.hpp"
#include "distlqr/return_dist.hpp"

namespace distlqr {

namespace {

constexpr int kMaxResamples = 100;
constexpr int kMaxHalvings = 100;

bool is_stable(const LinearSystem& sys, const FeedbackGain& K) {
  return stability_flags(close_loop(sys, K), sys.gamma).mean_square_stable;
}

// Mean of the top ceil(alpha * M) values. Same multiset of tail values as the
// sorted-tail estimator, selected with nth_element to keep the optimizer's
// inner loop linear in M.
double tail_mean(Eigen::VectorXd& values, double alpha) {
  const auto total = static_cast<std::size_t>(values.size());
  if (alpha >= 1.0) {
    return values.mean();
  }
  const auto m = std::min(
      std::max<std::size_t>(
          static_cast<std::size_t>(
              std::ceil(alpha * static_cast<double>(total))),
          1),
      total);
  double* first = values.data();
  double* cut = first + (total - m);
  std::nth_element(first, cut, first + total);
  return std::accumulate(cut, first + total, 0.0) / static_cast<double>(m);
}

void validate_config(const LinearSystem& sys, const PGConfig& cfg) {
  // eta = 0 is allowed on purpose: it freezes the iterate, which is handy for
  // smoke checks of the evaluation pipeline.
  if (cfg.eta < 0.0) {
    throw InvalidArgumentError("policy search: eta must be >= 0");
  }
  if (!(cfg.delta > 0.0)) {
    throw InvalidArgumentError("policy search: delta must be > 0");
  }
  if (cfg.episodes < 0) {
    throw InvalidArgumentError("policy search: episodes must be >= 0");
  }
  if (cfg.truncation < 0) {
    throw InvalidArgumentError("policy search: truncation must be >= 0");
  }
  if (cfg.samples < 1) {
    throw InvalidArgumentError("policy search: samples must be >= 1");
  }
  if (!(cfg.alpha > 0.0) || cfg.alpha > 1.0) {
    throw InvalidArgumentError("policy search: alpha must lie in (0, 1]");
  }
  const int entries =
      static_cast<int>(sys.input_dim() * sys.state_dim());
  if (cfg.n_dim != 0 && cfg.n_dim != entries) {
    throw InvalidArgumentError(
        "policy search: n_dim must equal the entry count of K");
  }
}

}  // namespace

Eigen::MatrixXd sample_perturbation(int rows, int cols, double delta,
                                    RngStream& rng) {
  if (rows < 1 || cols < 1) {
    throw InvalidArgumentError("sample_perturbation: empty shape");
  }
  if (!(delta > 0.0)) {
    throw InvalidArgumentError("sample_perturbation: delta must be > 0");
  }
  Eigen::MatrixXd u(rows, cols);
  double norm = 0.0;
  do {
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) {
        u(i, j) = rng.gaussian();
      }
    }
    norm = u.norm();
  } while (norm == 0.0);
  return (delta / norm) * u;
}

double evaluate_objective(const LinearSystem& sys, const FeedbackGain& K,
                          const NoiseModel& noise, const Eigen::VectorXd& x,
                          int truncation, int samples, double alpha,
                          const RngStream& rng) {
  if (!is_stable(sys, K)) {
    throw UnstableGainError(
        "evaluate_objective: closed loop is not mean-square stable");
  }
  const ValueCertificate cert = solve_lyapunov(sys, K);
  const ReturnModel model(sys, K, cert, noise, truncation);
  const EmpiricalDistribution d = build_empirical(model, x, samples, rng);
  return cvar(d, RiskSpec{alpha});
}

OptimizerTrace run_policy_search(const LinearSystem& sys,
                                 const NoiseModel& noise,
                                 const Eigen::VectorXd& x,
                                 const FeedbackGain& K0, const PGConfig& cfg) {
  validate_config(sys, cfg);
  if (x.size() != sys.state_dim()) {
    throw DimensionError("policy search: initial state dimension mismatch");
  }
  if (noise.dim() != sys.state_dim()) {
    throw DimensionError("policy search: noise dimension mismatch");
  }
  if (!is_stable(sys, K0)) {
    throw UnstableGainError("policy search: K0 is not mean-square stable");
  }

  const int rows = static_cast<int>(sys.input_dim());
  const int cols = static_cast<int>(sys.state_dim());
  const double gradient_scale =
      static_cast<double>(rows * cols) / (cfg.delta * cfg.delta);
  const RngStream root(cfg.seed);

  // With common random numbers every objective evaluation reuses this one
  // noise table, so the residual difference C(K_hat_t) - C(K_hat_{t-1}) sees
  // only the gain change, not fresh sampling noise.
  NoiseTable shared_table;
  if (cfg.crn) {
    shared_table = draw_noise_table(noise, cfg.truncation, cfg.samples,
                                    root.substream("crn", 0));
  }

  OptimizerTrace trace;
  trace.episodes.reserve(static_cast<std::size_t>(cfg.episodes));

  auto objective_at = [&](const FeedbackGain& K, int eval_index) {
    const ValueCertificate cert = solve_lyapunov(sys, K);
    const ReturnModel model(sys, K, cert, noise, cfg.truncation);
    Eigen::VectorXd values;
    if (cfg.crn) {
      values = evaluate_returns(model, x, shared_table);
    } else {
      const NoiseTable fresh =
          draw_noise_table(noise, cfg.truncation, cfg.samples,
                           root.substream("objective",
                                          static_cast<std::uint64_t>(eval_index)));
      values = evaluate_returns(model, x, fresh);
    }
    return tail_mean(values, cfg.alpha);
  };

  // Perturbation index t: 0 is the bootstrap probe, episodes use 1..T.
  auto perturb_near = [&](const Eigen::MatrixXd& K_center, int t,
                          int& resamples) {
    RngStream pstream =
        root.substream("perturb", static_cast<std::uint64_t>(t));
    resamples = 0;
    for (;;) {
      FeedbackGain probe{K_center +
                         sample_perturbation(rows, cols, cfg.delta, pstream)};
      if (is_stable(sys, probe)) {
        return probe;
      }
      if (++resamples >= kMaxResamples) {
        throw StabilityBoundaryError(
            "policy search: 100 consecutive perturbations were unstable",
            std::move(trace));
      }
    }
  };

  int bootstrap_resamples = 0;
  const FeedbackGain K0_hat = perturb_near(K0.K, 0, bootstrap_resamples);
  trace.K0_hat = K0_hat.K;
  trace.bootstrap_objective = objective_at(K0_hat, 0);

  Eigen::MatrixXd K = K0.K;
  double prev_objective = trace.bootstrap_objective;

  for (int t = 1; t <= cfg.episodes; ++t) {
    EpisodeRecord rec;
    rec.t = t;
    rec.K = K;

    const FeedbackGain K_hat = perturb_near(K, t, rec.stability_resamples);
    rec.K_hat = K_hat.K;
    rec.objective = objective_at(K_hat, t);

    rec.g = gradient_scale * (rec.objective - prev_objective) *
            (K_hat.K - K);

    double step = cfg.eta;
    Eigen::MatrixXd K_next = K - step * rec.g;
    while (!is_stable(sys, FeedbackGain{K_next})) {
      if (++rec.step_halvings > kMaxHalvings) {
        throw StabilityBoundaryError(
            "policy search: step halving failed to restore stability",
            std::move(trace));
      }
      step *= 0.5;
      K_next = K - step * rec.g;
    }

    prev_objective = rec.objective;
    K = std::move(K_next);
    trace.episodes.push_back(std::move(rec));
  }

  trace.final_K = K;
  return trace;
}

}  // namespace distlqr
