#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "distlqr/errors.hpp"
#include "distlqr/lqr.hpp"
#include "distlqr/optimizer.hpp"
#include "distlqr/system.hpp"
#include "helpers.hpp"

using namespace distlqr;
using testutil::gain1;
using testutil::kBenchmarkGain;
using testutil::scalar_benchmark;
using testutil::unit_gaussian;
using testutil::vec1;

TEST_CASE("perturbations live on the delta sphere") {
  RngStream rng(501);
  for (double delta : {0.01, 0.1, 2.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd u = sample_perturbation(2, 3, delta, rng);
      CHECK(u.rows() == 2);
      CHECK(u.cols() == 3);
      CHECK(u.norm() == doctest::Approx(delta).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(sample_perturbation(0, 2, 0.1, rng), InvalidArgumentError);
  CHECK_THROWS_AS(sample_perturbation(1, 1, 0.0, rng), InvalidArgumentError);
}

TEST_CASE("scalar perturbations are symmetric signs") {
  RngStream rng(503);
  int plus = 0, minus = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double u = sample_perturbation(1, 1, 0.1, rng)(0, 0);
    CHECK(std::abs(u) == doctest::Approx(0.1).epsilon(1e-15));
    (u > 0 ? plus : minus) += 1;
  }
  CHECK(plus > 50);
  CHECK(minus > 50);
}

TEST_CASE("perturbation entries average out") {
  RngStream rng(509);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    sum += sample_perturbation(2, 2, 1.0, rng);
  // Entry variance is delta^2 / n_dim; four standard errors of slack.
  const double tol = 4.0 / std::sqrt(static_cast<double>(draws) * 4.0);
  CHECK(sum.cwiseAbs().maxCoeff() / draws < tol);
}

// The residual estimator differences two evaluations on the same sphere, so
// on the quadratic c(K) = ||K - K*||_F^2 the radius terms cancel and the
// estimate is unbiased for the true gradient.
TEST_CASE("residual estimator aligns with the gradient of a quadratic") {
  Eigen::MatrixXd K(1, 2), K_star(1, 2);
  K << 0.0, 0.0;
  K_star << 0.3, -0.2;
  const auto c = [&](const Eigen::MatrixXd& m) {
    return (m - K_star).squaredNorm();
  };
  const Eigen::MatrixXd grad = 2.0 * (K - K_star);

  const double delta = 0.01;
  const double scale = 2.0 / (delta * delta);
  RngStream rng(521);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(1, 2);
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const Eigen::MatrixXd u = sample_perturbation(1, 2, delta, rng);
    const Eigen::MatrixXd u_prev = sample_perturbation(1, 2, delta, rng);
    avg += scale * (c(K + u) - c(K + u_prev)) * u;
  }
  avg /= draws;

  const double cosine =
      (avg.array() * grad.array()).sum() / (avg.norm() * grad.norm());
  CHECK(cosine > 0.9);
}

TEST_CASE("objective of a noise-free loop is the certificate quadratic") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel zero = NoiseModel::degenerate(Eigen::VectorXd::Zero(1));
  const Eigen::VectorXd x = vec1(1.5);
  const double expected = x.dot(solve_lyapunov(sys, K).P * x);

  CHECK(evaluate_objective(sys, K, zero, x, 10, 1, 1.0, RngStream(1)) ==
        expected);
  CHECK(evaluate_objective(sys, K, zero, x, 10, 64, 1.0, RngStream(1)) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("tail objectives dominate the mean objective") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);
  const RngStream rng(533);

  const double mean = evaluate_objective(sys, K, noise, x, 10, 20000, 1.0, rng);
  const double tail = evaluate_objective(sys, K, noise, x, 10, 20000, 0.4, rng);
  CHECK(tail >= mean);
  CHECK(std::abs(mean - 3.6576) < 0.05);

  CHECK_THROWS_AS(
      evaluate_objective(sys, gain1(0.5), noise, x, 10, 100, 1.0, rng),
      UnstableGainError);
}

TEST_CASE("zero step size freezes the iterate") {
  const LinearSystem sys = scalar_benchmark(0.6);
  PGConfig cfg;
  cfg.eta = 0.0;
  cfg.episodes = 25;
  cfg.truncation = 5;
  cfg.samples = 200;
  cfg.seed = 7;

  const FeedbackGain K0 = gain1(-0.2);
  const OptimizerTrace trace =
      run_policy_search(sys, unit_gaussian(1), vec1(1.0), K0, cfg);

  REQUIRE(trace.episodes.size() == 25);
  CHECK(trace.final_K == K0.K);
  for (const auto& rec : trace.episodes) {
    CHECK(rec.K == K0.K);
    CHECK(rec.K_hat != K0.K);  // probes still move
  }
}

TEST_CASE("trace bookkeeping and post-hoc stability") {
  const LinearSystem sys = scalar_benchmark(0.6);
  PGConfig cfg;
  cfg.eta = 0.002;
  cfg.episodes = 50;
  cfg.truncation = 5;
  cfg.samples = 500;
  cfg.seed = 11;

  const OptimizerTrace trace =
      run_policy_search(sys, unit_gaussian(1), vec1(1.0), gain1(-0.2), cfg);

  REQUIRE(trace.episodes.size() == 50);
  CHECK(trace.K0_hat.rows() == 1);
  CHECK(trace.bootstrap_objective > 0.0);

  Eigen::MatrixXd expected_K = gain1(-0.2).K;
  for (int t = 0; t < 50; ++t) {
    const EpisodeRecord& rec = trace.episodes[static_cast<std::size_t>(t)];
    CHECK(rec.t == t + 1);
    CHECK(rec.K == expected_K);

    // Every probe the optimizer evaluated must have been stable.
    CHECK(stability_flags(close_loop(sys, FeedbackGain{rec.K_hat}), sys.gamma)
              .mean_square_stable);

    // Halving multiplies the step by exact powers of two, so the update can
    // be replayed bitwise.
    expected_K =
        rec.K - cfg.eta * std::pow(0.5, rec.step_halvings) * rec.g;
  }
  CHECK(trace.final_K == expected_K);
  CHECK(stability_flags(close_loop(sys, FeedbackGain{trace.final_K}),
                        sys.gamma)
            .mean_square_stable);
}

TEST_CASE("identical configurations reproduce the trace bitwise") {
  const LinearSystem sys = scalar_benchmark(0.6);
  PGConfig cfg;
  cfg.eta = 0.001;
  cfg.episodes = 20;
  cfg.truncation = 5;
  cfg.samples = 300;
  cfg.seed = 13;

  for (bool crn : {true, false}) {
    cfg.crn = crn;
    const OptimizerTrace a =
        run_policy_search(sys, unit_gaussian(1), vec1(1.0), gain1(-0.2), cfg);
    const OptimizerTrace b =
        run_policy_search(sys, unit_gaussian(1), vec1(1.0), gain1(-0.2), cfg);

    REQUIRE(a.episodes.size() == b.episodes.size());
    CHECK(a.K0_hat == b.K0_hat);
    CHECK(a.bootstrap_objective == b.bootstrap_objective);
    CHECK(a.final_K == b.final_K);
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
      CHECK(a.episodes[i].K_hat == b.episodes[i].K_hat);
      CHECK(a.episodes[i].objective == b.episodes[i].objective);
      CHECK(a.episodes[i].g == b.episodes[i].g);
    }
  }
}

TEST_CASE("risk-neutral and risk-averse searches find their optima") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);
  const FeedbackGain K0 = gain1(-0.2);

  PGConfig cfg;
  cfg.eta = 0.002;
  cfg.delta = 0.1;
  cfg.episodes = 600;
  cfg.truncation = 10;
  cfg.samples = 4000;
  cfg.seed = 17;

  cfg.alpha = 1.0;
  const OptimizerTrace neutral = run_policy_search(sys, noise, x, K0, cfg);
  const double k_neutral = neutral.final_K(0, 0);
  CHECK(std::abs(k_neutral - (-0.4684)) < 0.05);

  cfg.alpha = 0.4;
  const OptimizerTrace averse = run_policy_search(sys, noise, x, K0, cfg);
  const double k_averse = averse.final_K(0, 0);
  CHECK(std::abs(k_averse - (-0.55)) < 0.07);

  // Guarding the tail contracts the loop harder and costs expected value.
  CHECK(std::abs(1.0 + k_averse) < std::abs(1.0 + k_neutral));
  const RngStream eval(901);
  const double cvar_averse =
      evaluate_objective(sys, FeedbackGain{averse.final_K}, noise, x, 10,
                         20000, 0.4, eval);
  const double mean_neutral =
      evaluate_objective(sys, FeedbackGain{neutral.final_K}, noise, x, 10,
                         20000, 1.0, eval);
  CHECK(cvar_averse >= mean_neutral);
}

TEST_CASE("a boundary-hugging start trips the resample guard") {
  const LinearSystem sys = scalar_benchmark(0.6);
  PGConfig cfg;
  cfg.delta = 10.0;  // every probe lands far outside the stability region
  cfg.episodes = 5;
  cfg.truncation = 3;
  cfg.samples = 50;
  cfg.seed = 19;

  try {
    run_policy_search(sys, unit_gaussian(1), vec1(1.0), gain1(-0.05), cfg);
    FAIL("expected StabilityBoundaryError");
  } catch (const StabilityBoundaryError& e) {
    CHECK(e.trace().episodes.empty());  // died during the bootstrap probe
  }
}

TEST_CASE("an oversized step is halved back into the stable region") {
  const LinearSystem sys = scalar_benchmark(0.6);
  PGConfig cfg;
  cfg.eta = 1e12;
  cfg.episodes = 3;
  cfg.truncation = 3;
  cfg.samples = 50;
  cfg.seed = 23;

  const OptimizerTrace trace =
      run_policy_search(sys, unit_gaussian(1), vec1(1.0), gain1(-0.2), cfg);
  bool halved = false;
  for (const auto& rec : trace.episodes) halved |= rec.step_halvings > 0;
  CHECK(halved);
  CHECK(stability_flags(close_loop(sys, FeedbackGain{trace.final_K}),
                        sys.gamma)
            .mean_square_stable);
}

TEST_CASE("configuration validation") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);
  const FeedbackGain K0 = gain1(-0.2);

  PGConfig cfg;
  cfg.episodes = 1;
  cfg.samples = 10;

  PGConfig bad = cfg;
  bad.eta = -1e-4;
  CHECK_THROWS_AS(run_policy_search(sys, noise, x, K0, bad),
                  InvalidArgumentError);
  bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(run_policy_search(sys, noise, x, K0, bad),
                  InvalidArgumentError);
  bad = cfg;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(run_policy_search(sys, noise, x, K0, bad),
                  InvalidArgumentError);
  bad = cfg;
  bad.samples = 0;
  CHECK_THROWS_AS(run_policy_search(sys, noise, x, K0, bad),
                  InvalidArgumentError);
  bad = cfg;
  bad.n_dim = 7;
  CHECK_THROWS_AS(run_policy_search(sys, noise, x, K0, bad),
                  InvalidArgumentError);
  bad = cfg;
  bad.n_dim = 1;  // matches a scalar gain
  CHECK_NOTHROW(run_policy_search(sys, noise, x, K0, bad));

  CHECK_THROWS_AS(run_policy_search(sys, noise, x, gain1(0.5), cfg),
                  UnstableGainError);
  CHECK_THROWS_AS(run_policy_search(sys, noise, vec1(1.0).replicate(2, 1),
                                    K0, cfg),
                  DimensionError);
}
