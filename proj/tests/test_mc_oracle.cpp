#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "distlqr/errors.hpp"
#include "distlqr/lqr.hpp"
#include "distlqr/mc.hpp"
#include "distlqr/return_dist.hpp"
#include "distlqr/system.hpp"
#include "helpers.hpp"

using namespace distlqr;
using testutil::gain1;
using testutil::kBenchmarkGain;
using testutil::mat1;
using testutil::scalar_benchmark;
using testutil::unit_gaussian;
using testutil::vec1;

TEST_CASE("deadbeat rollout collects only the first stage cost") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const NoiseModel zero = NoiseModel::degenerate(Eigen::VectorXd::Zero(1));
  RngStream rng(1);
  // A_K = 0 and w = 0: the state dies after one step, Q_K = 2.
  const double got = rollout_return(sys, gain1(-1.0), zero, vec1(1.5), 5, rng);
  CHECK(got == 2.0 * 1.5 * 1.5);
}

TEST_CASE("noise-free rollout reproduces the certificate value") {
  const LinearSystem sys =
      LinearSystem::make(mat1(0.9), mat1(1.0), mat1(1.0), mat1(1.0), 0.6);
  const FeedbackGain K = gain1(-0.4);
  const NoiseModel zero = NoiseModel::degenerate(Eigen::VectorXd::Zero(1));
  const ValueCertificate cert = solve_lyapunov(sys, K);

  RngStream rng(2);
  const Eigen::VectorXd x = vec1(2.0);
  const double got = rollout_return(sys, K, zero, x, 60, rng);
  const double expected = x.dot(cert.P * x);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mc mean hits the stationary moment formula") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const ValueCertificate cert = solve_lyapunov(sys, K);
  const Eigen::VectorXd x = vec1(1.0);

  const EmpiricalDistribution d = build_mc_distribution(
      sys, K, unit_gaussian(1), x, RolloutConfig{60, 10000}, RngStream(31));

  // E[G] = x'Px + tr(P Sigma) gamma / (1 - gamma); the part beyond H = 60
  // is smaller than 1e-12 here.
  const double expected =
      x.dot(cert.P * x) + cert.P(0, 0) * 0.6 / 0.4;
  const double mean = d.mean();
  double var = 0.0;
  for (double s : d.samples()) var += (s - mean) * (s - mean);
  var /= d.count() - 1;
  CHECK(std::abs(mean - expected) < 4.0 * std::sqrt(var / d.count()));
}

TEST_CASE("discounting the terminal state closes the telescoping gap") {
  RngStream rng(419);
  for (int trial = 0; trial < 50; ++trial) {
    auto cs = testutil::random_stable_case(rng);
    const int n = static_cast<int>(cs.sys.state_dim());
    const NoiseModel noise = testutil::random_noise(n, rng);
    const int H = 1 + static_cast<int>(rng.next_u64() % 40);
    const Eigen::VectorXd x = testutil::random_matrix(n, 1, rng);

    RngStream seq_rng = rng.substream("seq", trial);
    const std::vector<Eigen::VectorXd> seq = sample_noise(noise, H, seq_rng);

    const ValueCertificate cert = solve_lyapunov(cs.sys, cs.K);
    const ReturnModel model(cs.sys, cs.K, cert, noise, H);
    const ClosedLoop cl = close_loop(cs.sys, cs.K);

    Eigen::VectorXd xh = x;
    for (int t = 0; t < H; ++t) xh = cl.A_K * xh + seq[t];

    const double truncated = sample_return_via_rollout(model, x, seq);
    const double rolled =
        rollout_return_on_sequence(cs.sys, cs.K, x, H, seq) +
        std::pow(cs.sys.gamma, H) * xh.dot(cert.P * xh);
    CHECK(std::abs(truncated - rolled) <= 1e-9 * (1.0 + std::abs(truncated)));
  }
}

TEST_CASE("stream and sequence rollouts consume noise identically") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);

  RngStream a(53), b(53);
  const double streamed = rollout_return(sys, K, noise, x, 25, a);
  const std::vector<Eigen::VectorXd> seq = sample_noise(noise, 25, b);
  CHECK(streamed == rollout_return_on_sequence(sys, K, x, 25, seq));
}

TEST_CASE("mc reference agrees with a deep truncation in distribution") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);
  const RngStream parent(61);

  const EmpiricalDistribution mc = build_mc_distribution(
      sys, K, noise, x, RolloutConfig{60, 10000}, parent.substream("mc", 0));
  const ReturnModel model(sys, K, solve_lyapunov(sys, K), noise, 15);
  const EmpiricalDistribution trunc =
      build_empirical(model, x, 10000, parent.substream("trunc", 0));

  CHECK(ks_distance(mc, trunc) < 0.03);
}

TEST_CASE("doubling the horizon moves the mean less than the tail budget") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);
  const ClosedLoop cl = close_loop(sys, K);

  const double tol = 1e-4;
  const int H = default_horizon(sys, cl, noise, x, tol);
  REQUIRE(H >= 50);

  const RngStream parent(71);
  const EmpiricalDistribution at_h = build_mc_distribution(
      sys, K, noise, x, RolloutConfig{H, 500}, parent);
  const EmpiricalDistribution at_2h = build_mc_distribution(
      sys, K, noise, x, RolloutConfig{2 * H, 500}, parent);

  // Per-draw substreams couple the two runs, so the difference is exactly
  // the mean of the neglected (nonnegative) tails.
  CHECK(at_2h.mean() >= at_h.mean());
  CHECK(at_2h.mean() - at_h.mean() < tol);
}

TEST_CASE("default horizon arithmetic") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const ClosedLoop cl = close_loop(sys, gain1(kBenchmarkGain));
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);

  CHECK(default_horizon(sys, cl, noise, x, 10.0) == 50);
  CHECK(default_horizon(sys, cl, noise, x, 1e-12) >
        default_horizon(sys, cl, noise, x, 1e-4));

  // When the request is tighter than the floor allows, the returned horizon
  // is the smallest H with gamma^H * stage_scale <= tail_tol * (1 - gamma).
  const double tol = 1e-12;
  const int H = default_horizon(sys, cl, noise, x, tol);
  REQUIRE(H > 50);
  const double state_scale = x.norm() + std::sqrt(noise.sigma0_sq()) /
                                            (1.0 - cl.rho_K);
  const double stage_scale = cl.Q_K(0, 0) * state_scale * state_scale;
  const double target = tol * (1.0 - sys.gamma);
  CHECK(std::pow(0.6, H) * stage_scale <= target * (1.0 + 1e-9));
  CHECK(std::pow(0.6, H - 1) * stage_scale > target * (1.0 - 1e-9));

  CHECK_THROWS_AS(default_horizon(sys, cl, noise, x, 0.0),
                  InvalidArgumentError);
}

TEST_CASE("mc builder validation and reproducibility") {
  const LinearSystem sys = scalar_benchmark(0.6);
  const FeedbackGain K = gain1(kBenchmarkGain);
  const NoiseModel noise = unit_gaussian(1);
  const Eigen::VectorXd x = vec1(1.0);

  CHECK_THROWS_AS(build_mc_distribution(sys, K, noise, x, RolloutConfig{0, 10},
                                        RngStream(1)),
                  InvalidArgumentError);
  CHECK_THROWS_AS(build_mc_distribution(sys, K, noise, x, RolloutConfig{10, 0},
                                        RngStream(1)),
                  InvalidArgumentError);

  const LinearSystem bad =
      LinearSystem::make(mat1(2.0), mat1(1.0), mat1(1.0), mat1(1.0), 0.6);
  CHECK_THROWS_AS(build_mc_distribution(bad, gain1(0.0), noise, x,
                                        RolloutConfig{10, 10}, RngStream(1)),
                  UnstableGainError);

  const EmpiricalDistribution a = build_mc_distribution(
      sys, K, noise, x, RolloutConfig{20, 200}, RngStream(5));
  const EmpiricalDistribution b = build_mc_distribution(
      sys, K, noise, x, RolloutConfig{20, 200}, RngStream(5));
  CHECK(a.samples() == b.samples());
}
