#ifndef DISTLQR_RETURN_DIST_HPP
#define DISTLQR_RETURN_DIST_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "distlqr/lqr.hpp"
#include "distlqr/rng.hpp"
#include "distlqr/system.hpp"

namespace distlqr {

/// Everything needed to draw truncated returns: the system, a gain with its
/// cost certificate, the disturbance law, and the truncation depth N.
class ReturnModel {
 public:
  /// Validates that cert actually certifies (sys, K) and that N >= 0.
  ReturnModel(LinearSystem sys, FeedbackGain K, ValueCertificate cert,
              NoiseModel noise, int truncation);

  const LinearSystem& sys() const { return sys_; }
  const FeedbackGain& gain() const { return gain_; }
  const ValueCertificate& cert() const { return cert_; }
  const NoiseModel& noise() const { return noise_; }
  const ClosedLoop& loop() const { return loop_; }
  int truncation() const { return truncation_; }

 private:
  LinearSystem sys_;
  FeedbackGain gain_;
  ValueCertificate cert_;
  NoiseModel noise_;
  ClosedLoop loop_;
  int truncation_;
};

/// Sorted sample set with CDF/extreme queries. Immutable once built.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);

  const std::vector<double>& samples() const { return samples_; }
  int count() const { return static_cast<int>(samples_.size()); }
  double min() const { return samples_.front(); }
  double max() const { return samples_.back(); }
  double mean() const;

  /// Right-continuous empirical CDF: fraction of samples <= z.
  double cdf(double z) const;

 private:
  std::vector<double> samples_;
};

/// One draw of the N-truncated return from state x. Draws the N noise
/// vectors from the stream in order and evaluates the four-term sum with the
/// O(N n^2) recursions (running closed-loop power on x, cumulative inner sum
/// s_k = A_K (s_{k-1} + w_{k-1})); no explicit matrix powers.
double sample_return(const ReturnModel& model, const Eigen::VectorXd& x,
                     RngStream& rng);

/// Deterministic evaluation of the same truncated return on a fixed noise
/// sequence, via the telescoped trajectory form
///   x'Px + sum_t gamma^{t+1} (w_t' P w_t + 2 w_t' P A_K x_t),
/// with x_0 = x and x_{t+1} = A_K x_t + w_t. Algebraically identical to the
/// four-term sum; serves as an independent cross-check of sample_return.
double sample_return_via_rollout(const ReturnModel& model,
                                 const Eigen::VectorXd& x,
                                 const std::vector<Eigen::VectorXd>& noise_seq);

/// Noise table backing a batch of draws: steps[k].col(m) is w_k of draw m.
/// Draw m's vectors come from the substream ("draw", m) of the parent key,
/// so the table is reproducible regardless of how work is scheduled and
/// draw m shares its noise prefix across tables of different depth N.
struct NoiseTable {
  std::vector<Eigen::MatrixXd> steps;
  int draws = 0;

  int depth() const { return static_cast<int>(steps.size()); }
};

NoiseTable draw_noise_table(const NoiseModel& noise, int depth, int draws,
                            const RngStream& parent);

/// Batched evaluation of the truncated return over every draw in the table.
Eigen::VectorXd evaluate_returns(const ReturnModel& model,
                                 const Eigen::VectorXd& x,
                                 const NoiseTable& table);

/// M i.i.d. draws of the truncated return, sorted. Equivalent to evaluating
/// on draw_noise_table(noise, N, M, rng).
EmpiricalDistribution build_empirical(const ReturnModel& model,
                                      const Eigen::VectorXd& x, int draws,
                                      const RngStream& rng);

/// Exact two-sample Kolmogorov-Smirnov statistic sup_z |F_a(z) - F_b(z)|.
double ks_distance(const EmpiricalDistribution& a,
                   const EmpiricalDistribution& b);

struct HistogramBin {
  double center;
  double frequency;
};

/// Evenly spaced bins over [lo, hi] (default: sample min/max). Frequencies
/// sum to one; samples outside a supplied range clamp to the end bins.
std::vector<HistogramBin> histogram(
    const EmpiricalDistribution& dist, int bins,
    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace distlqr

#endif  // DISTLQR_RETURN_DIST_HPP
