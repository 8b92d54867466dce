#ifndef DISTLQR_SYSTEM_HPP
#define DISTLQR_SYSTEM_HPP

#include <Eigen/Dense>
#include <vector>

#include "distlqr/rng.hpp"

namespace distlqr {

///// Problem instance: dynamics x' = A x + B u + w, stage cost x'Qx + u'Ru,
/// discount gamma. Q and R are symmetrized and checked positive-definite at
/// construction; immutable afterwards.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double gamma;

  /// Validates dimensions, definiteness of Q and R, and gamma in (0,1).
  static LinearSystem make(Eigen::MatrixXd A, Eigen::MatrixXd B,
                           Eigen::MatrixXd Q, Eigen::MatrixXd R, double gamma);

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
};

/// Static linear policy u = K x, K is p-by-n.
struct FeedbackGain {
  Eigen::MatrixXd K;
};

/// Closed-loop quantities for a (system, gain) pair.
struct ClosedLoop {
  Eigen::MatrixXd A_K;     // A + B K
  Eigen::MatrixXd Q_K;     // Q + K'RK
  double rho_K;            // operator 2-norm of A_K (largest singular value)
  double spectral_radius;  // largest eigenvalue modulus of A_K
};

/// Three independent stability predicates; callers pick the one that gates
/// their feature. mean_square_stable is the minimal condition for the
/// discounted cost to have a finite mean, norm_contractive is the stronger
/// hypothesis the truncation bound needs.
struct StabilityFlags {
  bool mean_square_stable;    // spectral_radius^2 * gamma < 1
  bool norm_contractive;      // rho_K < 1
  bool discount_contractive;  // gamma * rho_K < 1
};

ClosedLoop close_loop(const LinearSystem& sys, const FeedbackGain& gain);

StabilityFlags stability_flags(const ClosedLoop& cl, double gamma);

/// i.i.d. disturbance model with explicit moment bounds sigma0_sq >= E[w'w]
/// and mu0 >= E[||w||]. Bounds are auto-derived at construction where
/// analytic and can be overridden with user-supplied values.
class NoiseModel {
 public:
  enum class Kind { kGaussian, kUniformBox, kDegenerate };

  static NoiseModel gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  static NoiseModel uniform_box(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static NoiseModel degenerate(Eigen::VectorXd point);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double sigma0_sq() const { return sigma0_sq_; }
  double mu0() const { return mu0_; }
  bool is_degenerate() const { return kind_ == Kind::kDegenerate; }

  /// Replace the analytic default bounds. Enforces sigma0_sq >= mu0^2.
  void set_moment_bounds(double sigma0_sq, double mu0);

  /// One draw from the model.
  Eigen::VectorXd sample(RngStream& rng) const;

  /// `count` draws as columns of an n-by-count matrix, in stream order.
  Eigen::MatrixXd sample_columns(int count, RngStream& rng) const;

  // Accessors for the distribution parameters (shape depends on kind).
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::VectorXd& point() const { return point_; }

 private:
  NoiseModel() = default;

  Kind kind_ = Kind::kDegenerate;
  Eigen::Index dim_ = 0;
  Eigen::VectorXd mean_, lower_, upper_, point_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd transform_;  // gaussian: w = mean + transform * z, z ~ N(0,I)
  double sigma0_sq_ = 0.0;
  double mu0_ = 0.0;
};

/// `count` i.i.d. draws; deterministic given the stream's key.
std::vector<Eigen::VectorXd> sample_noise(const NoiseModel& model, int count,
                                          RngStream& rng);

}  // namespace distlqr

#endif  // DISTLQR_SYSTEM_HPP
