#ifndef DISTLQR_LQR_HPP
#define DISTLQR_LQR_HPP

#include <Eigen/Dense>
#include <utility>

#include "distlqr/system.hpp"

namespace distlqr {

/// Cost-to-go matrix P for a fixed gain, together with the gain it certifies
/// and the final fixed-point residual ||P - (Q_K + gamma A_K' P A_K)||_F
/// relative to ||P||_F.
struct ValueCertificate {
  Eigen::MatrixXd P;
  FeedbackGain K;
  double residual = 0.0;
  int iterations = 0;
};

inline constexpr double kDefaultSolverTol = 1e-12;
inline constexpr int kDefaultSolverMaxIter = 1'000'000;

/// Relative Lyapunov residual of P for (sys, K).
double lyapunov_residual(const LinearSystem& sys, const FeedbackGain& K,
                         const Eigen::MatrixXd& P);

/// Fixed-point iteration for P = Q_K + gamma A_K' P A_K, started from Q.
/// Requires the closed loop to be mean-square stable.
ValueCertificate solve_lyapunov(const LinearSystem& sys, const FeedbackGain& K,
                                double tol = kDefaultSolverTol,
                                int max_iter = kDefaultSolverMaxIter);

/// Value iteration for the discounted Riccati equation
///   P = Q + gamma A'PA - gamma^2 A'PB (R + gamma B'PB)^{-1} B'PA,
/// started from Q. Returns the fixed point and the gain
///   K* = -gamma (R + gamma B'PB)^{-1} B'PA.
std::pair<ValueCertificate, FeedbackGain> solve_riccati(
    const LinearSystem& sys, double tol = kDefaultSolverTol,
    int max_iter = kDefaultSolverMaxIter);

}  // namespace distlqr

#endif  // DISTLQR_LQR_HPP
