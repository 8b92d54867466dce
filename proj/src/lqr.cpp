#include "distlqr/lqr.hpp"

#include <cmath>

#include "distlqr/errors.hpp"

namespace distlqr {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

double lyapunov_residual(const LinearSystem& sys, const FeedbackGain& K,
                         const Eigen::MatrixXd& P) {
  const ClosedLoop cl = close_loop(sys, K);
  const Eigen::MatrixXd next =
      cl.Q_K + sys.gamma * cl.A_K.transpose() * P * cl.A_K;
  const double denom = P.norm();
  return denom > 0.0 ? (P - next).norm() / denom : (P - next).norm();
}

ValueCertificate solve_lyapunov(const LinearSystem& sys,
                                const FeedbackGain& K, double tol,
                                int max_iter) {
  if (!(tol > 0.0)) throw InvalidArgumentError("tol must be > 0");
  const ClosedLoop cl = close_loop(sys, K);
  if (!stability_flags(cl, sys.gamma).mean_square_stable) {
    throw UnstableGainError(
        "closed loop is not mean-square stable (spectral_radius^2 * gamma >= "
        "1); Lyapunov cost diverges");
  }

  Eigen::MatrixXd P = sys.Q;
  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd next =
        symmetrize(cl.Q_K + sys.gamma * cl.A_K.transpose() * P * cl.A_K);
    residual = (next - P).norm() / std::max(next.norm(), 1e-300);
    if (!std::isfinite(residual)) {
      throw NonConvergenceError("Lyapunov iteration diverged", residual);
    }
    P = std::move(next);
    if (residual <= tol) {
      return ValueCertificate{std::move(P), K, residual, it};
    }
  }
  throw NonConvergenceError("Lyapunov iteration did not converge", residual);
}

std::pair<ValueCertificate, FeedbackGain> solve_riccati(
    const LinearSystem& sys, double tol, int max_iter) {
  if (!(tol > 0.0)) throw InvalidArgumentError("tol must be > 0");
  const double g = sys.gamma;
  const Eigen::MatrixXd& A = sys.A;
  const Eigen::MatrixXd& B = sys.B;

  Eigen::MatrixXd P = sys.Q;
  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd gain_denom = sys.R + g * BtP * B;
    const Eigen::MatrixXd BtPA = BtP * A;
    Eigen::MatrixXd next =
        symmetrize(sys.Q + g * A.transpose() * P * A -
                   g * g * BtPA.transpose() * gain_denom.ldlt().solve(BtPA));
    residual = (next - P).norm() / std::max(next.norm(), 1e-300);
    if (!std::isfinite(residual)) {
      throw NonConvergenceError("Riccati value iteration diverged", residual);
    }
    P = std::move(next);
    if (residual <= tol) {
      const Eigen::MatrixXd denom = sys.R + g * B.transpose() * P * B;
      FeedbackGain K{-g * denom.ldlt().solve(B.transpose() * P * A)};
      if (!stability_flags(close_loop(sys, K), g).mean_square_stable) {
        throw NonConvergenceError(
            "Riccati iteration converged to a gain that is not mean-square "
            "stable",
            residual);
      }
      ValueCertificate cert{std::move(P), K, residual, it};
      return {std::move(cert), std::move(K)};
    }
  }
  throw NonConvergenceError("Riccati value iteration did not converge",
                            residual);
}

}  // namespace distlqr
