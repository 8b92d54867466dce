#ifndef DISTLQR_BOUND_HPP
#define DISTLQR_BOUND_HPP

#include <Eigen/Dense>
#include <optional>

#include "distlqr/lqr.hpp"
#include "distlqr/return_dist.hpp"

namespace distlqr {

/// Inputs for the geometric truncation-error bound on the return CDF:
///   sup_z |F(z) - F_N(z)| <= C * gamma^N.
/// Requires a contractive closed loop (rho_K < 1, gamma * rho_K < 1); the
/// noise enters through its second-moment bound sigma0_sq >= E[w'w] and mean
/// magnitude bound mu0 >= E[||w||]. L0 bounds the density of the truncated
/// return; when absent, results are reported per unit of L0.
struct BoundInputs {
  ValueCertificate cert;
  double rho_K = 0.0;
  double gamma = 0.0;
  Eigen::VectorXd x;
  double sigma0_sq = 0.0;
  double mu0 = 0.0;
  std::optional<double> L0;
};

struct BoundConstant {
  double C_over_L0 = 0.0;
  std::optional<double> C;
};

/// Assembles the three-term constant
///   C/L0 = lmax(P) sigma0^2 g/(1-g)
///        + 2 mu0 ||P|| ||x|| g/(1 - g rho_K)
///        + 2 mu0^2 ||P|| g rho_K / ((1-g)(1-rho_K)).
BoundConstant bound_constant(const BoundInputs& b);

/// C * gamma^N (or C/L0 * gamma^N when L0 is absent). N >= 1.
double bound_at(const BoundInputs& b, int N);

/// Histogram-based estimate of the density peak of d, with ceil(sqrt(M))
/// bins. A cheap stand-in for the density bound L0 when none is known.
double estimate_density_max(const EmpiricalDistribution& d);

}  // namespace distlqr

#endif  // DISTLQR_BOUND_HPP
