#include "distlqr/bound.hpp"

#include <cmath>

#include "distlqr/errors.hpp"

namespace distlqr {

namespace {

void check_hypotheses(const BoundInputs& b) {
  if (!(b.rho_K < 1.0)) {
    throw HypothesisError("bound: requires ||A_K||_2 < 1");
  }
  if (!(b.gamma > 0.0) || !(b.gamma < 1.0)) {
    throw HypothesisError("bound: requires gamma in (0, 1)");
  }
  if (!(b.gamma * b.rho_K < 1.0)) {
    throw HypothesisError("bound: requires gamma * ||A_K||_2 < 1");
  }
  if (b.sigma0_sq < 0.0 || b.mu0 < 0.0) {
    throw InvalidArgumentError("bound: moment bounds must be nonnegative");
  }
  if (b.L0 && !(*b.L0 > 0.0)) {
    throw InvalidArgumentError("bound: L0 must be positive when supplied");
  }
}

}  // namespace

BoundConstant bound_constant(const BoundInputs& b) {
  check_hypotheses(b);
  const Eigen::MatrixXd& P = b.cert.P;
  const Eigen::VectorXd eigs =
      P.selfadjointView<Eigen::Lower>().eigenvalues();
  const double lambda_max = eigs.maxCoeff();
  // P is symmetric PSD, so the spectral norm is its largest eigenvalue.
  const double p_norm = eigs.cwiseAbs().maxCoeff();
  const double g = b.gamma;

  const double term_var = lambda_max * b.sigma0_sq * g / (1.0 - g);
  const double term_cross =
      2.0 * b.mu0 * p_norm * b.x.norm() * g / (1.0 - g * b.rho_K);
  const double term_mixing = 2.0 * b.mu0 * b.mu0 * p_norm * g * b.rho_K /
                             ((1.0 - g) * (1.0 - b.rho_K));

  BoundConstant out;
  out.C_over_L0 = term_var + term_cross + term_mixing;
  if (b.L0) {
    out.C = *b.L0 * out.C_over_L0;
  }
  return out;
}

double bound_at(const BoundInputs& b, int N) {
  if (N < 1) {
    throw InvalidArgumentError("bound_at: N must be >= 1");
  }
  const BoundConstant c = bound_constant(b);
  const double scale = c.C ? *c.C : c.C_over_L0;
  return scale * std::pow(b.gamma, N);
}

double estimate_density_max(const EmpiricalDistribution& d) {
  if (d.count() == 0) {
    throw EmptyDistributionError("estimate_density_max: empty distribution");
  }
  const int bins = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(d.count()))));
  const auto hist = histogram(d, bins);
  double lo = d.min();
  double hi = d.max();
  if (!(hi > lo)) {
    // Point mass: histogram falls back to a unit-wide window around it.
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  double peak = 0.0;
  for (const auto& bin : hist) {
    peak = std::max(peak, bin.frequency / width);
  }
  return peak;
}

}  // namespace distlqr
