#ifndef DISTLQR_RISK_HPP
#define DISTLQR_RISK_HPP

#include "distlqr/return_dist.hpp"

namespace distlqr {

struct RiskSpec {
  double alpha = 1.0;  // tail fraction in (0, 1]; alpha = 1 recovers the mean
};

/// Mean of the top ceil(alpha * M) samples (upper tail). Ties are included up
/// to the count, so duplicated samples behave deterministically.
double cvar(const EmpiricalDistribution& d, const RiskSpec& spec);

/// Threshold sample of the cvar tail: the (M - m + 1)-th smallest where
/// m = ceil(alpha * M). Always <= cvar(d, alpha).
double value_at_risk(const EmpiricalDistribution& d, double alpha);

}  // namespace distlqr

#endif  // DISTLQR_RISK_HPP
