#include "distlqr/risk.hpp"

#include <cmath>
#include <numeric>

#include "distlqr/errors.hpp"

namespace distlqr {

namespace {

// Tail size m = ceil(alpha * M), clamped into [1, M] to absorb floating-point
// edge cases at alpha close to 0 or 1.
std::size_t tail_count(std::size_t total, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw InvalidArgumentError("risk: alpha must lie in (0, 1]");
  }
  const auto m = static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(total)));
  return std::min(std::max<std::size_t>(m, 1), total);
}

}  // namespace

double cvar(const EmpiricalDistribution& d, const RiskSpec& spec) {
  const auto& s = d.samples();
  if (s.empty()) {
    throw EmptyDistributionError("cvar: empty distribution");
  }
  const std::size_t m = tail_count(s.size(), spec.alpha);
  const double tail_sum =
      std::accumulate(s.end() - static_cast<std::ptrdiff_t>(m), s.end(), 0.0);
  return tail_sum / static_cast<double>(m);
}

double value_at_risk(const EmpiricalDistribution& d, double alpha) {
  const auto& s = d.samples();
  if (s.empty()) {
    throw EmptyDistributionError("value_at_risk: empty distribution");
  }
  const std::size_t m = tail_count(s.size(), alpha);
  return s[s.size() - m];
}

}  // namespace distlqr
