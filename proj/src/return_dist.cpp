#include "distlqr/return_dist.hpp"

#include <algorithm>
#include <cmath>

#include "distlqr/errors.hpp"

namespace distlqr {

namespace {

// Consistency gate for certificates fed into a ReturnModel. Solver defaults
// produce residuals near 1e-12; anything above this points at a (sys, K)
// mismatch rather than roundoff.
constexpr double kCertResidualGate = 1e-6;

void require_state_vector(const ReturnModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.sys().state_dim())
    throw DimensionError("x must have the system's state dimension");
}

}  // namespace

ReturnModel::ReturnModel(LinearSystem sys, FeedbackGain K,
                         ValueCertificate cert, NoiseModel noise,
                         int truncation)
    : sys_(std::move(sys)),
      gain_(std::move(K)),
      cert_(std::move(cert)),
      noise_(std::move(noise)),
      truncation_(truncation) {
  if (truncation_ < 0) throw InvalidArgumentError("N must be >= 0");
  if (noise_.dim() != sys_.state_dim())
    throw DimensionError("noise dimension must match the state dimension");
  if (cert_.P.rows() != sys_.state_dim() ||
      cert_.P.cols() != sys_.state_dim())
    throw DimensionError("certificate P must be n-by-n");
  if (lyapunov_residual(sys_, gain_, cert_.P) > kCertResidualGate)
    throw InvalidArgumentError(
        "certificate does not satisfy the fixed-point equation for this "
        "(system, gain) pair");
  loop_ = close_loop(sys_, gain_);
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty())
    throw EmptyDistributionError("empirical distribution needs >= 1 sample");
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalDistribution::mean() const {
  double acc = 0.0;
  for (double s : samples_) acc += s;
  return acc / static_cast<double>(samples_.size());
}

double EmpiricalDistribution::cdf(double z) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), z);
  return static_cast<double>(it - samples_.begin()) /
         static_cast<double>(samples_.size());
}

double sample_return(const ReturnModel& model, const Eigen::VectorXd& x,
                     RngStream& rng) {
  require_state_vector(model, x);
  const Eigen::MatrixXd& P = model.cert().P;
  const Eigen::MatrixXd& A_K = model.loop().A_K;
  const double gamma = model.sys().gamma;
  const int N = model.truncation();

  double value = x.dot(P * x);
  Eigen::VectorXd a_pow_x = A_K * x;        // A_K^{k+1} x
  Eigen::VectorXd inner = Eigen::VectorXd::Zero(x.size());  // s_k
  double discount = gamma;                  // gamma^{k+1}
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd w = model.noise().sample(rng);
    const Eigen::VectorXd Pw = P * w;
    value += discount * (w.dot(Pw) + 2.0 * a_pow_x.dot(Pw) +
                         2.0 * inner.dot(Pw));
    if (k + 1 < N) {
      inner = A_K * (inner + w);
      a_pow_x = A_K * a_pow_x;
      discount *= gamma;
    }
  }
  return value;
}

double sample_return_via_rollout(
    const ReturnModel& model, const Eigen::VectorXd& x,
    const std::vector<Eigen::VectorXd>& noise_seq) {
  require_state_vector(model, x);
  if (static_cast<int>(noise_seq.size()) != model.truncation())
    throw DimensionError("noise sequence must have exactly N entries");

  const Eigen::MatrixXd& P = model.cert().P;
  const Eigen::MatrixXd& A_K = model.loop().A_K;
  const double gamma = model.sys().gamma;

  double value = x.dot(P * x);
  Eigen::VectorXd state = x;
  double discount = gamma;
  for (const Eigen::VectorXd& w : noise_seq) {
    if (w.size() != x.size())
      throw DimensionError("noise vector dimension mismatch");
    value += discount * (w.dot(P * w) + 2.0 * w.dot(P * (A_K * state)));
    state = A_K * state + w;
    discount *= gamma;
  }
  return value;
}

NoiseTable draw_noise_table(const NoiseModel& noise, int depth, int draws,
                            const RngStream& parent) {
  if (depth < 0) throw InvalidArgumentError("depth must be >= 0");
  if (draws < 1) throw InvalidArgumentError("draws must be >= 1");
  NoiseTable table;
  table.draws = draws;
  table.steps.assign(static_cast<std::size_t>(depth),
                     Eigen::MatrixXd(noise.dim(), draws));
  for (int m = 0; m < draws; ++m) {
    RngStream stream =
        parent.substream("draw", static_cast<std::uint64_t>(m));
    for (int k = 0; k < depth; ++k) table.steps[k].col(m) = noise.sample(stream);
  }
  return table;
}

Eigen::VectorXd evaluate_returns(const ReturnModel& model,
                                 const Eigen::VectorXd& x,
                                 const NoiseTable& table) {
  require_state_vector(model, x);
  if (table.depth() != model.truncation())
    throw DimensionError("noise table depth must equal the model's N");

  const Eigen::MatrixXd& P = model.cert().P;
  const Eigen::MatrixXd& A_K = model.loop().A_K;
  const double gamma = model.sys().gamma;
  const int N = model.truncation();
  const int M = table.draws;

  Eigen::VectorXd values = Eigen::VectorXd::Constant(M, x.dot(P * x));
  Eigen::VectorXd a_pow_x = A_K * x;
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(x.size(), M);
  Eigen::MatrixXd pw(x.size(), M);
  double discount = gamma;
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd& w = table.steps[static_cast<std::size_t>(k)];
    pw.noalias() = P * w;
    values.array() +=
        discount * ((w.array() * pw.array()).colwise().sum() +
                    2.0 * (a_pow_x.transpose() * pw).array() +
                    2.0 * (inner.array() * pw.array()).colwise().sum())
                       .transpose();
    if (k + 1 < N) {
      inner = A_K * (inner + w);
      a_pow_x = A_K * a_pow_x;
      discount *= gamma;
    }
  }
  return values;
}

EmpiricalDistribution build_empirical(const ReturnModel& model,
                                      const Eigen::VectorXd& x, int draws,
                                      const RngStream& rng) {
  if (draws < 1) throw InvalidArgumentError("M must be >= 1");
  const NoiseTable table =
      draw_noise_table(model.noise(), model.truncation(), draws, rng);
  const Eigen::VectorXd values = evaluate_returns(model, x, table);
  return EmpiricalDistribution(
      std::vector<double>(values.data(), values.data() + values.size()));
}

double ks_distance(const EmpiricalDistribution& a,
                   const EmpiricalDistribution& b) {
  const std::vector<double>& sa = a.samples();
  const std::vector<double>& sb = b.samples();
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());

  double sup = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < sa.size() || ib < sb.size()) {
    const double z = (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib]))
                         ? sa[ia]
                         : sb[ib];
    while (ia < sa.size() && sa[ia] <= z) ++ia;
    while (ib < sb.size() && sb[ib] <= z) ++ib;
    sup = std::max(sup, std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
  }
  return sup;
}

std::vector<HistogramBin> histogram(
    const EmpiricalDistribution& dist, int bins,
    std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw InvalidArgumentError("bins must be >= 1");
  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
    if (!(lo < hi)) throw InvalidArgumentError("range requires lo < hi");
  } else {
    lo = dist.min();
    hi = dist.max();
    if (lo == hi) {  // point mass: give the single bin unit width
      lo -= 0.5;
      hi += 0.5;
    }
  }

  const double width = (hi - lo) / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double s : dist.samples()) {
    int idx = static_cast<int>(std::floor((s - lo) / width));
    idx = std::clamp(idx, 0, bins - 1);
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }

  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  const double total = static_cast<double>(dist.count());
  for (int i = 0; i < bins; ++i) {
    out[static_cast<std::size_t>(i)] = {lo + (i + 0.5) * width,
                                        counts[static_cast<std::size_t>(i)] /
                                            total};
  }
  return out;
}

}  // namespace distlqr
