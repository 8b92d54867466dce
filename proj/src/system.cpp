#include "distlqr/system.hpp"

#include <cmath>
#include <string>

#include "distlqr/errors.hpp"

namespace distlqr {

namespace {

// Relative eigenvalue threshold for positive-definiteness checks.
constexpr double kPdTol = 1e-10;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

void require_positive_definite(const Eigen::MatrixXd& m, const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  const double max_eig = es.eigenvalues().maxCoeff();
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(max_eig > 0.0) || min_eig <= kPdTol * max_eig) {
    throw InvalidArgumentError(std::string(name) +
                               " must be symmetric positive-definite");
  }
}

double largest_singular_value(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

double largest_eigenvalue_modulus(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

LinearSystem LinearSystem::make(Eigen::MatrixXd A, Eigen::MatrixXd B,
                                Eigen::MatrixXd Q, Eigen::MatrixXd R,
                                double gamma) {
  const Eigen::Index n = A.rows();
  const Eigen::Index p = B.cols();
  if (A.cols() != n) throw DimensionError("A must be square");
  if (B.rows() != n) throw DimensionError("B must have as many rows as A");
  if (Q.rows() != n || Q.cols() != n)
    throw DimensionError("Q must be n-by-n");
  if (R.rows() != p || R.cols() != p)
    throw DimensionError("R must be p-by-p");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InvalidArgumentError("gamma must lie in (0, 1)");

  Q = symmetrize(Q);
  R = symmetrize(R);
  require_positive_definite(Q, "Q");
  require_positive_definite(R, "R");

  return LinearSystem{std::move(A), std::move(B), std::move(Q), std::move(R),
                      gamma};
}

ClosedLoop close_loop(const LinearSystem& sys, const FeedbackGain& gain) {
  if (gain.K.rows() != sys.input_dim() || gain.K.cols() != sys.state_dim()) {
    throw DimensionError("K must be p-by-n for this system");
  }
  ClosedLoop cl;
  cl.A_K = sys.A + sys.B * gain.K;
  cl.Q_K = sys.Q + gain.K.transpose() * sys.R * gain.K;
  cl.rho_K = largest_singular_value(cl.A_K);
  cl.spectral_radius = largest_eigenvalue_modulus(cl.A_K);
  return cl;
}

StabilityFlags stability_flags(const ClosedLoop& cl, double gamma) {
  StabilityFlags f;
  f.mean_square_stable = cl.spectral_radius * cl.spectral_radius * gamma < 1.0;
  f.norm_contractive = cl.rho_K < 1.0;
  f.discount_contractive = gamma * cl.rho_K < 1.0;
  return f;
}

NoiseModel NoiseModel::gaussian(Eigen::VectorXd mean,
                                Eigen::MatrixXd covariance) {
  const Eigen::Index n = mean.size();
  if (covariance.rows() != n || covariance.cols() != n)
    throw DimensionError("covariance must be n-by-n");

  const Eigen::MatrixXd sym = symmetrize(covariance);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -kPdTol * std::max(max_eig, 1.0))
    throw InvalidArgumentError("covariance must be positive-semidefinite");

  NoiseModel m;
  m.kind_ = Kind::kGaussian;
  m.dim_ = n;
  m.mean_ = std::move(mean);
  m.covariance_ = sym;
  // PSD square root: tolerates singular covariances where Cholesky would not.
  m.transform_ = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  m.sigma0_sq_ = sym.trace() + m.mean_.squaredNorm();
  m.mu0_ = std::sqrt(m.sigma0_sq_);
  return m;
}

NoiseModel NoiseModel::uniform_box(Eigen::VectorXd lower,
                                   Eigen::VectorXd upper) {
  if (lower.size() != upper.size())
    throw DimensionError("lower and upper must have equal length");
  if ((lower.array() > upper.array()).any())
    throw InvalidArgumentError("uniform_box requires lower <= upper");

  NoiseModel m;
  m.kind_ = Kind::kUniformBox;
  m.dim_ = lower.size();
  m.lower_ = std::move(lower);
  m.upper_ = std::move(upper);
  // E[w'w] = sum_i var_i + mid_i^2 for independent coordinates.
  const Eigen::ArrayXd width = (m.upper_ - m.lower_).array();
  const Eigen::ArrayXd mid = 0.5 * (m.upper_ + m.lower_).array();
  m.sigma0_sq_ = (width.square() / 12.0 + mid.square()).sum();
  m.mu0_ = std::sqrt(m.sigma0_sq_);
  return m;
}

NoiseModel NoiseModel::degenerate(Eigen::VectorXd point) {
  NoiseModel m;
  m.kind_ = Kind::kDegenerate;
  m.dim_ = point.size();
  m.point_ = std::move(point);
  m.sigma0_sq_ = m.point_.squaredNorm();
  m.mu0_ = m.point_.norm();
  return m;
}

void NoiseModel::set_moment_bounds(double sigma0_sq, double mu0) {
  if (sigma0_sq < 0.0 || mu0 < 0.0)
    throw InvalidArgumentError("moment bounds must be nonnegative");
  if (sigma0_sq < mu0 * mu0)
    throw InvalidArgumentError(
        "moment bounds must satisfy sigma0_sq >= mu0^2");
  sigma0_sq_ = sigma0_sq;
  mu0_ = mu0;
}

Eigen::VectorXd NoiseModel::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::kDegenerate:
      return point_;
    case Kind::kGaussian: {
      Eigen::VectorXd z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = rng.gaussian();
      return mean_ + transform_ * z;
    }
    case Kind::kUniformBox: {
      Eigen::VectorXd w(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i)
        w(i) = rng.uniform(lower_(i), upper_(i));
      return w;
    }
  }
  throw InvalidArgumentError("unknown noise kind");
}

Eigen::MatrixXd NoiseModel::sample_columns(int count, RngStream& rng) const {
  if (count < 0) throw InvalidArgumentError("count must be >= 0");
  Eigen::MatrixXd out(dim_, count);
  for (int j = 0; j < count; ++j) out.col(j) = sample(rng);
  return out;
}

std::vector<Eigen::VectorXd> sample_noise(const NoiseModel& model, int count,
                                          RngStream& rng) {
  if (count < 0) throw InvalidArgumentError("count must be >= 0");
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) draws.push_back(model.sample(rng));
  return draws;
}

}  // namespace distlqr
