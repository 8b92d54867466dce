#ifndef DISTLQR_TESTS_HELPERS_HPP
#define DISTLQR_TESTS_HELPERS_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "distlqr/rng.hpp"
#include "distlqr/system.hpp"

namespace testutil {

// Scalar benchmark used throughout: A = B = Q = R = 1. At gamma = 0.6 the
// optimal gain is -0.4684 (to four decimals).
inline constexpr double kBenchmarkGain = -0.4684;

inline Eigen::MatrixXd mat1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x(0) = v;
  return x;
}

inline distlqr::LinearSystem scalar_benchmark(double gamma) {
  return distlqr::LinearSystem::make(mat1(1.0), mat1(1.0), mat1(1.0),
                                     mat1(1.0), gamma);
}

inline distlqr::FeedbackGain gain1(double k) {
  return distlqr::FeedbackGain{mat1(k)};
}

inline distlqr::NoiseModel unit_gaussian(int dim) {
  return distlqr::NoiseModel::gaussian(
      Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim));
}

inline Eigen::MatrixXd random_matrix(int rows, int cols,
                                     distlqr::RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

struct StableCase {
  distlqr::LinearSystem sys;
  distlqr::FeedbackGain K;
};

// Draws a system together with a gain whose closed loop is norm-contractive:
// pick the closed-loop matrix first with ||A_K||_2 < rho_max, then back out
// A = A_K - B K. Weights are random SPD with varied scale.
inline StableCase random_stable_case(distlqr::RngStream& rng, int max_n = 4,
                                     int max_p = 2, double rho_max = 0.95) {
  const int n = 1 + static_cast<int>(rng.next_u64() % max_n);
  const int p = 1 + static_cast<int>(rng.next_u64() % max_p);

  Eigen::MatrixXd A_K = random_matrix(n, n, rng);
  const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(A_K).singularValues()(0);
  const double rho = rng.uniform(0.05, rho_max);
  A_K *= (norm > 0.0) ? rho / norm : 0.0;

  Eigen::MatrixXd B = random_matrix(n, p, rng);
  Eigen::MatrixXd K = 0.5 * random_matrix(p, n, rng);
  Eigen::MatrixXd A = A_K - B * K;

  Eigen::MatrixXd Gq = random_matrix(n, n, rng);
  Eigen::MatrixXd Q = 0.1 * Gq * Gq.transpose() +
                      rng.uniform(0.2, 2.0) *
                          Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Gr = random_matrix(p, p, rng);
  Eigen::MatrixXd R = 0.1 * Gr * Gr.transpose() +
                      rng.uniform(0.2, 2.0) *
                          Eigen::MatrixXd::Identity(p, p);

  const double gamma = rng.uniform(0.3, 0.95);
  return {distlqr::LinearSystem::make(std::move(A), std::move(B), std::move(Q),
                                      std::move(R), gamma),
          distlqr::FeedbackGain{std::move(K)}};
}

// Random disturbance model of the given dimension, cycling through the three
// supported kinds so property tests cover all of them.
inline distlqr::NoiseModel random_noise(int dim, distlqr::RngStream& rng) {
  switch (rng.next_u64() % 3) {
    case 0: {
      Eigen::VectorXd mean = 0.3 * random_matrix(dim, 1, rng);
      Eigen::MatrixXd G = random_matrix(dim, dim, rng);
      Eigen::MatrixXd cov = 0.2 * G * G.transpose() +
                            0.05 * Eigen::MatrixXd::Identity(dim, dim);
      return distlqr::NoiseModel::gaussian(mean, cov);
    }
    case 1: {
      Eigen::VectorXd center = 0.3 * random_matrix(dim, 1, rng);
      Eigen::VectorXd half(dim);
      for (int i = 0; i < dim; ++i) half(i) = rng.uniform(0.1, 1.0);
      return distlqr::NoiseModel::uniform_box(center - half, center + half);
    }
    default:
      return distlqr::NoiseModel::degenerate(0.3 * random_matrix(dim, 1, rng));
  }
}

inline double least_squares_slope(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testutil

#endif  // DISTLQR_TESTS_HELPERS_HPP
