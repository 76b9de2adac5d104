#pragma once

// Three-channel FastICA: centering, eigen-whitening, then fixed-point
// iterations with the tanh contrast and symmetric decorrelation.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rppg/types.hpp"

namespace rppg {

struct IcaParams {
  double tolerance = 1e-6;
  int max_iterations = 200;
  std::uint32_t seed = 42;
};

struct IcaResult {
  std::array<std::vector<double>, 3> components;
  Eigen::Matrix3d unmixing;   // rows act on whitened data
  Eigen::Matrix3d whitening;  // maps centered input to white data
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// (W W^T)^{-1/2} W
inline Eigen::Matrix3d symmetric_decorrelation(const Eigen::Matrix3d& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(w * w.transpose());
  const Eigen::Vector3d inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace detail

inline IcaResult fastica3(const std::array<ChannelTrace, 3>& traces, const IcaParams& params = {}) {
  const std::size_t n = traces[0].size();
  for (const auto& t : traces) {
    if (t.size() != n) throw Error(Errc::LengthMismatch, "ICA inputs differ in length");
    if (t.fs != traces[0].fs) throw Error(Errc::FsMismatch, "ICA inputs differ in sample rate");
    require_finite(t.samples, "ICA input");
  }
  if (n < 256) throw Error(Errc::TooShort, "ICA needs at least 256 samples");

  Eigen::Matrix<double, 3, Eigen::Dynamic> x(3, static_cast<Eigen::Index>(n));
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) x(c, static_cast<Eigen::Index>(i)) = traces[c].samples[i];
  }
  const Eigen::Vector3d mean = x.rowwise().mean();
  x.colwise() -= mean;
  const Eigen::Matrix3d cov = x * x.transpose() / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d d = es.eigenvalues();  // ascending
  if (!(d(2) > 0.0) || d(0) <= 1e-10 * d(2)) {
    throw Error(Errc::SingularCovariance, "input covariance is rank deficient (constant or duplicate channel)");
  }
  const Eigen::Matrix3d whitening = d.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::Matrix<double, 3, Eigen::Dynamic> z = whitening * x;

  std::mt19937 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix3d w;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) w(r, c) = normal(rng);
  }
  w = detail::symmetric_decorrelation(w);

  IcaResult result;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= params.max_iterations; ++it) {
    const Eigen::Matrix<double, 3, Eigen::Dynamic> y = w * z;
    const Eigen::Matrix<double, 3, Eigen::Dynamic> g = y.array().tanh().matrix();
    const Eigen::Vector3d g_prime_mean = (1.0 - g.array().square()).matrix().rowwise().mean();
    Eigen::Matrix3d w_new = g * z.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = detail::symmetric_decorrelation(w_new);

    const double min_diag = (w_new * w.transpose()).diagonal().cwiseAbs().minCoeff();
    w = w_new;
    result.iterations = it;
    if (1.0 - min_diag < params.tolerance) {
      result.converged = true;
      break;
    }
  }

  const Eigen::Matrix<double, 3, Eigen::Dynamic> s = w * z;
  for (int c = 0; c < 3; ++c) {
    result.components[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) result.components[c][i] = s(c, static_cast<Eigen::Index>(i));
  }
  result.unmixing = w;
  result.whitening = whitening;
  return result;
}

}  // namespace rppg
