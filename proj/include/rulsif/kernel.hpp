#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rulsif/rng.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

/// Gaussian kernel width and the basis centers it is evaluated against.
struct KernelSpec {
  double width = 1.0;
  SampleSet centers;

  KernelSpec() = default;
  KernelSpec(double w, SampleSet c) : width(w), centers(std::move(c)) {
    require(width > 0.0 && std::isfinite(width), "KernelSpec: width must be positive");
    require(!centers.empty(), "KernelSpec: centers must be non-empty");
  }
};

/// exp(-|x - c|^2 / (2 sigma^2)); in (0, 1], equals 1 iff x == c.
template <typename DerivedA, typename DerivedB>
double gaussian_kernel(const Eigen::MatrixBase<DerivedA>& x,
                       const Eigen::MatrixBase<DerivedB>& c, double sigma) {
  require(x.size() == c.size(), "gaussian_kernel: dimension mismatch");
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian_kernel: sigma must be positive");
  const double d2 = (x - c).squaredNorm();
  return std::exp(d2 * (-1.0 / (2.0 * sigma * sigma)));
}

namespace detail {

/// Pairwise squared Euclidean distances, points (m x d) against centers (b x d).
inline Matrix squared_distances(const SampleSet& points, const SampleSet& centers) {
  require(points.dim() == centers.dim(), "squared_distances: dimension mismatch");
  Matrix d2(points.size(), centers.size());
  for (Index l = 0; l < centers.size(); ++l) {
    d2.col(l) = (points.data().rowwise() - centers.row(l)).rowwise().squaredNorm();
  }
  return d2;
}

// Same scalar exp as gaussian_kernel so matrix entries match it exactly.
inline Matrix kernel_from_distances(const Matrix& d2, double sigma) {
  const double factor = -1.0 / (2.0 * sigma * sigma);
  return (d2 * factor).unaryExpr([](double v) { return std::exp(v); });
}

}  // namespace detail

/// Entry (i, l) = gaussian_kernel(points[i], centers[l], width).
inline Matrix kernel_matrix(const SampleSet& points, const KernelSpec& spec) {
  require(points.dim() == spec.centers.dim(), "kernel_matrix: dimension mismatch");
  return detail::kernel_from_distances(detail::squared_distances(points, spec.centers),
                                       spec.width);
}

/// Median of all len*(len-1)/2 pairwise Euclidean distances; for an even
/// count, the mean of the two middle order statistics. A zero median
/// (all points identical) is an error: no usable kernel scale exists.
inline double median_pairwise_distance(const SampleSet& points) {
  const Index n = points.size();
  require(n >= 2, "median_pairwise_distance: need at least 2 points");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dist.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  const std::size_t m = dist.size();
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (m % 2 == 0) {
    auto lower = std::max_element(dist.begin(), mid);
    median = 0.5 * (*lower + median);
  }
  if (median <= 0.0) {
    throw numerical_error("median_pairwise_distance: degenerate geometry (all points identical)");
  }
  return median;
}

/// Kernel centers from the numerator set: all of it when it fits under the
/// cap, otherwise a seeded uniform subsample without replacement (returned
/// in original data order).
inline SampleSet select_centers(const SampleSet& numerator, int max_centers,
                                std::uint64_t seed) {
  require(!numerator.empty(), "select_centers: empty numerator");
  require(max_centers >= 1, "select_centers: max_centers must be >= 1");
  if (numerator.size() <= max_centers) return numerator;
  auto engine = make_engine(seed);
  std::vector<Index> idx = shuffled_indices(numerator.size(), engine);
  idx.resize(static_cast<std::size_t>(max_centers));
  std::sort(idx.begin(), idx.end());
  return numerator.rows(idx);
}

}  // namespace rulsif
