#include "rulsif/kernel.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

using namespace rulsif;

namespace {

SampleSet points1d(std::initializer_list<double> values) {
  Matrix m(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return SampleSet(m);
}

}  // namespace

TEST(GaussianKernel, IdentityPoint) {
  Vector x = Vector::Zero(2);
  EXPECT_DOUBLE_EQ(gaussian_kernel(x, x, 1.0), 1.0);
}

TEST(GaussianKernel, KnownValue) {
  // |x - c| = sigma * sqrt(2) gives exp(-1) for any sigma
  for (double sigma : {0.5, 1.0, 3.0}) {
    Vector x = Vector::Zero(1);
    Vector c = Vector::Constant(1, sigma * std::sqrt(2.0));
    EXPECT_NEAR(gaussian_kernel(x, c, sigma), std::exp(-1.0), 1e-15);
  }
}

TEST(GaussianKernel, SymmetricInArguments) {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 20; ++rep) {
    Vector x(3), c(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = g(eng);
      c[j] = g(eng);
    }
    EXPECT_DOUBLE_EQ(gaussian_kernel(x, c, 0.7), gaussian_kernel(c, x, 0.7));
  }
}

TEST(GaussianKernel, RejectsBadInputs) {
  Vector x = Vector::Zero(2), c = Vector::Zero(3);
  EXPECT_THROW(gaussian_kernel(x, c, 1.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(x, x, 0.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(x, x, -1.0), std::invalid_argument);
}

TEST(KernelMatrix, SinglePoint) {
  const SampleSet p = points1d({2.0});
  const Matrix m = kernel_matrix(p, KernelSpec(1.5, p));
  ASSERT_EQ(m.rows(), 1);
  ASSERT_EQ(m.cols(), 1);
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
}

TEST(KernelMatrix, MatchesScalarKernel) {
  const SampleSet points = points1d({0.0, 1.0});
  const SampleSet centers = points1d({0.0});
  const Matrix m = kernel_matrix(points, KernelSpec(1.0, centers));
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 0), std::exp(-0.5));
  // entries agree with the scalar kernel exactly
  EXPECT_DOUBLE_EQ(m(1, 0), gaussian_kernel(points.row(1), centers.row(0), 1.0));
}

TEST(KernelMatrix, EntriesInUnitIntervalWithUnitSelfDiagonal) {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> g;
  Matrix data(40, 3);
  for (Index i = 0; i < data.size(); ++i) data(i / 3, i % 3) = g(eng);
  const SampleSet p{data};
  const Matrix m = kernel_matrix(p, KernelSpec(0.8, p));
  EXPECT_TRUE((m.array() > 0.0).all());
  EXPECT_TRUE((m.array() <= 1.0).all());
  for (Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(m(i, i), 1.0);
}

TEST(KernelMatrix, TranslationInvariant) {
  std::mt19937_64 eng(13);
  std::normal_distribution<double> g;
  Matrix a(15, 2), c(6, 2);
  for (Index i = 0; i < a.size(); ++i) a(i / 2, i % 2) = g(eng);
  for (Index i = 0; i < c.size(); ++i) c(i / 2, i % 2) = g(eng);
  Eigen::RowVector2d shift(12.5, -3.25);
  const Matrix base = kernel_matrix(SampleSet(a), KernelSpec(1.1, SampleSet(c)));
  const Matrix moved = kernel_matrix(SampleSet(a.rowwise() + shift),
                                     KernelSpec(1.1, SampleSet(c.rowwise() + shift)));
  EXPECT_LT((base - moved).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MedianPairwiseDistance, ThreePoints) {
  // distances {1, 2, 3}
  EXPECT_DOUBLE_EQ(median_pairwise_distance(points1d({0.0, 1.0, 3.0})), 2.0);
}

TEST(MedianPairwiseDistance, TwoPoints) {
  Matrix m(2, 5);
  m.row(0).setZero();
  m.row(1).setZero();
  m(1, 0) = 5.0;
  EXPECT_DOUBLE_EQ(median_pairwise_distance(SampleSet(m)), 5.0);
}

TEST(MedianPairwiseDistance, EvenCountAveragesMiddlePair) {
  // distances {1, 2, 3, 4, 6, 7}; median = (3 + 4) / 2
  const SampleSet p = points1d({0.0, 1.0, 3.0, 7.0});
  EXPECT_DOUBLE_EQ(median_pairwise_distance(p), 3.5);
}

TEST(MedianPairwiseDistance, TranslationAndScaling) {
  const SampleSet p = points1d({0.4, 1.9, 2.2, 7.0, -3.0});
  const double base = median_pairwise_distance(p);
  EXPECT_NEAR(median_pairwise_distance(SampleSet((p.data().array() + 100.0).matrix())), base, 1e-9);
  EXPECT_NEAR(median_pairwise_distance(SampleSet(p.data() * 3.0)), 3.0 * base, 1e-12);
}

TEST(MedianPairwiseDistance, Errors) {
  EXPECT_THROW(median_pairwise_distance(points1d({1.0})), std::invalid_argument);
  EXPECT_THROW(median_pairwise_distance(points1d({2.0, 2.0, 2.0})), numerical_error);
}

TEST(SelectCenters, KeepsAllWhenUnderCap) {
  const SampleSet p = points1d({5.0, 1.0, 3.0});
  const SampleSet centers = select_centers(p, 100, 42);
  ASSERT_EQ(centers.size(), 3);
  EXPECT_TRUE((centers.data().array() == p.data().array()).all());
}

TEST(SelectCenters, SubsamplesDeterministically) {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> g;
  Matrix m(500, 1);
  for (Index i = 0; i < 500; ++i) m(i, 0) = g(eng);
  const SampleSet p{m};
  const SampleSet one = select_centers(p, 100, 9);
  const SampleSet two = select_centers(p, 100, 9);
  ASSERT_EQ(one.size(), 100);
  EXPECT_TRUE((one.data().array() == two.data().array()).all());

  const SampleSet other = select_centers(p, 100, 10);
  ASSERT_EQ(other.size(), 100);
  // distinct members regardless of seed
  for (const SampleSet* s : {&one, &other}) {
    std::vector<double> vals(s->data().data(), s->data().data() + s->size());
    std::sort(vals.begin(), vals.end());
    EXPECT_TRUE(std::adjacent_find(vals.begin(), vals.end()) == vals.end());
  }
}

TEST(SelectCenters, Errors) {
  EXPECT_THROW(select_centers(SampleSet(), 10, 0), std::invalid_argument);
  EXPECT_THROW(select_centers(points1d({1.0}), 0, 0), std::invalid_argument);
}
