#include "rulsif/estimator.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rulsif/synthdata.hpp"
#include "testkit.hpp"

using namespace rulsif;

namespace {

SampleSet points1d(std::initializer_list<double> values) {
  Matrix m(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return SampleSet(m);
}

SampleSet random_set(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = g(eng);
  }
  return SampleSet(m);
}

RulsifConfig singleton_config(double alpha, double sigma, double lambda,
                              std::uint64_t seed = 0) {
  RulsifConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma_grid = {sigma};
  cfg.lambda_grid = {lambda};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(BuildHhat, SinglePointAtCenter) {
  const SampleSet p = points1d({0.0});
  const Matrix h = build_hhat(p, p, KernelSpec(1.0, p), 0.5);
  ASSERT_EQ(h.rows(), 1);
  EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
}

TEST(BuildHhat, AlphaZeroUsesDenominatorOnly) {
  const SampleSet num = random_set(30, 2, 1);
  const SampleSet den = random_set(25, 2, 2);
  const KernelSpec spec(0.9, num);
  const Matrix h = build_hhat(num, den, spec, 0.0);
  // reference: denominator Gram only
  const Matrix b = kernel_matrix(den, spec);
  const Matrix expected = b.transpose() * b / static_cast<double>(den.size());
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildHhat, SymmetricPositiveSemiDefinite) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const SampleSet num = random_set(40, 3, seed);
    const SampleSet den = random_set(35, 3, seed + 100);
    const Matrix h = build_hhat(num, den, KernelSpec(1.2, select_centers(num, 20, seed)), 0.5);
    EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(BuildHhat, PermutationOfSamplesLeavesResultUnchanged) {
  const SampleSet num = random_set(25, 2, 9);
  const SampleSet den = random_set(30, 2, 10);
  const KernelSpec spec(1.0, num);  // centers fixed before permutation
  std::vector<Index> perm_num(25), perm_den(30);
  std::iota(perm_num.begin(), perm_num.end(), 0);
  std::iota(perm_den.begin(), perm_den.end(), 0);
  std::mt19937_64 eng(42);
  std::shuffle(perm_num.begin(), perm_num.end(), eng);
  std::shuffle(perm_den.begin(), perm_den.end(), eng);

  const Matrix h1 = build_hhat(num, den, spec, 0.3);
  const Matrix h2 = build_hhat(num.rows(perm_num), den.rows(perm_den), spec, 0.3);
  EXPECT_LT((h1 - h2).cwiseAbs().maxCoeff(), 1e-12);

  const Vector v1 = build_hvec(num, spec);
  const Vector v2 = build_hvec(num.rows(perm_num), spec);
  EXPECT_LT((v1 - v2).cwiseAbs().maxCoeff(), 1e-12);

  const Vector t1 = solve_theta(h1, v1, 0.1);
  const Vector t2 = solve_theta(h2, v2, 0.1);
  EXPECT_LT((t1 - t2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BuildHvec, KnownValues) {
  const SampleSet single = points1d({1.5});
  EXPECT_DOUBLE_EQ(build_hvec(single, KernelSpec(2.0, single))[0], 1.0);

  const SampleSet two = points1d({0.0, 2.0});
  const Vector h = build_hvec(two, KernelSpec(1.0, points1d({0.0})));
  EXPECT_NEAR(h[0], 0.5 * (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(BuildHvec, ComponentsInUnitInterval) {
  const SampleSet num = random_set(50, 2, 21);
  const Vector h = build_hvec(num, KernelSpec(0.7, select_centers(num, 10, 1)));
  EXPECT_TRUE((h.array() > 0.0).all());
  EXPECT_TRUE((h.array() <= 1.0).all());
}

TEST(SolveTheta, OneByOne) {
  Matrix h(1, 1);
  h << 1.0;
  Vector v(1);
  v << 1.0;
  EXPECT_DOUBLE_EQ(solve_theta(h, v, 1.0)[0], 0.5);
}

TEST(SolveTheta, RidgeShrinksNorm) {
  const SampleSet num = random_set(20, 1, 31);
  const SampleSet den = random_set(20, 1, 32);
  const KernelSpec spec(1.0, num);
  const Matrix h = build_hhat(num, den, spec, 0.5);
  const Vector v = build_hvec(num, spec);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-3, 1e-1, 1.0, 10.0, 1000.0}) {
    const double norm = solve_theta(h, v, lambda).norm();
    EXPECT_LT(norm, prev);
    prev = norm;
  }
}

TEST(SolveTheta, MatchesDescentOracle) {
  std::mt19937_64 eng(77);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 10; ++rep) {
    const Index b = 5;
    Matrix a(8, b);
    for (Index i = 0; i < a.size(); ++i) a(i / b, i % b) = g(eng);
    const Matrix h = a.transpose() * a / 8.0;
    Vector v(b);
    for (Index i = 0; i < b; ++i) v[i] = std::abs(g(eng));
    const double lambda = rep % 2 == 0 ? 1e-3 : 0.1;
    const Vector direct = solve_theta(h, v, lambda);
    const Vector iterative = testkit::descent_minimize_objective(h, v, lambda);
    EXPECT_LT((direct - iterative).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(SolveTheta, SingularSystemThrows) {
  Matrix h = Matrix::Zero(2, 2);
  Vector v(2);
  v << 1.0, 0.0;
  EXPECT_THROW(solve_theta(h, v, 0.0), numerical_error);
  EXPECT_NO_THROW(solve_theta(h, v, 1e-3));
}

TEST(SolveTheta, ResidualWithinContract) {
  const SampleSet num = random_set(120, 3, 41);
  const SampleSet den = random_set(110, 3, 42);
  const KernelSpec spec(1.3, select_centers(num, 100, 7));
  const Matrix h = build_hhat(num, den, spec, 0.95);
  const Vector v = build_hvec(num, spec);
  for (double lambda : default_lambda_grid()) {
    const Vector theta = solve_theta(h, v, lambda);
    Matrix m = h;
    m.diagonal().array() += lambda;
    EXPECT_LE((m * theta - v).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Predict, HandValueAndDecay) {
  RulsifModel model;
  model.kernel = KernelSpec(1.0, points1d({0.0}));
  model.alpha = 0.5;
  model.lambda = 0.1;
  model.theta = Vector::Constant(1, 0.5);
  const Vector at_center = predict(model, points1d({0.0}));
  EXPECT_DOUBLE_EQ(at_center[0], 0.5);
  const Vector far = predict(model, points1d({40.0}));
  EXPECT_NEAR(far[0], 0.0, 1e-12);
}

TEST(Predict, LinearInTheta) {
  const SampleSet centers = random_set(12, 2, 51);
  RulsifModel model;
  model.kernel = KernelSpec(0.8, centers);
  model.theta = random_set(12, 1, 52).data().col(0);
  RulsifModel scaled = model;
  scaled.theta *= -2.5;
  const SampleSet probe = random_set(30, 2, 53);
  const Vector base = predict(model, probe);
  const Vector twice = predict(scaled, probe);
  EXPECT_LT((twice + 2.5 * base).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(JCriterion, ConstantFunctions) {
  const Vector zeros = Vector::Zero(10);
  const Vector ones = Vector::Ones(10);
  for (double alpha : {0.0, 0.3, 0.95}) {
    EXPECT_DOUBLE_EQ(j_criterion(zeros, zeros, alpha), 0.0);
    EXPECT_DOUBLE_EQ(j_criterion(ones, ones, alpha), -0.5);
  }
}

// The population criterion is minimized by the true relative ratio, so a
// perturbed ratio must score worse on a large sample.
TEST(JCriterion, TrueRatioBeatsPerturbedRatio) {
  const double alpha = 0.5;
  const auto data = benchmark_dataset('d', 2000, 2000, 404);
  Vector g_num(2000), g_den(2000), p_num(2000), p_den(2000);
  std::mt19937_64 eng(405);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (Index i = 0; i < 2000; ++i) {
    g_num[i] = true_relative_ratio(data.p, data.p_prime, alpha, data.numerator.row(i).transpose());
    g_den[i] = true_relative_ratio(data.p, data.p_prime, alpha, data.denominator.row(i).transpose());
    p_num[i] = g_num[i] + noise(eng);
    p_den[i] = g_den[i] + noise(eng);
  }
  EXPECT_LT(j_criterion(g_num, g_den, alpha), j_criterion(p_num, p_den, alpha));
}

TEST(JCriterion, ModelOverloadMatchesValueForm) {
  const auto data = benchmark_dataset('d', 60, 60, 501);
  const RulsifModel model = fit(data.numerator, data.denominator,
                                singleton_config(0.5, 1.0, 0.1, 502));
  const auto holdout = benchmark_dataset('d', 30, 30, 503);
  const double via_model = j_criterion(model, holdout.numerator, holdout.denominator);
  const double via_values = j_criterion(predict(model, holdout.numerator),
                                        predict(model, holdout.denominator), 0.5);
  EXPECT_DOUBLE_EQ(via_model, via_values);
}

TEST(CrossValidate, SingletonGrid) {
  const SampleSet num = random_set(40, 1, 61);
  const SampleSet den = random_set(40, 1, 62);
  const CvReport report = cross_validate(num, den, singleton_config(0.5, 1.0, 0.1));
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(report.selected_sigma, 1.0);
  EXPECT_DOUBLE_EQ(report.selected_lambda, 0.1);
}

TEST(CrossValidate, DuplicateGridEntriesScoreIdentically) {
  const SampleSet num = random_set(40, 1, 63);
  const SampleSet den = random_set(40, 1, 64);
  RulsifConfig cfg;
  cfg.alpha = 0.5;
  cfg.sigma_grid = {0.8, 0.8};
  cfg.lambda_grid = {0.1, 0.1};
  const CvReport report = cross_validate(num, den, cfg);
  ASSERT_EQ(report.entries.size(), 4u);
  for (const auto& e : report.entries) {
    EXPECT_DOUBLE_EQ(e.cv_score, report.entries.front().cv_score);
  }
}

TEST(CrossValidate, SelectedAttainsMinimum) {
  const SampleSet num = random_set(60, 2, 65);
  const SampleSet den = random_set(60, 2, 66);
  RulsifConfig cfg = make_default_config(num, den, 0.5, 5);
  const CvReport report = cross_validate(num, den, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : report.entries) best = std::min(best, e.cv_score);
  bool found = false;
  for (const auto& e : report.entries) {
    if (e.sigma == report.selected_sigma && e.lambda == report.selected_lambda) {
      EXPECT_DOUBLE_EQ(e.cv_score, best);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(CrossValidate, TieBreakPrefersLargerLambdaThenSigma) {
  using detail::select_best;
  const std::vector<CvEntry> by_lambda = {{1.0, 1.0, 5.0}, {1.0, 2.0, 5.0}};
  EXPECT_DOUBLE_EQ(select_best(by_lambda).lambda, 2.0);
  const std::vector<CvEntry> by_sigma = {{1.0, 1.0, 5.0}, {2.0, 1.0, 5.0}};
  EXPECT_DOUBLE_EQ(select_best(by_sigma).sigma, 2.0);
  const std::vector<CvEntry> lambda_wins = {{2.0, 1.0, 5.0}, {1.0, 3.0, 5.0}, {9.0, 0.5, 6.0}};
  EXPECT_DOUBLE_EQ(select_best(lambda_wins).lambda, 3.0);
  const std::vector<CvEntry> strict_min = {{1.0, 1.0, 5.0}, {0.5, 0.5, 4.0}};
  EXPECT_DOUBLE_EQ(select_best(strict_min).cv_score, 4.0);
}

TEST(CrossValidate, FoldsExceedingSamplesThrow) {
  const SampleSet num = random_set(3, 1, 67);
  const SampleSet den = random_set(40, 1, 68);
  RulsifConfig cfg = singleton_config(0.5, 1.0, 0.1);
  cfg.cv_folds = 5;
  EXPECT_THROW(cross_validate(num, den, cfg), std::invalid_argument);
}

TEST(Fit, IdenticalSetsGiveRatioNearOne) {
  const SampleSet set = sample(GaussianMixtureSpec::normal1d(0.0, 1.0), 150, 71);
  for (double alpha : {0.0, 0.5}) {
    RulsifConfig cfg = make_default_config(set, set, alpha, 72);
    const RulsifModel model = fit(set, set, cfg);
    const double mean_ratio = predict(model, set).mean();
    EXPECT_NEAR(mean_ratio, 1.0, 0.2);
  }
}

TEST(Fit, SingletonGridsSelectThatPair) {
  const SampleSet num = random_set(40, 1, 73);
  const SampleSet den = random_set(40, 1, 74);
  const RulsifModel model = fit(num, den, singleton_config(0.5, 1.1, 0.05));
  EXPECT_DOUBLE_EQ(model.kernel.width, 1.1);
  EXPECT_DOUBLE_EQ(model.lambda, 0.05);
  ASSERT_TRUE(model.provenance.has_value());
  EXPECT_DOUBLE_EQ(model.provenance->selected_sigma, 1.1);
}

TEST(Fit, TinySetsWithSingletonGridSkipFolding) {
  const SampleSet num = points1d({0.0, 0.4});
  const SampleSet den = points1d({0.1, 0.5});
  const RulsifModel model = fit(num, den, singleton_config(0.5, 1.0, 0.1));
  EXPECT_FALSE(model.provenance.has_value());
  EXPECT_DOUBLE_EQ(model.kernel.width, 1.0);
}

TEST(Fit, AlphaZeroMatchesPlainUlsifReference) {
  const SampleSet num = random_set(50, 1, 75);
  const SampleSet den = random_set(60, 1, 76);
  const RulsifModel model = fit(num, den, singleton_config(0.0, 0.9, 0.01));

  // reference: lambda-regularized least squares on the denominator Gram only
  const KernelSpec spec(0.9, num);
  const Matrix b = kernel_matrix(den, spec);
  Matrix h = b.transpose() * b / static_cast<double>(den.size());
  h.diagonal().array() += 0.01;
  const Vector v = kernel_matrix(num, spec).colwise().sum().transpose() /
                   static_cast<double>(num.size());
  const Vector reference = h.llt().solve(v);
  EXPECT_LT((model.theta - reference).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fit, DeterministicGivenSeed) {
  const SampleSet num = random_set(80, 2, 81);
  const SampleSet den = random_set(70, 2, 82);
  RulsifConfig cfg = make_default_config(num, den, 0.5, 83);
  const RulsifModel one = fit(num, den, cfg);
  const RulsifModel two = fit(num, den, cfg);
  EXPECT_TRUE((one.theta.array() == two.theta.array()).all());
  EXPECT_DOUBLE_EQ(one.kernel.width, two.kernel.width);
}

TEST(Fit, ResidualContractHoldsOnFittedModel) {
  const auto data = benchmark_dataset('e', 120, 140, 85);
  RulsifConfig cfg = make_default_config(data.numerator, data.denominator, 0.5, 86);
  const RulsifModel model = fit(data.numerator, data.denominator, cfg);
  const Matrix h = build_hhat(data.numerator, data.denominator, model.kernel, model.alpha);
  Matrix m = h;
  m.diagonal().array() += model.lambda;
  const Vector v = build_hvec(data.numerator, model.kernel);
  EXPECT_LE((m * model.theta - v).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, RejectsBadInputs) {
  const SampleSet num = random_set(10, 1, 91);
  const SampleSet den = random_set(10, 2, 92);
  RulsifConfig cfg = singleton_config(0.5, 1.0, 0.1);
  EXPECT_THROW(fit(num, den, cfg), std::invalid_argument);           // dim mismatch
  EXPECT_THROW(fit(SampleSet(), den, cfg), std::invalid_argument);   // empty
  cfg.alpha = 1.0;
  EXPECT_THROW(fit(num, num, cfg), std::invalid_argument);           // alpha out of range
  cfg.alpha = 0.5;
  cfg.sigma_grid.clear();
  EXPECT_THROW(fit(num, num, cfg), std::invalid_argument);           // empty grid
}
