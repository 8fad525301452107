#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "rulsif/rng.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Convention used throughout: a Gaussian is written down by its mean and
// VARIANCE, so a component with variance 0.25 has standard deviation 0.5.

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Vector variance;  // diagonal covariance
};

class GaussianMixtureSpec {
 public:
  explicit GaussianMixtureSpec(std::vector<GaussianComponent> components)
      : components_(std::move(components)) {
    require(!components_.empty(), "GaussianMixtureSpec: no components");
    const Index d = components_.front().mean.size();
    double total = 0.0;
    for (const auto& c : components_) {
      require(c.weight > 0.0, "GaussianMixtureSpec: weights must be positive");
      require(c.mean.size() == d && c.variance.size() == d,
              "GaussianMixtureSpec: inconsistent dimensions");
      require((c.variance.array() > 0.0).all(),
              "GaussianMixtureSpec: variances must be positive");
      require(c.mean.allFinite() && c.variance.allFinite(),
              "GaussianMixtureSpec: parameters must be finite");
      total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-12, "GaussianMixtureSpec: weights must sum to 1");
  }

  /// Single 1-D Gaussian N(mean, variance).
  static GaussianMixtureSpec normal1d(double mean, double variance) {
    GaussianComponent c;
    c.weight = 1.0;
    c.mean = Vector::Constant(1, mean);
    c.variance = Vector::Constant(1, variance);
    return GaussianMixtureSpec({c});
  }

  /// Single spherical Gaussian in d dimensions with the given mean vector.
  static GaussianMixtureSpec isotropic(Vector mean, double variance) {
    GaussianComponent c;
    c.weight = 1.0;
    c.variance = Vector::Constant(mean.size(), variance);
    c.mean = std::move(mean);
    return GaussianMixtureSpec({c});
  }

  const std::vector<GaussianComponent>& components() const { return components_; }
  Index dim() const { return components_.front().mean.size(); }

 private:
  std::vector<GaussianComponent> components_;
};

namespace detail {

inline double log_gaussian_density(const GaussianComponent& c,
                                   const Eigen::Ref<const Vector>& x) {
  constexpr double log_two_pi = 1.8378770664093453;  // log(2*pi)
  double acc = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double d = x[j] - c.mean[j];
    acc += -0.5 * (log_two_pi + std::log(c.variance[j]) + d * d / c.variance[j]);
  }
  return acc;
}

}  // namespace detail

inline double log_density(const GaussianMixtureSpec& spec,
                          const Eigen::Ref<const Vector>& x) {
  require(x.size() == spec.dim(), "log_density: dimension mismatch");
  // log-sum-exp over components
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(spec.components().size());
  for (const auto& c : spec.components()) {
    const double t = std::log(c.weight) + detail::log_gaussian_density(c, x);
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

inline double density(const GaussianMixtureSpec& spec, const Eigen::Ref<const Vector>& x) {
  return std::exp(log_density(spec, x));
}

/// True alpha-relative ratio p / (alpha p + (1-alpha) p'), evaluated through
/// log densities so it stays accurate far in the tails. Bounded by 1/alpha
/// for alpha > 0; degenerates to the constant 1 at alpha = 1.
inline double true_relative_ratio(const GaussianMixtureSpec& p,
                                  const GaussianMixtureSpec& p_prime, double alpha,
                                  const Eigen::Ref<const Vector>& x) {
  require(alpha >= 0.0 && alpha <= 1.0, "true_relative_ratio: alpha must be in [0,1]");
  const double lp = log_density(p, x);
  const double lq = log_density(p_prime, x);
  return 1.0 / (alpha + (1.0 - alpha) * std::exp(lq - lp));
}

inline std::pair<SampleSet, std::vector<int>> sample_with_components(
    const GaussianMixtureSpec& spec, Index count, std::uint64_t seed) {
  require(count >= 1, "sample: count must be >= 1");
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> stdnormal(0.0, 1.0);
  Matrix out(count, spec.dim());
  std::vector<int> which(static_cast<std::size_t>(count), 0);
  for (Index i = 0; i < count; ++i) {
    const double u = unif(engine);
    double cum = 0.0;
    std::size_t k = 0;
    for (; k + 1 < spec.components().size(); ++k) {
      cum += spec.components()[k].weight;
      if (u < cum) break;
    }
    const auto& c = spec.components()[k];
    which[static_cast<std::size_t>(i)] = static_cast<int>(k);
    for (Index j = 0; j < spec.dim(); ++j) {
      out(i, j) = c.mean[j] + std::sqrt(c.variance[j]) * stdnormal(engine);
    }
  }
  return {SampleSet(std::move(out)), std::move(which)};
}

inline SampleSet sample(const GaussianMixtureSpec& spec, Index count, std::uint64_t seed) {
  return sample_with_components(spec, count, seed).first;
}

/// The five benchmark density pairs; the numerator is always N(0,1).
///   a: P' = N(0,1)   b: P' = N(0,0.6)   c: P' = N(0,2)
///   d: P' = N(0.5,1) e: P' = 0.95 N(0,1) + 0.05 N(3,1)
struct BenchmarkDataset {
  SampleSet numerator;
  SampleSet denominator;
  GaussianMixtureSpec p;
  GaussianMixtureSpec p_prime;
};

inline GaussianMixtureSpec benchmark_denominator_spec(char tag) {
  switch (tag) {
    case 'a':
      return GaussianMixtureSpec::normal1d(0.0, 1.0);
    case 'b':
      return GaussianMixtureSpec::normal1d(0.0, 0.6);
    case 'c':
      return GaussianMixtureSpec::normal1d(0.0, 2.0);
    case 'd':
      return GaussianMixtureSpec::normal1d(0.5, 1.0);
    case 'e': {
      GaussianComponent main;
      main.weight = 0.95;
      main.mean = Vector::Constant(1, 0.0);
      main.variance = Vector::Constant(1, 1.0);
      GaussianComponent extra;
      extra.weight = 0.05;
      extra.mean = Vector::Constant(1, 3.0);
      extra.variance = Vector::Constant(1, 1.0);
      return GaussianMixtureSpec({main, extra});
    }
    default:
      throw std::invalid_argument("benchmark_dataset: tag must be one of a..e");
  }
}

inline BenchmarkDataset benchmark_dataset(char tag, Index n, Index n_prime, std::uint64_t seed) {
  GaussianMixtureSpec p = GaussianMixtureSpec::normal1d(0.0, 1.0);
  GaussianMixtureSpec pp = benchmark_denominator_spec(tag);
  SampleSet num = sample(p, n, derive_seed(seed, 1));
  SampleSet den = sample(pp, n_prime, derive_seed(seed, 2));
  return {std::move(num), std::move(den), std::move(p), std::move(pp)};
}

/// Inlier model set from N(0, I_d); evaluation set from
/// 0.95 N(0, I_d) + 0.05 N(3 d^{-1/2} 1_d, I_d), labels true on the
/// outlier component. The outlier mean has norm 3 in every dimension.
struct OutlierDataset {
  SampleSet model_set;
  SampleSet evaluation_set;
  std::vector<bool> labels;
  GaussianMixtureSpec inlier_spec;
  GaussianMixtureSpec evaluation_spec;
};

inline OutlierDataset outlier_dataset(int d, Index n, Index n_prime, std::uint64_t seed) {
  require(d >= 1, "outlier_dataset: d must be >= 1");
  require(n >= 1 && n_prime >= 1, "outlier_dataset: counts must be >= 1");
  GaussianMixtureSpec inlier = GaussianMixtureSpec::isotropic(Vector::Zero(d), 1.0);
  GaussianComponent base;
  base.weight = 0.95;
  base.mean = Vector::Zero(d);
  base.variance = Vector::Ones(d);
  GaussianComponent out;
  out.weight = 0.05;
  out.mean = Vector::Constant(d, 3.0 / std::sqrt(static_cast<double>(d)));
  out.variance = Vector::Ones(d);
  GaussianMixtureSpec eval_spec({base, out});

  SampleSet model = sample(inlier, n, derive_seed(seed, 1));
  auto [eval, which] = sample_with_components(eval_spec, n_prime, derive_seed(seed, 2));
  std::vector<bool> labels(which.size());
  for (std::size_t i = 0; i < which.size(); ++i) labels[i] = which[i] == 1;
  return {std::move(model), std::move(eval), std::move(labels), std::move(inlier),
          std::move(eval_spec)};
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double t = std::numbers::pi * x;
  return std::sin(t) / t;
}

enum class ShiftScenario { no_shift, shift };

/// Regression pairs y = sinc(x) + eps, eps ~ N(0, 0.01). Training inputs
/// follow N(1, 0.25); test inputs follow N(1, 0.25) (no_shift) or
/// N(2, 0.1) (shift).
struct SincData {
  LabeledSet train;
  LabeledSet test;
};

inline SincData sinc_dataset(ShiftScenario scenario, Index n_tr, Index n_te,
                             std::uint64_t seed) {
  require(n_tr >= 1 && n_te >= 1, "sinc_dataset: counts must be >= 1");
  const GaussianMixtureSpec train_spec = GaussianMixtureSpec::normal1d(1.0, 0.25);
  const GaussianMixtureSpec test_spec = scenario == ShiftScenario::no_shift
                                            ? GaussianMixtureSpec::normal1d(1.0, 0.25)
                                            : GaussianMixtureSpec::normal1d(2.0, 0.1);
  const GaussianMixtureSpec noise = GaussianMixtureSpec::normal1d(0.0, 0.01);

  auto make = [&](const GaussianMixtureSpec& spec, Index count, std::uint64_t input_seed,
                  std::uint64_t noise_seed) {
    SampleSet inputs = sample(spec, count, input_seed);
    SampleSet eps = sample(noise, count, noise_seed);
    Vector y(count);
    for (Index i = 0; i < count; ++i) y[i] = sinc(inputs.data()(i, 0)) + eps.data()(i, 0);
    return LabeledSet(std::move(inputs), std::move(y));
  };

  return {make(train_spec, n_tr, derive_seed(seed, 1), derive_seed(seed, 2)),
          make(test_spec, n_te, derive_seed(seed, 3), derive_seed(seed, 4))};
}

}  // namespace rulsif
