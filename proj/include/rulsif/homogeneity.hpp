#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "rulsif/divergence.hpp"
#include "rulsif/estimator.hpp"
#include "rulsif/rng.hpp"
#include "rulsif/threading.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Permutation two-sample homogeneity test: the observed divergence estimate
// is ranked against estimates recomputed on pooled-and-reshuffled splits.
// Each replicate reruns the full pipeline (center selection, CV, refit) so
// the null distribution reflects model selection; a fast mode pins the
// permutation refits to the originally selected (sigma, lambda).

enum class Direction { plain, reciprocal, adaptive };
enum class PeEstimator { pe_hat, pe_tilde };

struct TestConfig {
  double alpha = 0.5;
  int permutations = 100;
  double significance = 0.05;
  Direction direction = Direction::plain;
  PeEstimator estimator = PeEstimator::pe_hat;
  RulsifConfig rulsif;       // alpha here is overridden by TestConfig::alpha;
                             // empty grids are derived from the pooled samples
  bool full_cv_permutations = true;
  int threads = 1;
};

struct PermutationSummary {
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct PermutationResult {
  double p_value = 1.0;
  double statistic = 0.0;
  PermutationSummary permuted;
};

struct TestOutcome {
  double p_value = 1.0;
  std::optional<double> p_plain;
  std::optional<double> p_reciprocal;
  double statistic = 0.0;
  PermutationSummary permuted_statistics;
  bool reject = false;
  Direction direction_used = Direction::plain;
};

namespace detail {

inline double pvalue_from_counts(int count_ge, int permutations) {
  return static_cast<double>(1 + count_ge) / static_cast<double>(permutations + 1);
}

inline double divergence_statistic(PeEstimator which, const RulsifModel& model,
                                   const SampleSet& x, const SampleSet& x_prime) {
  return which == PeEstimator::pe_hat ? pe_hat(model, x, x_prime) : pe_tilde(model, x);
}

inline void validate_test_config(const TestConfig& cfg) {
  require(cfg.alpha >= 0.0 && cfg.alpha < 1.0, "lstt: alpha must be in [0, 1)");
  require(cfg.permutations >= 1, "lstt: permutations must be >= 1");
  require(cfg.significance > 0.0 && cfg.significance < 1.0,
          "lstt: significance must be in (0, 1)");
}

}  // namespace detail

/// One-direction permutation test with x as the ratio numerator.
/// p = (1 + #{permuted statistic >= observed}) / (permutations + 1).
inline PermutationResult permutation_pvalue(const SampleSet& x, const SampleSet& x_prime,
                                            const TestConfig& cfg, std::uint64_t seed) {
  detail::validate_test_config(cfg);
  detail::validate_pair(x, x_prime);

  RulsifConfig rc = cfg.rulsif;
  rc.alpha = cfg.alpha;
  // The pooled union is permutation-invariant, so the median-heuristic grid
  // is computed once and shared by every replicate.
  if (rc.sigma_grid.empty()) rc.sigma_grid = default_sigma_grid(x, x_prime);
  if (rc.lambda_grid.empty()) rc.lambda_grid = default_lambda_grid();

  rc.seed = derive_seed(seed, 0);
  const RulsifModel model = fit(x, x_prime, rc);
  const double observed = detail::divergence_statistic(cfg.estimator, model, x, x_prime);

  RulsifConfig perm_config = rc;
  if (!cfg.full_cv_permutations) {
    perm_config.sigma_grid = {model.kernel.width};
    perm_config.lambda_grid = {model.lambda};
  }

  const SampleSet pool = concat(x, x_prime);
  const Index n = x.size();
  const int b_total = cfg.permutations;
  std::vector<double> permuted(static_cast<std::size_t>(b_total), 0.0);

  parallel_for(static_cast<std::size_t>(b_total), cfg.threads, [&](std::size_t b) {
    auto engine = make_engine(derive_seed(seed, 1 + b));
    const std::vector<Index> perm = shuffled_indices(pool.size(), engine);
    const SampleSet sx = pool.rows(std::vector<Index>(perm.begin(), perm.begin() + n));
    const SampleSet sxp = pool.rows(std::vector<Index>(perm.begin() + n, perm.end()));
    RulsifConfig rcb = perm_config;
    rcb.seed = engine();
    const RulsifModel mb = fit(sx, sxp, rcb);
    permuted[b] = detail::divergence_statistic(cfg.estimator, mb, sx, sxp);
  });

  int count_ge = 0;
  double mean = 0.0;
  for (double v : permuted) {
    if (v >= observed) ++count_ge;
    mean += v;
  }
  mean /= static_cast<double>(b_total);
  double sd = 0.0;
  if (b_total > 1) {
    for (double v : permuted) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / static_cast<double>(b_total - 1));
  }

  PermutationResult result;
  result.p_value = detail::pvalue_from_counts(count_ge, b_total);
  result.statistic = observed;
  result.permuted = {b_total, mean, sd};
  return result;
}

/// Plain uses x/x'; reciprocal swaps the roles; adaptive runs both from the
/// same seed and keeps the direction with the smaller p-value (plain on tie).
inline TestOutcome lstt(const SampleSet& x, const SampleSet& x_prime,
                        const TestConfig& cfg, std::uint64_t seed) {
  TestOutcome outcome;
  switch (cfg.direction) {
    case Direction::plain: {
      const PermutationResult r = permutation_pvalue(x, x_prime, cfg, seed);
      outcome.p_value = r.p_value;
      outcome.statistic = r.statistic;
      outcome.permuted_statistics = r.permuted;
      outcome.direction_used = Direction::plain;
      break;
    }
    case Direction::reciprocal: {
      const PermutationResult r = permutation_pvalue(x_prime, x, cfg, seed);
      outcome.p_value = r.p_value;
      outcome.statistic = r.statistic;
      outcome.permuted_statistics = r.permuted;
      outcome.direction_used = Direction::reciprocal;
      break;
    }
    case Direction::adaptive: {
      const PermutationResult plain = permutation_pvalue(x, x_prime, cfg, seed);
      const PermutationResult reciprocal = permutation_pvalue(x_prime, x, cfg, seed);
      outcome.p_plain = plain.p_value;
      outcome.p_reciprocal = reciprocal.p_value;
      const bool use_plain = plain.p_value <= reciprocal.p_value;
      const PermutationResult& winner = use_plain ? plain : reciprocal;
      outcome.p_value = winner.p_value;
      outcome.statistic = winner.statistic;
      outcome.permuted_statistics = winner.permuted;
      outcome.direction_used = use_plain ? Direction::plain : Direction::reciprocal;
      break;
    }
  }
  outcome.reject = outcome.p_value < cfg.significance;
  return outcome;
}

}  // namespace rulsif
