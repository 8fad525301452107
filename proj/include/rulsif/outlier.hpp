#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "rulsif/estimator.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Inlier-based outlier scoring: the ratio of model-set density to
// evaluation-set density is fitted (numerator = model set, denominator =
// evaluation set) and read off at the evaluation samples. Lower scores are
// more outlying; negative predictions are kept as-is so they sort below
// every small positive score.

struct ScoredSet {
  Vector scores;
  std::optional<std::vector<bool>> labels;  // true = outlier
};

struct OutlierAnalysis {
  ScoredSet scored;
  RulsifModel model;
};

inline OutlierAnalysis score_outliers(const SampleSet& model_set,
                                      const SampleSet& evaluation_set,
                                      const RulsifConfig& config) {
  detail::validate_pair(model_set, evaluation_set);
  RulsifConfig cfg = config;
  if (cfg.sigma_grid.empty()) cfg.sigma_grid = default_sigma_grid(model_set, evaluation_set);
  if (cfg.lambda_grid.empty()) cfg.lambda_grid = default_lambda_grid();
  RulsifModel model = fit(model_set, evaluation_set, cfg);
  ScoredSet scored{predict(model, evaluation_set), std::nullopt};
  return {std::move(scored), std::move(model)};
}

inline ScoredSet outlier_scores(const SampleSet& model_set,
                                const SampleSet& evaluation_set,
                                const RulsifConfig& config) {
  return score_outliers(model_set, evaluation_set, config).scored;
}

/// Rank-based AUC of "inlier score > outlier score" over all
/// inlier-outlier pairs, ties counting 1/2 (midrank Mann-Whitney).
inline double auc(const ScoredSet& scored) {
  require(scored.labels.has_value(), "auc: labels required");
  const auto& labels = *scored.labels;
  const std::size_t m = labels.size();
  require(static_cast<std::size_t>(scored.scores.size()) == m,
          "auc: scores/labels length mismatch");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored.scores[static_cast<Index>(a)] < scored.scores[static_cast<Index>(b)];
  });

  std::vector<double> rank(m, 0.0);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scored.scores[static_cast<Index>(order[j + 1])] ==
                            scored.scores[static_cast<Index>(order[i])]) {
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
    i = j + 1;
  }

  double inlier_rank_sum = 0.0;
  std::size_t n_inlier = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!labels[k]) {
      inlier_rank_sum += rank[k];
      ++n_inlier;
    }
  }
  const std::size_t n_outlier = m - n_inlier;
  require(n_inlier >= 1 && n_outlier >= 1, "auc: need both classes present");
  const double n_in = static_cast<double>(n_inlier);
  const double u = inlier_rank_sum - n_in * (n_in + 1.0) / 2.0;
  return u / (n_in * static_cast<double>(n_outlier));
}

}  // namespace rulsif
