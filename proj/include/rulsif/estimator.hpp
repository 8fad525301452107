#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rulsif/kernel.hpp"
#include "rulsif/rng.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Least-squares fit of the alpha-relative density ratio
//   r_alpha(x) = p(x) / (alpha p(x) + (1 - alpha) p'(x))
// with the Gaussian-kernel expansion g(x) = sum_l theta_l K(x, c_l).
// Minimizing the empirical squared error
//   (1/2) theta' H theta - h' theta + (lambda/2) theta' theta
// has the closed-form solution theta = (H + lambda I)^{-1} h, where H mixes
// Gram matrices of both sample sets and h averages kernel values over the
// numerator set. (sigma, lambda) are chosen by k-fold cross-validation on
// the same squared-error criterion.

struct RulsifConfig {
  double alpha = 0.5;                // in [0, 1)
  std::vector<double> sigma_grid;    // must be non-empty when fitting
  std::vector<double> lambda_grid;   // must be non-empty when fitting
  int cv_folds = 5;
  int max_centers = 100;
  std::uint64_t seed = 0;
};

struct CvEntry {
  double sigma = 0.0;
  double lambda = 0.0;
  double cv_score = 0.0;
};

struct CvReport {
  std::vector<CvEntry> entries;  // sigma-major, lambda-minor grid order
  double selected_sigma = 0.0;
  double selected_lambda = 0.0;
};

struct RulsifModel {
  KernelSpec kernel;
  double alpha = 0.0;
  double lambda = 0.0;
  Vector theta;
  std::optional<CvReport> provenance;  // nullopt: (sigma, lambda) fixed by caller
  std::uint64_t seed = 0;
};

inline std::vector<double> default_lambda_grid() {
  return {1e-3, 1e-2, 1e-1, 1.0, 10.0};
}

/// Median-heuristic sigma grid: median pairwise distance of the pooled
/// samples times {0.25, 0.5, 0.75, 1, 1.5, 2}.
inline std::vector<double> default_sigma_grid(const SampleSet& numerator,
                                              const SampleSet& denominator) {
  const double med = median_pairwise_distance(concat(numerator, denominator));
  std::vector<double> grid;
  for (double f : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) grid.push_back(f * med);
  return grid;
}

inline RulsifConfig make_default_config(const SampleSet& numerator,
                                        const SampleSet& denominator, double alpha,
                                        std::uint64_t seed) {
  RulsifConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma_grid = default_sigma_grid(numerator, denominator);
  cfg.lambda_grid = default_lambda_grid();
  cfg.seed = seed;
  return cfg;
}

namespace detail {

inline void validate_pair(const SampleSet& numerator, const SampleSet& denominator) {
  require(!numerator.empty() && !denominator.empty(), "rulsif: sample sets must be non-empty");
  require(numerator.dim() == denominator.dim(), "rulsif: dimension mismatch");
}

inline void validate_config(const RulsifConfig& cfg) {
  require(cfg.alpha >= 0.0 && cfg.alpha < 1.0, "rulsif: alpha must be in [0, 1)");
  require(!cfg.sigma_grid.empty(), "rulsif: sigma grid must be non-empty");
  require(!cfg.lambda_grid.empty(), "rulsif: lambda grid must be non-empty");
  for (double s : cfg.sigma_grid) require(s > 0.0 && std::isfinite(s), "rulsif: sigma must be positive");
  for (double l : cfg.lambda_grid) require(l >= 0.0 && std::isfinite(l), "rulsif: lambda must be non-negative");
  require(cfg.cv_folds >= 2, "rulsif: cv_folds must be >= 2");
  require(cfg.max_centers >= 1, "rulsif: max_centers must be >= 1");
}

inline Matrix symmetric_gram(const Matrix& rows) {
  Matrix g = Matrix::Zero(rows.cols(), rows.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

// Lower score wins; ties prefer the larger lambda, then the larger sigma.
inline const CvEntry& select_best(const std::vector<CvEntry>& entries) {
  const CvEntry* best = &entries.front();
  for (const auto& e : entries) {
    if (e.cv_score < best->cv_score ||
        (e.cv_score == best->cv_score &&
         (e.lambda > best->lambda ||
          (e.lambda == best->lambda && e.sigma > best->sigma)))) {
      best = &e;
    }
  }
  return *best;
}

}  // namespace detail

/// H(l,l') = (alpha/n) sum_i K(x_i,c_l) K(x_i,c_l')
///         + ((1-alpha)/n') sum_j K(x'_j,c_l) K(x'_j,c_l');
/// symmetric positive semi-definite. alpha = 0 uses the denominator set only.
inline Matrix build_hhat(const SampleSet& numerator, const SampleSet& denominator,
                         const KernelSpec& spec, double alpha) {
  detail::validate_pair(numerator, denominator);
  require(numerator.dim() == spec.centers.dim(), "build_hhat: dimension mismatch");
  require(alpha >= 0.0 && alpha <= 1.0, "build_hhat: alpha must be in [0, 1]");
  const Index b = spec.centers.size();
  Matrix h = Matrix::Zero(b, b);
  if (alpha > 0.0) {
    h += (alpha / static_cast<double>(numerator.size())) *
         detail::symmetric_gram(kernel_matrix(numerator, spec));
  }
  if (alpha < 1.0) {
    h += ((1.0 - alpha) / static_cast<double>(denominator.size())) *
         detail::symmetric_gram(kernel_matrix(denominator, spec));
  }
  return h;
}

/// h(l) = (1/n) sum_i K(x_i, c_l); every component lies in (0, 1].
inline Vector build_hvec(const SampleSet& numerator, const KernelSpec& spec) {
  require(!numerator.empty(), "build_hvec: empty numerator");
  require(numerator.dim() == spec.centers.dim(), "build_hvec: dimension mismatch");
  const Matrix a = kernel_matrix(numerator, spec);
  return a.colwise().sum().transpose() / static_cast<double>(numerator.size());
}

inline constexpr double kSolveTolerance = 1e-8;

/// theta = (H + lambda I)^{-1} h via Cholesky, falling back to a fully
/// pivoted LU; the max-norm residual must come out below 1e-8 or the
/// system is reported singular.
inline Vector solve_theta(const Matrix& hhat, const Vector& hvec, double lambda) {
  require(hhat.rows() == hhat.cols(), "solve_theta: matrix must be square");
  require(hhat.rows() == hvec.size(), "solve_theta: size mismatch");
  require(lambda >= 0.0 && std::isfinite(lambda), "solve_theta: lambda must be non-negative");

  Matrix m = hhat;
  m.diagonal().array() += lambda;
  const auto residual_ok = [&](const Vector& theta) {
    return theta.allFinite() && (m * theta - hvec).cwiseAbs().maxCoeff() <= kSolveTolerance;
  };

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) {
    Vector theta = llt.solve(hvec);
    if (residual_ok(theta)) return theta;
  }
  Eigen::FullPivLU<Matrix> lu(m);
  Vector theta = lu.solve(hvec);
  if (residual_ok(theta)) return theta;
  throw numerical_error("solve_theta: singular system (H + lambda I)");
}

/// Fitted ratio values g(x) = sum_l theta_l K(x, c_l); unconstrained, so
/// values may be negative.
inline Vector predict(const RulsifModel& model, const SampleSet& points) {
  require(points.dim() == model.kernel.centers.dim(), "predict: dimension mismatch");
  return kernel_matrix(points, model.kernel) * model.theta;
}

/// Empirical squared-error criterion (constant term dropped):
///   J = (alpha/2) mean_P[g^2] + ((1-alpha)/2) mean_P'[g^2] - mean_P[g].
inline double j_criterion(const Eigen::Ref<const Vector>& g_numerator,
                          const Eigen::Ref<const Vector>& g_denominator, double alpha) {
  require(g_numerator.size() > 0 && g_denominator.size() > 0, "j_criterion: empty holdout");
  const double n = static_cast<double>(g_numerator.size());
  const double np = static_cast<double>(g_denominator.size());
  return 0.5 * alpha * g_numerator.squaredNorm() / n +
         0.5 * (1.0 - alpha) * g_denominator.squaredNorm() / np - g_numerator.sum() / n;
}

inline double j_criterion(const RulsifModel& model, const SampleSet& holdout_numerator,
                          const SampleSet& holdout_denominator) {
  return j_criterion(predict(model, holdout_numerator),
                     predict(model, holdout_denominator), model.alpha);
}

namespace detail {

struct FoldLayout {
  std::vector<Index> offsets;  // cv_folds + 1 entries
};

inline FoldLayout fold_layout(Index count, int folds) {
  FoldLayout layout;
  layout.offsets.resize(static_cast<std::size_t>(folds) + 1);
  layout.offsets[0] = 0;
  for (int k = 0; k < folds; ++k) {
    const Index size = count / folds + (k < count % folds ? 1 : 0);
    layout.offsets[static_cast<std::size_t>(k) + 1] =
        layout.offsets[static_cast<std::size_t>(k)] + size;
  }
  return layout;
}

// Fold-wise Gram pieces of one kernel matrix: G_k = A_k' A_k and the
// per-fold column sums, plus their totals. Training-side quantities for
// fold k are then totals minus the fold piece.
struct GramFolds {
  std::vector<Matrix> gram;
  std::vector<Vector> colsum;
  Matrix gram_total;
  Vector colsum_total;
};

inline GramFolds gram_folds(const Matrix& rows, const FoldLayout& layout) {
  const int folds = static_cast<int>(layout.offsets.size()) - 1;
  GramFolds out;
  out.gram.reserve(static_cast<std::size_t>(folds));
  out.colsum.reserve(static_cast<std::size_t>(folds));
  out.gram_total = Matrix::Zero(rows.cols(), rows.cols());
  out.colsum_total = Vector::Zero(rows.cols());
  for (int k = 0; k < folds; ++k) {
    const Index start = layout.offsets[static_cast<std::size_t>(k)];
    const Index count = layout.offsets[static_cast<std::size_t>(k) + 1] - start;
    const auto block = rows.middleRows(start, count);
    out.gram.push_back(symmetric_gram(block));
    out.colsum.push_back(block.colwise().sum().transpose());
    out.gram_total += out.gram.back();
    out.colsum_total += out.colsum.back();
  }
  return out;
}

inline CvReport cross_validate_with_centers(const SampleSet& numerator,
                                            const SampleSet& denominator,
                                            const RulsifConfig& cfg,
                                            const SampleSet& centers) {
  const Index n = numerator.size();
  const Index np = denominator.size();
  require(cfg.cv_folds <= std::min(n, np), "cross_validate: cv_folds exceeds sample count");

  // Contiguous folds over independently shuffled copies of each set.
  auto num_engine = make_engine(derive_seed(cfg.seed, 1));
  auto den_engine = make_engine(derive_seed(cfg.seed, 2));
  const SampleSet num = numerator.rows(shuffled_indices(n, num_engine));
  const SampleSet den = denominator.rows(shuffled_indices(np, den_engine));
  const FoldLayout num_folds = fold_layout(n, cfg.cv_folds);
  const FoldLayout den_folds = fold_layout(np, cfg.cv_folds);

  const Matrix num_d2 = squared_distances(num, centers);
  const Matrix den_d2 = squared_distances(den, centers);

  CvReport report;
  report.entries.reserve(cfg.sigma_grid.size() * cfg.lambda_grid.size());
  const double alpha = cfg.alpha;

  for (double sigma : cfg.sigma_grid) {
    const Matrix a = kernel_from_distances(num_d2, sigma);
    const Matrix b = kernel_from_distances(den_d2, sigma);
    const GramFolds ga = gram_folds(a, num_folds);
    const GramFolds gb = gram_folds(b, den_folds);

    std::vector<double> scores(cfg.lambda_grid.size(), 0.0);
    for (int k = 0; k < cfg.cv_folds; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      const Index num_start = num_folds.offsets[ku];
      const Index num_count = num_folds.offsets[ku + 1] - num_start;
      const Index den_start = den_folds.offsets[ku];
      const Index den_count = den_folds.offsets[ku + 1] - den_start;
      const double n_tr = static_cast<double>(n - num_count);
      const double np_tr = static_cast<double>(np - den_count);

      Matrix h_tr = ((1.0 - alpha) / np_tr) * (gb.gram_total - gb.gram[ku]);
      if (alpha > 0.0) h_tr += (alpha / n_tr) * (ga.gram_total - ga.gram[ku]);
      const Vector hvec_tr = (ga.colsum_total - ga.colsum[ku]) / n_tr;

      const auto a_holdout = a.middleRows(num_start, num_count);
      const auto b_holdout = b.middleRows(den_start, den_count);
      for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
        const Vector theta = solve_theta(h_tr, hvec_tr, cfg.lambda_grid[li]);
        scores[li] += j_criterion(a_holdout * theta, b_holdout * theta, alpha);
      }
    }
    for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
      report.entries.push_back(
          {sigma, cfg.lambda_grid[li], scores[li] / static_cast<double>(cfg.cv_folds)});
    }
  }

  const CvEntry& best = select_best(report.entries);
  report.selected_sigma = best.sigma;
  report.selected_lambda = best.lambda;
  return report;
}

}  // namespace detail

/// Mean holdout J over cv_folds folds for every (sigma, lambda) grid pair.
/// Fold k holds out the k-th block of BOTH sets. Deterministic in cfg.seed.
inline CvReport cross_validate(const SampleSet& numerator, const SampleSet& denominator,
                               const RulsifConfig& cfg) {
  detail::validate_pair(numerator, denominator);
  detail::validate_config(cfg);
  const SampleSet centers =
      select_centers(numerator, cfg.max_centers, derive_seed(cfg.seed, 0));
  return detail::cross_validate_with_centers(numerator, denominator, cfg, centers);
}

/// End-to-end fit: select centers, cross-validate (sigma, lambda), then
/// refit on all data at the selected pair. When both grids are singletons
/// and the sets are too small to fold, the pair is taken as fixed.
inline RulsifModel fit(const SampleSet& numerator, const SampleSet& denominator,
                       const RulsifConfig& cfg) {
  detail::validate_pair(numerator, denominator);
  detail::validate_config(cfg);
  const SampleSet centers =
      select_centers(numerator, cfg.max_centers, derive_seed(cfg.seed, 0));

  double sigma = cfg.sigma_grid.front();
  double lambda = cfg.lambda_grid.front();
  std::optional<CvReport> provenance;
  const bool singleton = cfg.sigma_grid.size() == 1 && cfg.lambda_grid.size() == 1;
  const bool can_fold = cfg.cv_folds <= std::min(numerator.size(), denominator.size());
  if (can_fold || !singleton) {
    CvReport report = detail::cross_validate_with_centers(numerator, denominator, cfg, centers);
    sigma = report.selected_sigma;
    lambda = report.selected_lambda;
    provenance = std::move(report);
  }

  KernelSpec spec(sigma, centers);
  RulsifModel model;
  model.theta = solve_theta(build_hhat(numerator, denominator, spec, cfg.alpha),
                            build_hvec(numerator, spec), lambda);
  model.kernel = std::move(spec);
  model.alpha = cfg.alpha;
  model.lambda = lambda;
  model.provenance = std::move(provenance);
  model.seed = cfg.seed;
  return model;
}

}  // namespace rulsif
