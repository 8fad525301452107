#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rulsif/estimator.hpp"
#include "rulsif/kernel.hpp"
#include "rulsif/rng.hpp"
#include "rulsif/synthdata.hpp"
#include "rulsif/threading.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

// Covariate-shift regression. Training losses are reweighted either by the
// relative importance weight
//   w_alpha(x) = p_te(x) / ((1-alpha) p_te(x) + alpha p_tr(x)),
// estimated directly at the wanted mixture (note the weight on the test
// density is (1-alpha) here, the reverse of the ratio convention used by
// the estimator module), or by exponentially flattened ordinary importance
// r(x)^tau, whose single r = p_te/p_tr estimate is shared by every tau.
// Regression uses a test-centered Gaussian expansion fitted by weighted
// least squares, with the width rho picked by importance-weighted CV.

enum class WeightKind { none, riw, eiw, iw };

struct WeightScheme {
  WeightKind kind = WeightKind::none;
  double alpha_or_tau = 0.0;

  static WeightScheme none() { return {WeightKind::none, 0.0}; }
  static WeightScheme riw(double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "WeightScheme: alpha must be in [0, 1]");
    return {WeightKind::riw, alpha};
  }
  static WeightScheme eiw(double tau) {
    require(tau >= 0.0 && tau <= 1.0, "WeightScheme: tau must be in [0, 1]");
    return {WeightKind::eiw, tau};
  }
  static WeightScheme iw() { return {WeightKind::iw, 1.0}; }
};

inline std::string scheme_name(WeightKind kind) {
  switch (kind) {
    case WeightKind::none: return "none";
    case WeightKind::riw: return "riw";
    case WeightKind::eiw: return "eiw";
    case WeightKind::iw: return "iw";
  }
  return "none";
}

namespace detail {

inline Vector floor_at_zero(Vector v) {
  return v.cwiseMax(0.0);
}

inline Vector flatten_weights(const Vector& ratio, double tau) {
  return floor_at_zero(ratio).array().pow(tau).matrix();
}

inline RulsifConfig weight_config(const SampleSet& test_inputs,
                                  const SampleSet& train_inputs,
                                  const RulsifConfig& config, double estimator_alpha) {
  RulsifConfig cfg = config;
  cfg.alpha = estimator_alpha;
  if (cfg.sigma_grid.empty()) cfg.sigma_grid = default_sigma_grid(test_inputs, train_inputs);
  if (cfg.lambda_grid.empty()) cfg.lambda_grid = default_lambda_grid();
  return cfg;
}

}  // namespace detail

/// Estimates w_alpha at the training inputs. The ratio model is fitted with
/// numerator = test inputs, denominator = train inputs and mixture weight
/// (1-alpha) on the numerator set, so the estimated quantity is exactly
/// w_alpha. alpha = 0 short-circuits to all-ones; negatives are floored at 0.
inline Vector relative_importance_weights(const SampleSet& train_inputs,
                                          const SampleSet& test_inputs, double alpha,
                                          const RulsifConfig& config) {
  require(alpha >= 0.0 && alpha <= 1.0, "relative_importance_weights: alpha in [0, 1]");
  detail::validate_pair(test_inputs, train_inputs);
  if (alpha == 0.0) return Vector::Ones(train_inputs.size());
  const RulsifConfig cfg =
      detail::weight_config(test_inputs, train_inputs, config, 1.0 - alpha);
  const RulsifModel model = fit(test_inputs, train_inputs, cfg);
  return detail::floor_at_zero(predict(model, train_inputs));
}

/// Ordinary importance p_te/p_tr estimated once at the alpha = 1 endpoint,
/// floored at 0, then raised to tau.
inline Vector eiw_weights(const SampleSet& train_inputs, const SampleSet& test_inputs,
                          double tau, const RulsifConfig& config) {
  require(tau >= 0.0 && tau <= 1.0, "eiw_weights: tau must be in [0, 1]");
  detail::validate_pair(test_inputs, train_inputs);
  if (tau == 0.0) return Vector::Ones(train_inputs.size());
  const RulsifConfig cfg = detail::weight_config(test_inputs, train_inputs, config, 0.0);
  const RulsifModel model = fit(test_inputs, train_inputs, cfg);
  return detail::flatten_weights(predict(model, train_inputs), tau);
}

struct WeightedFit {
  Vector coefficients;  // one per test-input center
  double rho = 0.0;
  Vector weights;
  WeightScheme scheme;
  std::optional<double> test_mse;
  KernelSpec kernel;                        // rho + test-input centers
  std::vector<std::pair<double, double>> cv_scores;  // (rho, weighted CV error)
};

inline Vector predict_regression(const WeightedFit& fit, const SampleSet& points) {
  return kernel_matrix(points, fit.kernel) * fit.coefficients;
}

namespace detail {

// Normal equations of (1/m) sum w_j (phi_j' beta - y_j)^2 + ridge |beta|^2.
inline Vector solve_weighted_ls(const Matrix& phi, const Vector& weights,
                                const Vector& targets, double ridge) {
  const double m = static_cast<double>(phi.rows());
  const Matrix wphi = weights.asDiagonal() * phi;
  Matrix normal = (phi.transpose() * wphi) / m;
  normal.diagonal().array() += ridge;
  const Vector rhs = (phi.transpose() * (weights.cwiseProduct(targets))) / m;

  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() == Eigen::Success) {
    Vector beta = llt.solve(rhs);
    if (beta.allFinite()) return beta;
  }
  Eigen::FullPivLU<Matrix> lu(normal);
  if (!lu.isInvertible() && ridge == 0.0) {
    throw numerical_error("weighted_kernel_ls: singular normal equations at ridge 0");
  }
  Vector beta = lu.solve(rhs);
  if (!beta.allFinite()) {
    throw numerical_error("weighted_kernel_ls: normal equations not solvable");
  }
  return beta;
}

}  // namespace detail

/// Weighted Gaussian-kernel least squares with centers at the test inputs.
/// rho is selected by k-fold importance-weighted CV (validation error =
/// mean of w_j * squared residual over the fold, same weights as training),
/// then the coefficients are refitted on all training data. A singleton rho
/// grid skips CV. Ties prefer the larger rho.
inline WeightedFit weighted_kernel_ls(const LabeledSet& train, const SampleSet& test_inputs,
                                      const Vector& weights,
                                      const std::vector<double>& rho_grid, double ridge,
                                      int cv_folds, std::uint64_t seed) {
  require(!train.inputs.empty() && !test_inputs.empty(), "weighted_kernel_ls: empty inputs");
  require(train.inputs.dim() == test_inputs.dim(), "weighted_kernel_ls: dimension mismatch");
  require(weights.size() == train.size(), "weighted_kernel_ls: weights length mismatch");
  require(weights.allFinite() && (weights.array() >= 0.0).all(),
          "weighted_kernel_ls: weights must be non-negative");
  require(!rho_grid.empty(), "weighted_kernel_ls: rho grid must be non-empty");
  for (double r : rho_grid) require(r > 0.0 && std::isfinite(r), "weighted_kernel_ls: rho must be positive");
  require(ridge >= 0.0, "weighted_kernel_ls: ridge must be non-negative");

  const Index n = train.size();
  WeightedFit result;
  result.weights = weights;
  result.scheme = WeightScheme::none();

  double best_rho = rho_grid.front();
  if (rho_grid.size() > 1) {
    require(cv_folds >= 2 && cv_folds <= n, "weighted_kernel_ls: bad cv_folds");
    auto engine = make_engine(derive_seed(seed, 1));
    const std::vector<Index> order = shuffled_indices(n, engine);
    const SampleSet inputs = train.inputs.rows(order);
    Vector y(n), w(n);
    for (Index i = 0; i < n; ++i) {
      y[i] = train.targets[order[static_cast<std::size_t>(i)]];
      w[i] = weights[order[static_cast<std::size_t>(i)]];
    }
    const auto folds = detail::fold_layout(n, cv_folds);
    const Matrix d2 = detail::squared_distances(inputs, test_inputs);

    double best_score = std::numeric_limits<double>::infinity();
    for (double rho : rho_grid) {
      const Matrix phi = detail::kernel_from_distances(d2, rho);
      double score = 0.0;
      for (int k = 0; k < cv_folds; ++k) {
        const Index start = folds.offsets[static_cast<std::size_t>(k)];
        const Index count = folds.offsets[static_cast<std::size_t>(k) + 1] - start;
        const Index rest = n - count;
        Matrix phi_tr(rest, phi.cols());
        Vector y_tr(rest), w_tr(rest);
        phi_tr.topRows(start) = phi.topRows(start);
        phi_tr.bottomRows(rest - start) = phi.bottomRows(n - start - count);
        y_tr.head(start) = y.head(start);
        y_tr.tail(rest - start) = y.tail(n - start - count);
        w_tr.head(start) = w.head(start);
        w_tr.tail(rest - start) = w.tail(n - start - count);

        const Vector beta = detail::solve_weighted_ls(phi_tr, w_tr, y_tr, ridge);
        const Vector res = phi.middleRows(start, count) * beta - y.segment(start, count);
        score += (w.segment(start, count).array() * res.array().square()).mean();
      }
      score /= static_cast<double>(cv_folds);
      result.cv_scores.emplace_back(rho, score);
      if (score < best_score || (score == best_score && rho > best_rho)) {
        best_score = score;
        best_rho = rho;
      }
    }
  }

  result.kernel = KernelSpec(best_rho, test_inputs);
  const Matrix phi_full = kernel_matrix(train.inputs, result.kernel);
  result.coefficients = detail::solve_weighted_ls(phi_full, weights, train.targets, ridge);
  result.rho = best_rho;
  return result;
}

struct CovshiftOptions {
  Index n_train = 100;
  Index n_test = 200;
  std::vector<double> rho_multipliers = {0.1, 0.2, 0.4, 0.8, 1.6};
  double ridge_base = 1e-6;  // effective ridge = ridge_base * n_train
  int cv_folds = 5;
  RulsifConfig rulsif;  // grids filled per run from the realized samples
};

struct SchemeResult {
  WeightScheme scheme;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  int runs = 0;
};

/// Repeats the full pipeline per scheme on freshly generated sinc data and
/// aggregates test MSE. All schemes in one run share the same data and
/// derived seeds, so differences reflect the weighting alone. The sd is the
/// population standard deviation (0 for a single run).
inline std::vector<SchemeResult> covshift_experiment(ShiftScenario scenario,
                                                     const std::vector<WeightScheme>& schemes,
                                                     int runs, std::uint64_t seed,
                                                     int threads = 1,
                                                     const CovshiftOptions& options = {}) {
  require(runs >= 1, "covshift_experiment: runs must be >= 1");
  require(!schemes.empty(), "covshift_experiment: no schemes");

  std::vector<std::vector<double>> mse(
      schemes.size(), std::vector<double>(static_cast<std::size_t>(runs), 0.0));
  const double ridge = options.ridge_base * static_cast<double>(options.n_train);

  parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t run) {
    const std::uint64_t run_seed = derive_seed(seed, run);
    const SincData data = sinc_dataset(scenario, options.n_train, options.n_test,
                                       derive_seed(run_seed, 0));
    RulsifConfig rc = options.rulsif;
    rc.seed = derive_seed(run_seed, 1);

    const double rho_scale = median_pairwise_distance(data.test.inputs);
    std::vector<double> rho_grid;
    for (double f : options.rho_multipliers) rho_grid.push_back(f * rho_scale);

    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const WeightScheme& scheme = schemes[s];
      Vector w;
      switch (scheme.kind) {
        case WeightKind::none:
          w = Vector::Ones(data.train.size());
          break;
        case WeightKind::riw:
          w = relative_importance_weights(data.train.inputs, data.test.inputs,
                                          scheme.alpha_or_tau, rc);
          break;
        case WeightKind::eiw:
          w = eiw_weights(data.train.inputs, data.test.inputs, scheme.alpha_or_tau, rc);
          break;
        case WeightKind::iw:
          w = relative_importance_weights(data.train.inputs, data.test.inputs, 1.0, rc);
          break;
      }
      WeightedFit fitted = weighted_kernel_ls(data.train, data.test.inputs, w, rho_grid,
                                              ridge, options.cv_folds,
                                              derive_seed(run_seed, 2));
      fitted.scheme = scheme;
      const Vector predictions = predict_regression(fitted, data.test.inputs);
      fitted.test_mse = (predictions - data.test.targets).squaredNorm() /
                        static_cast<double>(data.test.size());
      mse[s][run] = *fitted.test_mse;
    }
  });

  std::vector<SchemeResult> table;
  table.reserve(schemes.size());
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    double mean = 0.0;
    for (double v : mse[s]) mean += v;
    mean /= static_cast<double>(runs);
    double var = 0.0;
    for (double v : mse[s]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(runs);
    table.push_back({schemes[s], mean, std::sqrt(var), runs});
  }
  return table;
}

}  // namespace rulsif
