#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rulsif/covshift.hpp"
#include "rulsif/csv.hpp"
#include "rulsif/divergence.hpp"
#include "rulsif/homogeneity.hpp"
#include "rulsif/outlier.hpp"
#include "rulsif/synthdata.hpp"
#include "rulsif/threading.hpp"

namespace rulsif {

// Seeded reproduction drivers behind the `repro` CLI subcommand. Each one
// writes a fixed-schema CSV (documented in docs/experiments.md) and is a
// deterministic function of (runs, seed) regardless of thread count: every
// trial derives its own RNG stream from its index and writes its own slot.

struct ReproOptions {
  int runs = 0;  // 0: per-experiment default
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw data_error((dir / name).string() + ": cannot open for writing");
  return out;
}

}  // namespace detail

/// Null-acceptance rate of the LSTT over seeded trials on one benchmark
/// dataset pair. Trials parallelize; each runs single-threaded inside.
inline double lstt_acceptance_rate(char dataset_tag, Index n, Index n_prime,
                                   const TestConfig& config, int trials,
                                   std::uint64_t seed, int threads) {
  require(trials >= 1, "lstt_acceptance_rate: trials must be >= 1");
  std::vector<char> rejected(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    const BenchmarkDataset data = benchmark_dataset(dataset_tag, n, n_prime, trial_seed);
    TestConfig cfg = config;
    cfg.threads = 1;
    const TestOutcome outcome =
        lstt(data.numerator, data.denominator, cfg, derive_seed(trial_seed, 9));
    rejected[t] = outcome.reject ? 1 : 0;
  });
  int rejects = 0;
  for (char r : rejected) rejects += r;
  return 1.0 - static_cast<double>(rejects) / static_cast<double>(trials);
}

struct AucCell {
  int d = 1;
  double alpha = 0.0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  int trials_used = 0;  // trials with both classes present
};

/// Mean AUC of ratio-based outlier scoring over seeded trials. All alpha
/// values in one trial share the same dataset, so per-alpha comparisons use
/// common random numbers. Trials whose evaluation set came out single-class
/// are skipped.
inline std::vector<AucCell> outlier_auc_cells(const std::vector<int>& dims,
                                              const std::vector<double>& alphas,
                                              Index n, Index n_prime, int trials,
                                              std::uint64_t seed, int threads) {
  require(trials >= 1, "outlier_auc_cells: trials must be >= 1");
  const std::size_t n_alpha = alphas.size();
  // slot [dim][trial * n_alpha + alpha]; NaN marks a skipped trial
  std::vector<std::vector<double>> scores(
      dims.size(),
      std::vector<double>(static_cast<std::size_t>(trials) * n_alpha,
                          std::numeric_limits<double>::quiet_NaN()));

  for (std::size_t di = 0; di < dims.size(); ++di) {
    const int d = dims[di];
    parallel_for(static_cast<std::size_t>(trials), threads, [&, di, d](std::size_t t) {
      const std::uint64_t trial_seed = derive_seed(derive_seed(seed, di), t);
      const OutlierDataset data = outlier_dataset(d, n, n_prime, trial_seed);
      bool has_outlier = false, has_inlier = false;
      for (bool label : data.labels) (label ? has_outlier : has_inlier) = true;
      if (!has_outlier || !has_inlier) return;
      for (std::size_t ai = 0; ai < n_alpha; ++ai) {
        RulsifConfig cfg;
        cfg.alpha = alphas[ai];
        cfg.seed = derive_seed(trial_seed, ai + 1);
        OutlierAnalysis analysis = score_outliers(data.model_set, data.evaluation_set, cfg);
        analysis.scored.labels = data.labels;
        scores[di][t * n_alpha + ai] = auc(analysis.scored);
      }
    });
  }

  std::vector<AucCell> cells;
  for (std::size_t di = 0; di < dims.size(); ++di) {
    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
      AucCell cell;
      cell.d = dims[di];
      cell.alpha = alphas[ai];
      double mean = 0.0;
      int used = 0;
      for (int t = 0; t < trials; ++t) {
        const double v = scores[di][static_cast<std::size_t>(t) * n_alpha + ai];
        if (!std::isnan(v)) {
          mean += v;
          ++used;
        }
      }
      require(used >= 1, "outlier_auc_cells: every trial degenerate");
      mean /= used;
      double var = 0.0;
      for (int t = 0; t < trials; ++t) {
        const double v = scores[di][static_cast<std::size_t>(t) * n_alpha + ai];
        if (!std::isnan(v)) var += (v - mean) * (v - mean);
      }
      cell.mean_auc = mean;
      cell.sd_auc = std::sqrt(var / used);
      cell.trials_used = used;
      cells.push_back(cell);
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// CSV-writing drivers
// ---------------------------------------------------------------------------

/// ratio_curves.csv: true and estimated alpha-relative ratios on an x grid,
/// one fit per (dataset, alpha) at n = n' = 300.
inline void run_ratio_curves(const ReproOptions& opts) {
  const std::vector<char> tags = {'a', 'b', 'c', 'd', 'e'};
  const std::vector<double> alphas = {0.0, 0.5, 0.95};
  constexpr Index kGridSize = 201;
  constexpr Index kSamples = 300;

  struct Curve {
    char tag;
    double alpha;
    Vector truth;
    Vector estimate;
  };
  std::vector<Curve> curves(tags.size() * alphas.size());
  Matrix grid(kGridSize, 1);
  for (Index i = 0; i < kGridSize; ++i) {
    grid(i, 0) = -5.0 + 10.0 * static_cast<double>(i) / (kGridSize - 1);
  }
  const SampleSet grid_set{grid};

  parallel_for(curves.size(), opts.threads, [&](std::size_t item) {
    const char tag = tags[item / alphas.size()];
    const double alpha = alphas[item % alphas.size()];
    const std::uint64_t item_seed = derive_seed(opts.seed, item);
    const BenchmarkDataset data = benchmark_dataset(tag, kSamples, kSamples, item_seed);
    RulsifConfig cfg = make_default_config(data.numerator, data.denominator, alpha,
                                           derive_seed(item_seed, 7));
    const RulsifModel model = fit(data.numerator, data.denominator, cfg);
    Curve curve{tag, alpha, Vector(kGridSize), predict(model, grid_set)};
    for (Index i = 0; i < kGridSize; ++i) {
      curve.truth[i] = true_relative_ratio(data.p, data.p_prime, alpha, grid.row(i).transpose());
    }
    curves[item] = std::move(curve);
  });

  auto out = detail::open_output(opts.out_dir, "ratio_curves.csv");
  write_csv_row(out, {"dataset", "alpha", "x", "true_ratio", "estimated_ratio"});
  for (const auto& curve : curves) {
    for (Index i = 0; i < kGridSize; ++i) {
      write_csv_row(out, {std::string(1, curve.tag), format_double(curve.alpha),
                          format_double(grid(i, 0)), format_double(curve.truth[i]),
                          format_double(curve.estimate[i])});
    }
  }
}

/// pe_convergence.csv: mean/sd of both PE estimators against the quadrature
/// truth as n = n' grows, per dataset and alpha.
inline void run_pe_convergence(const ReproOptions& opts) {
  const int runs = opts.runs > 0 ? opts.runs : 30;
  const std::vector<char> tags = {'a', 'b', 'c', 'd', 'e'};
  const std::vector<double> alphas = {0.0, 0.5, 0.95};
  const std::vector<Index> sizes = {125, 250, 500};

  struct Cell {
    char tag;
    double alpha;
    Index n;
  };
  std::vector<Cell> cells;
  for (char tag : tags) {
    for (double alpha : alphas) {
      for (Index n : sizes) cells.push_back({tag, alpha, n});
    }
  }

  std::vector<double> hat(cells.size() * static_cast<std::size_t>(runs));
  std::vector<double> tilde(cells.size() * static_cast<std::size_t>(runs));
  parallel_for(cells.size() * static_cast<std::size_t>(runs), opts.threads,
               [&](std::size_t item) {
                 const std::size_t cell_index = item / static_cast<std::size_t>(runs);
                 const std::size_t run = item % static_cast<std::size_t>(runs);
                 const Cell& cell = cells[cell_index];
                 const std::uint64_t item_seed =
                     derive_seed(derive_seed(opts.seed, cell_index), run);
                 const BenchmarkDataset data = benchmark_dataset(cell.tag, cell.n, cell.n, item_seed);
                 RulsifConfig cfg = make_default_config(data.numerator, data.denominator,
                                                        cell.alpha, derive_seed(item_seed, 7));
                 const RulsifModel model = fit(data.numerator, data.denominator, cfg);
                 const DivergenceEstimate est =
                     estimate_divergence(model, data.numerator, data.denominator);
                 hat[item] = est.pe_hat;
                 tilde[item] = est.pe_tilde;
               });

  auto out = detail::open_output(opts.out_dir, "pe_convergence.csv");
  write_csv_row(out, {"dataset", "alpha", "n", "runs", "true_pe", "mean_pe_hat",
                      "sd_pe_hat", "mean_pe_tilde", "sd_pe_tilde"});
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    const double truth =
        true_pe_oracle(GaussianMixtureSpec::normal1d(0.0, 1.0),
                       benchmark_denominator_spec(cell.tag), cell.alpha);
    auto stats = [&](const std::vector<double>& values) {
      double mean = 0.0;
      for (int r = 0; r < runs; ++r) mean += values[c * static_cast<std::size_t>(runs) + r];
      mean /= runs;
      double var = 0.0;
      for (int r = 0; r < runs; ++r) {
        const double v = values[c * static_cast<std::size_t>(runs) + r] - mean;
        var += v * v;
      }
      return std::make_pair(mean, std::sqrt(var / runs));
    };
    const auto [hat_mean, hat_sd] = stats(hat);
    const auto [tilde_mean, tilde_sd] = stats(tilde);
    write_csv_row(out, {std::string(1, cell.tag), format_double(cell.alpha),
                        std::to_string(cell.n), std::to_string(runs), format_double(truth),
                        format_double(hat_mean), format_double(hat_sd),
                        format_double(tilde_mean), format_double(tilde_sd)});
  }
}

/// type1.csv: null-acceptance rate of the plain LSTT on dataset (a) at the
/// 5% level, n = n' = 100, B = 100 permutations.
inline void run_type1(const ReproOptions& opts) {
  const int trials = opts.runs > 0 ? opts.runs : 100;
  const std::vector<double> alphas = {0.0, 0.5, 0.95};
  auto out = detail::open_output(opts.out_dir, "type1.csv");
  write_csv_row(out, {"dataset", "direction", "alpha", "n", "n_prime", "permutations",
                      "significance", "trials", "acceptance_rate"});
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    TestConfig cfg;
    cfg.alpha = alphas[ai];
    cfg.direction = Direction::plain;
    const double rate = lstt_acceptance_rate('a', 100, 100, cfg, trials,
                                             derive_seed(opts.seed, ai), opts.threads);
    write_csv_row(out, {"a", "plain", format_double(alphas[ai]), "100", "100", "100",
                        format_double(cfg.significance), std::to_string(trials),
                        format_double(rate)});
  }
}

/// power.csv: null-acceptance rate of the adaptive LSTT (alpha = 0.5) at
/// n = n' = 300 on the equal pair (a) and the mean-shifted pair (d).
inline void run_power(const ReproOptions& opts) {
  const int trials = opts.runs > 0 ? opts.runs : 50;
  auto out = detail::open_output(opts.out_dir, "power.csv");
  write_csv_row(out, {"dataset", "direction", "alpha", "n", "n_prime", "permutations",
                      "significance", "trials", "acceptance_rate"});
  const std::vector<char> tags = {'a', 'd'};
  for (std::size_t ti = 0; ti < tags.size(); ++ti) {
    TestConfig cfg;
    cfg.alpha = 0.5;
    cfg.direction = Direction::adaptive;
    const double rate = lstt_acceptance_rate(tags[ti], 300, 300, cfg, trials,
                                             derive_seed(opts.seed, ti), opts.threads);
    write_csv_row(out, {std::string(1, tags[ti]), "adaptive", "0.5", "300", "300", "100",
                        format_double(cfg.significance), std::to_string(trials),
                        format_double(rate)});
  }
}

/// outlier_auc.csv: mean/sd AUC of ratio-based outlier scoring at
/// n = n' = 100 for d in {1, 5, 10} and alpha in {0, 0.5, 0.95}.
inline void run_outlier_auc(const ReproOptions& opts) {
  const int trials = opts.runs > 0 ? opts.runs : 200;
  const std::vector<AucCell> cells = outlier_auc_cells({1, 5, 10}, {0.0, 0.5, 0.95}, 100,
                                                       100, trials, opts.seed, opts.threads);
  auto out = detail::open_output(opts.out_dir, "outlier_auc.csv");
  write_csv_row(out, {"d", "alpha", "n", "n_prime", "trials", "mean_auc", "sd_auc"});
  for (const auto& cell : cells) {
    write_csv_row(out, {std::to_string(cell.d), format_double(cell.alpha), "100", "100",
                        std::to_string(cell.trials_used), format_double(cell.mean_auc),
                        format_double(cell.sd_auc)});
  }
}

/// covshift_{noshift,shift}.csv: mean/sd test MSE of unweighted, relative
/// (alpha = 0.5), flattened (tau = 0.5) and plain importance weighting on
/// the sinc regression pairs.
inline void run_covshift(const ReproOptions& opts) {
  const int runs = opts.runs > 0 ? opts.runs : 50;
  const std::vector<WeightScheme> schemes = {WeightScheme::none(), WeightScheme::riw(0.5),
                                             WeightScheme::eiw(0.5), WeightScheme::iw()};
  const std::vector<std::pair<ShiftScenario, std::string>> scenarios = {
      {ShiftScenario::no_shift, "covshift_noshift.csv"},
      {ShiftScenario::shift, "covshift_shift.csv"}};
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const auto table = covshift_experiment(scenarios[si].first, schemes, runs,
                                           derive_seed(opts.seed, si), opts.threads);
    auto out = detail::open_output(opts.out_dir, scenarios[si].second);
    write_csv_row(out, {"scheme", "param", "mean_mse", "sd_mse", "runs"});
    for (const auto& row : table) {
      write_csv_row(out, {scheme_name(row.scheme.kind), format_double(row.scheme.alpha_or_tau),
                          format_double(row.mean_mse), format_double(row.sd_mse),
                          std::to_string(row.runs)});
    }
  }
}

inline void run_repro_experiment(const std::string& name, const ReproOptions& opts) {
  if (name == "ratio-curves") return run_ratio_curves(opts);
  if (name == "pe-convergence") return run_pe_convergence(opts);
  if (name == "type1") return run_type1(opts);
  if (name == "power") return run_power(opts);
  if (name == "outlier-auc") return run_outlier_auc(opts);
  if (name == "covshift") return run_covshift(opts);
  throw std::invalid_argument("unknown experiment: " + name);
}

}  // namespace rulsif
