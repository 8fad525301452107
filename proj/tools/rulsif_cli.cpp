// Command-line front end: fitting and persisting ratio models, divergence
// estimation, the permutation two-sample test, outlier scoring, dataset
// generation, and the seeded reproduction experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rulsif/covshift.hpp"
#include "rulsif/csv.hpp"
#include "rulsif/divergence.hpp"
#include "rulsif/estimator.hpp"
#include "rulsif/experiments.hpp"
#include "rulsif/homogeneity.hpp"
#include "rulsif/outlier.hpp"
#include "rulsif/serialization.hpp"
#include "rulsif/synthdata.hpp"
#include "rulsif/threading.hpp"

namespace {

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RULSIF_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return rulsif::hardware_threads();
}

rulsif::HeaderMode header_mode_from(const std::string& value) {
  if (value == "auto") return rulsif::HeaderMode::automatic;
  if (value == "yes") return rulsif::HeaderMode::yes;
  if (value == "no") return rulsif::HeaderMode::no;
  throw usage_error("--header must be auto, yes or no");
}

std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    double v;
    if (!rulsif::detail::parse_field(token, v)) {
      throw usage_error(flag + ": not a number: '" + token + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw usage_error(flag + ": empty grid");
  return values;
}

rulsif::Json cv_report_json(const rulsif::RulsifModel& model) {
  rulsif::Json entries = rulsif::Json::array();
  if (model.provenance) {
    for (const auto& e : model.provenance->entries) {
      entries.push_back({{"sigma", e.sigma}, {"lambda", e.lambda}, {"cv_score", e.cv_score}});
    }
  }
  rulsif::Json doc;
  doc["entries"] = entries;
  doc["selected"] = {{"sigma", model.kernel.width}, {"lambda", model.lambda}};
  return doc;
}

std::string direction_name(rulsif::Direction d) {
  switch (d) {
    case rulsif::Direction::plain: return "plain";
    case rulsif::Direction::reciprocal: return "reciprocal";
    case rulsif::Direction::adaptive: return "adaptive";
  }
  return "plain";
}

// --- flag payloads -----------------------------------------------------------

struct FitArgs {
  std::string numerator, denominator, out;
  double alpha = 0.5;
  std::string sigma_grid = "auto";
  std::string lambda_grid = "default";
  int folds = 5;
  int max_centers = 100;
  std::uint64_t seed = 0;
  std::string header = "auto";
};

struct PeArgs {
  std::string model, numerator, denominator;
  std::string header = "auto";
};

struct TestArgs {
  std::string x, x_prime;
  double alpha = 0.5;
  std::string direction = "plain";
  int permutations = 100;
  double significance = 0.05;
  std::uint64_t seed = 0;
  std::string estimator = "pe-hat";
  bool fast = false;
  int folds = 5;
  int max_centers = 100;
  std::string header = "auto";
};

struct OutlierArgs {
  std::string model_set, evaluation_set, labels, scores_out;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int folds = 5;
  int max_centers = 100;
  std::string header = "auto";
};

struct DatasetArgs {
  std::string kind;
  long long n = 300, n_prime = 300, d = 1, n_train = 100, n_test = 200;
  std::string scenario = "shift";
  std::uint64_t seed = 0;
  std::string out_numerator, out_denominator, out_model, out_evaluation, out_train, out_test;
};

struct ReproArgs {
  std::string experiment;
  int runs = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

// --- handlers ----------------------------------------------------------------

rulsif::RulsifConfig build_config(double alpha, const std::string& sigma_grid,
                                  const std::string& lambda_grid, int folds,
                                  int max_centers, std::uint64_t seed,
                                  const rulsif::SampleSet& numerator,
                                  const rulsif::SampleSet& denominator) {
  if (alpha < 0.0 || alpha >= 1.0) throw usage_error("--alpha must be in [0, 1)");
  if (folds < 2) throw usage_error("--folds must be >= 2");
  if (max_centers < 1) throw usage_error("--max-centers must be >= 1");
  rulsif::RulsifConfig cfg;
  cfg.alpha = alpha;
  cfg.cv_folds = folds;
  cfg.max_centers = max_centers;
  cfg.seed = seed;
  cfg.sigma_grid = sigma_grid == "auto" ? rulsif::default_sigma_grid(numerator, denominator)
                                        : parse_grid(sigma_grid, "--sigma-grid");
  cfg.lambda_grid = lambda_grid == "default" ? rulsif::default_lambda_grid()
                                             : parse_grid(lambda_grid, "--lambda-grid");
  return cfg;
}

void run_fit(const FitArgs& args) {
  const auto header = header_mode_from(args.header);
  const rulsif::SampleSet num = rulsif::sample_set_from_csv(args.numerator, header);
  const rulsif::SampleSet den = rulsif::sample_set_from_csv(args.denominator, header);
  if (num.dim() != den.dim()) {
    throw rulsif::data_error("numerator and denominator column counts differ (" +
                             std::to_string(num.dim()) + " vs " + std::to_string(den.dim()) + ")");
  }
  const auto cfg = build_config(args.alpha, args.sigma_grid, args.lambda_grid, args.folds,
                                args.max_centers, args.seed, num, den);
  const rulsif::RulsifModel model = rulsif::fit(num, den, cfg);
  rulsif::save_model(model, args.out);
  std::cout << cv_report_json(model).dump() << '\n';
}

void run_pe(const PeArgs& args) {
  const auto header = header_mode_from(args.header);
  const rulsif::RulsifModel model = rulsif::load_model(args.model);
  const rulsif::SampleSet num = rulsif::sample_set_from_csv(args.numerator, header);
  const rulsif::SampleSet den = rulsif::sample_set_from_csv(args.denominator, header);
  const auto est = rulsif::estimate_divergence(model, num, den);
  rulsif::Json doc;
  doc["alpha"] = est.alpha;
  doc["pe_hat"] = est.pe_hat;
  doc["pe_tilde"] = est.pe_tilde;
  doc["n"] = est.n;
  doc["n_prime"] = est.n_prime;
  std::cout << doc.dump() << '\n';
}

void run_test(const TestArgs& args, int threads) {
  if (args.alpha < 0.0 || args.alpha >= 1.0) throw usage_error("--alpha must be in [0, 1)");
  if (args.permutations < 1) throw usage_error("--permutations must be >= 1");
  if (args.significance <= 0.0 || args.significance >= 1.0) {
    throw usage_error("--significance must be in (0, 1)");
  }
  const auto header = header_mode_from(args.header);
  const rulsif::SampleSet x = rulsif::sample_set_from_csv(args.x, header);
  const rulsif::SampleSet xp = rulsif::sample_set_from_csv(args.x_prime, header);

  rulsif::TestConfig cfg;
  cfg.alpha = args.alpha;
  cfg.permutations = args.permutations;
  cfg.significance = args.significance;
  cfg.full_cv_permutations = !args.fast;
  cfg.threads = threads;
  cfg.rulsif.cv_folds = args.folds;
  cfg.rulsif.max_centers = args.max_centers;
  if (args.direction == "plain") cfg.direction = rulsif::Direction::plain;
  else if (args.direction == "reciprocal") cfg.direction = rulsif::Direction::reciprocal;
  else if (args.direction == "adaptive") cfg.direction = rulsif::Direction::adaptive;
  else throw usage_error("--direction must be plain, reciprocal or adaptive");
  if (args.estimator == "pe-hat") cfg.estimator = rulsif::PeEstimator::pe_hat;
  else if (args.estimator == "pe-tilde") cfg.estimator = rulsif::PeEstimator::pe_tilde;
  else throw usage_error("--estimator must be pe-hat or pe-tilde");

  const rulsif::TestOutcome outcome = rulsif::lstt(x, xp, cfg, args.seed);
  rulsif::Json doc;
  doc["p_value"] = outcome.p_value;
  if (outcome.p_plain) doc["p_plain"] = *outcome.p_plain;
  if (outcome.p_reciprocal) doc["p_reciprocal"] = *outcome.p_reciprocal;
  doc["statistic"] = outcome.statistic;
  doc["permuted_statistics"] = {{"count", outcome.permuted_statistics.count},
                                {"mean", outcome.permuted_statistics.mean},
                                {"sd", outcome.permuted_statistics.sd}};
  doc["reject"] = outcome.reject;
  doc["direction_used"] = direction_name(outcome.direction_used);
  std::cout << doc.dump() << '\n';
}

void run_outlier(const OutlierArgs& args) {
  if (args.alpha < 0.0 || args.alpha >= 1.0) throw usage_error("--alpha must be in [0, 1)");
  if (args.folds < 2) throw usage_error("--folds must be >= 2");
  const auto header = header_mode_from(args.header);
  const rulsif::SampleSet model_set = rulsif::sample_set_from_csv(args.model_set, header);
  const rulsif::SampleSet eval_set = rulsif::sample_set_from_csv(args.evaluation_set, header);

  rulsif::RulsifConfig cfg;
  cfg.alpha = args.alpha;
  cfg.cv_folds = args.folds;
  cfg.max_centers = args.max_centers;
  cfg.seed = args.seed;
  rulsif::OutlierAnalysis analysis = rulsif::score_outliers(model_set, eval_set, cfg);

  std::optional<std::vector<bool>> labels;
  if (!args.labels.empty()) {
    const rulsif::CsvTable table = rulsif::read_csv_file(args.labels, header);
    if (table.values.cols() != 1) throw rulsif::data_error(args.labels + ": expected one column");
    if (table.values.rows() != eval_set.size()) {
      throw rulsif::data_error(args.labels + ": label count does not match evaluation rows");
    }
    std::vector<bool> parsed(static_cast<std::size_t>(table.values.rows()));
    for (rulsif::Index i = 0; i < table.values.rows(); ++i) {
      const double v = table.values(i, 0);
      if (v != 0.0 && v != 1.0) throw rulsif::data_error(args.labels + ": labels must be 0 or 1");
      parsed[static_cast<std::size_t>(i)] = v == 1.0;
    }
    labels = std::move(parsed);
    analysis.scored.labels = labels;
  }

  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!args.scores_out.empty()) {
    file_out.open(args.scores_out, std::ios::binary);
    if (!file_out) throw rulsif::data_error(args.scores_out + ": cannot open for writing");
    out = &file_out;
  }
  *out << (labels ? "index,score,label\n" : "index,score\n");
  for (rulsif::Index i = 0; i < analysis.scored.scores.size(); ++i) {
    *out << i << ',' << rulsif::format_double(analysis.scored.scores[i]);
    if (labels) *out << ',' << ((*labels)[static_cast<std::size_t>(i)] ? 1 : 0);
    *out << '\n';
  }

  rulsif::Json summary;
  if (labels) summary["auc"] = rulsif::auc(analysis.scored);
  summary["n"] = model_set.size();
  summary["n_prime"] = eval_set.size();
  summary["alpha"] = analysis.model.alpha;
  summary["sigma"] = analysis.model.kernel.width;
  summary["lambda"] = analysis.model.lambda;
  std::cout << summary.dump() << '\n';
}

void write_samples_csv(const std::string& path, const rulsif::Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rulsif::data_error(path + ": cannot open for writing");
  rulsif::write_matrix_csv(out, values);
}

void run_dataset(const DatasetArgs& args) {
  if (args.n < 1 || args.n_prime < 1) throw usage_error("--n and --n-prime must be >= 1");
  if (args.kind.size() == 1 && args.kind[0] >= 'a' && args.kind[0] <= 'e') {
    if (args.out_numerator.empty() || args.out_denominator.empty()) {
      throw usage_error("benchmark datasets need --out-numerator and --out-denominator");
    }
    const auto data = rulsif::benchmark_dataset(args.kind[0], args.n, args.n_prime, args.seed);
    write_samples_csv(args.out_numerator, data.numerator.data());
    write_samples_csv(args.out_denominator, data.denominator.data());
    return;
  }
  if (args.kind == "outlier") {
    if (args.d < 1) throw usage_error("--d must be >= 1");
    if (args.out_model.empty() || args.out_evaluation.empty()) {
      throw usage_error("outlier dataset needs --out-model and --out-evaluation");
    }
    const auto data = rulsif::outlier_dataset(static_cast<int>(args.d), args.n,
                                              args.n_prime, args.seed);
    write_samples_csv(args.out_model, data.model_set.data());
    rulsif::Matrix eval(data.evaluation_set.size(), data.evaluation_set.dim() + 1);
    eval.leftCols(data.evaluation_set.dim()) = data.evaluation_set.data();
    for (rulsif::Index i = 0; i < eval.rows(); ++i) {
      eval(i, eval.cols() - 1) = data.labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    write_samples_csv(args.out_evaluation, eval);
    return;
  }
  if (args.kind == "sinc") {
    if (args.n_train < 1 || args.n_test < 1) throw usage_error("--n-train and --n-test must be >= 1");
    if (args.out_train.empty() || args.out_test.empty()) {
      throw usage_error("sinc dataset needs --out-train and --out-test");
    }
    rulsif::ShiftScenario scenario;
    if (args.scenario == "no-shift") scenario = rulsif::ShiftScenario::no_shift;
    else if (args.scenario == "shift") scenario = rulsif::ShiftScenario::shift;
    else throw usage_error("--scenario must be no-shift or shift");
    const auto data = rulsif::sinc_dataset(scenario, args.n_train, args.n_test, args.seed);
    auto with_targets = [](const rulsif::LabeledSet& set) {
      rulsif::Matrix m(set.size(), set.inputs.dim() + 1);
      m.leftCols(set.inputs.dim()) = set.inputs.data();
      m.rightCols(1) = set.targets;
      return m;
    };
    write_samples_csv(args.out_train, with_targets(data.train));
    write_samples_csv(args.out_test, with_targets(data.test));
    return;
  }
  throw usage_error("unknown dataset kind: " + args.kind);
}

void run_repro(const ReproArgs& args, int threads) {
  if (args.runs < 0) throw usage_error("--runs must be >= 0");
  rulsif::ReproOptions opts;
  opts.runs = args.runs;
  opts.seed = args.seed;
  opts.threads = threads;
  opts.out_dir = args.out_dir;
  rulsif::run_repro_experiment(args.experiment, opts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct least-squares estimation of relative density ratios, "
               "with divergence estimation, two-sample testing, outlier "
               "scoring and covariate-shift experiments"};
  app.require_subcommand(1);
  int threads_flag = 0;
  app.add_option("--threads", threads_flag,
                 "Worker threads (0 = RULSIF_THREADS env or hardware)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a ratio model and write model JSON");
  fit_cmd->add_option("numerator", fit_args.numerator)->required();
  fit_cmd->add_option("denominator", fit_args.denominator)->required();
  fit_cmd->add_option("--alpha", fit_args.alpha, "Relative mixing parameter in [0,1)");
  fit_cmd->add_option("--sigma-grid", fit_args.sigma_grid, "Comma list or 'auto'");
  fit_cmd->add_option("--lambda-grid", fit_args.lambda_grid, "Comma list or 'default'");
  fit_cmd->add_option("--folds", fit_args.folds);
  fit_cmd->add_option("--max-centers", fit_args.max_centers);
  fit_cmd->add_option("--seed", fit_args.seed);
  fit_cmd->add_option("--out", fit_args.out, "Model JSON path")->required();
  fit_cmd->add_option("--header", fit_args.header, "auto|yes|no");

  PeArgs pe_args;
  auto* pe_cmd = app.add_subcommand("pe", "Divergence estimates from a saved model");
  pe_cmd->add_option("model", pe_args.model)->required();
  pe_cmd->add_option("numerator", pe_args.numerator)->required();
  pe_cmd->add_option("denominator", pe_args.denominator)->required();
  pe_cmd->add_option("--header", pe_args.header);

  TestArgs test_args;
  auto* test_cmd = app.add_subcommand("test", "Permutation two-sample homogeneity test");
  test_cmd->add_option("x", test_args.x)->required();
  test_cmd->add_option("x_prime", test_args.x_prime)->required();
  test_cmd->add_option("--alpha", test_args.alpha);
  test_cmd->add_option("--direction", test_args.direction, "plain|reciprocal|adaptive");
  test_cmd->add_option("--permutations", test_args.permutations);
  test_cmd->add_option("--significance", test_args.significance);
  test_cmd->add_option("--seed", test_args.seed);
  test_cmd->add_option("--estimator", test_args.estimator, "pe-hat|pe-tilde");
  test_cmd->add_flag("--fast", test_args.fast,
                     "Reuse the originally selected (sigma, lambda) in permutations");
  test_cmd->add_option("--folds", test_args.folds);
  test_cmd->add_option("--max-centers", test_args.max_centers);
  test_cmd->add_option("--header", test_args.header);

  OutlierArgs outlier_args;
  auto* outlier_cmd = app.add_subcommand("outlier", "Inlier-based outlier scores");
  outlier_cmd->add_option("model_set", outlier_args.model_set)->required();
  outlier_cmd->add_option("evaluation_set", outlier_args.evaluation_set)->required();
  outlier_cmd->add_option("--alpha", outlier_args.alpha);
  outlier_cmd->add_option("--seed", outlier_args.seed);
  outlier_cmd->add_option("--labels", outlier_args.labels, "0/1 outlier labels CSV");
  outlier_cmd->add_option("--scores-out", outlier_args.scores_out,
                          "Scores CSV path (default: stdout)");
  outlier_cmd->add_option("--folds", outlier_args.folds);
  outlier_cmd->add_option("--max-centers", outlier_args.max_centers);
  outlier_cmd->add_option("--header", outlier_args.header);

  DatasetArgs dataset_args;
  auto* dataset_cmd = app.add_subcommand("dataset", "Dump a generated dataset as CSV");
  dataset_cmd->add_option("kind", dataset_args.kind, "a|b|c|d|e|outlier|sinc")->required();
  dataset_cmd->add_option("--n", dataset_args.n);
  dataset_cmd->add_option("--n-prime", dataset_args.n_prime);
  dataset_cmd->add_option("--d", dataset_args.d);
  dataset_cmd->add_option("--n-train", dataset_args.n_train);
  dataset_cmd->add_option("--n-test", dataset_args.n_test);
  dataset_cmd->add_option("--scenario", dataset_args.scenario, "no-shift|shift");
  dataset_cmd->add_option("--seed", dataset_args.seed);
  dataset_cmd->add_option("--out-numerator", dataset_args.out_numerator);
  dataset_cmd->add_option("--out-denominator", dataset_args.out_denominator);
  dataset_cmd->add_option("--out-model", dataset_args.out_model);
  dataset_cmd->add_option("--out-evaluation", dataset_args.out_evaluation);
  dataset_cmd->add_option("--out-train", dataset_args.out_train);
  dataset_cmd->add_option("--out-test", dataset_args.out_test);

  ReproArgs repro_args;
  auto* repro_cmd = app.add_subcommand("repro", "Write a reproduction experiment table");
  repro_cmd->add_option("experiment", repro_args.experiment)
      ->required()
      ->check(CLI::IsMember({"ratio-curves", "pe-convergence", "type1", "power",
                             "outlier-auc", "covshift"}));
  repro_cmd->add_option("--runs", repro_args.runs, "0 = experiment default");
  repro_cmd->add_option("--seed", repro_args.seed);
  repro_cmd->add_option("--out", repro_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    const int threads = resolve_threads(threads_flag);
    if (app.got_subcommand(fit_cmd)) run_fit(fit_args);
    else if (app.got_subcommand(pe_cmd)) run_pe(pe_args);
    else if (app.got_subcommand(test_cmd)) run_test(test_args, threads);
    else if (app.got_subcommand(outlier_cmd)) run_outlier(outlier_args);
    else if (app.got_subcommand(dataset_cmd)) run_dataset(dataset_args);
    else if (app.got_subcommand(repro_cmd)) run_repro(repro_args, threads);
    return 0;
  } catch (const usage_error& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const rulsif::data_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const rulsif::numerical_error& e) {
    std::cerr << "error: numerical: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 4;
  }
}
