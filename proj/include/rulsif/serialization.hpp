#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "rulsif/estimator.hpp"
#include "rulsif/types.hpp"

namespace rulsif {

using Json = nlohmann::ordered_json;

// Model document: {alpha, sigma, lambda, centers, theta, seed, cv_entries}
// with centers as {dim, data(row-major)}. Doubles round-trip exactly, so a
// reloaded model predicts bit-identically.

inline Json model_to_json(const RulsifModel& model) {
  Json doc;
  doc["alpha"] = model.alpha;
  doc["sigma"] = model.kernel.width;
  doc["lambda"] = model.lambda;
  Json centers;
  centers["dim"] = model.kernel.centers.dim();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(model.kernel.centers.size() *
                                        model.kernel.centers.dim()));
  for (Index i = 0; i < model.kernel.centers.size(); ++i) {
    for (Index j = 0; j < model.kernel.centers.dim(); ++j) {
      flat.push_back(model.kernel.centers.data()(i, j));
    }
  }
  centers["data"] = flat;
  doc["centers"] = centers;
  doc["theta"] = std::vector<double>(model.theta.begin(), model.theta.end());
  doc["seed"] = model.seed;
  Json entries = Json::array();
  if (model.provenance) {
    for (const auto& e : model.provenance->entries) {
      entries.push_back({{"sigma", e.sigma}, {"lambda", e.lambda}, {"cv_score", e.cv_score}});
    }
  }
  doc["cv_entries"] = entries;
  return doc;
}

inline RulsifModel model_from_json(const Json& doc) {
  try {
    RulsifModel model;
    model.alpha = doc.at("alpha").get<double>();
    model.lambda = doc.at("lambda").get<double>();
    model.seed = doc.at("seed").get<std::uint64_t>();

    const auto& centers = doc.at("centers");
    const Index dim = centers.at("dim").get<Index>();
    const auto flat = centers.at("data").get<std::vector<double>>();
    if (dim <= 0 || flat.size() % static_cast<std::size_t>(dim) != 0) {
      throw data_error("model: malformed centers block");
    }
    const Index count = static_cast<Index>(flat.size()) / dim;
    Matrix rows(count, dim);
    for (Index i = 0; i < count; ++i) {
      for (Index j = 0; j < dim; ++j) {
        rows(i, j) = flat[static_cast<std::size_t>(i * dim + j)];
      }
    }
    model.kernel = KernelSpec(doc.at("sigma").get<double>(), SampleSet(std::move(rows)));

    const auto theta = doc.at("theta").get<std::vector<double>>();
    if (static_cast<Index>(theta.size()) != count) {
      throw data_error("model: theta length does not match centers");
    }
    model.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size()));

    const auto& entries = doc.at("cv_entries");
    if (!entries.empty()) {
      CvReport report;
      for (const auto& e : entries) {
        report.entries.push_back({e.at("sigma").get<double>(), e.at("lambda").get<double>(),
                                  e.at("cv_score").get<double>()});
      }
      report.selected_sigma = model.kernel.width;
      report.selected_lambda = model.lambda;
      model.provenance = std::move(report);
    }
    return model;
  } catch (const Json::exception& e) {
    throw data_error(std::string("model: ") + e.what());
  }
}

inline void save_model(const RulsifModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(path + ": cannot open for writing");
  out << model_to_json(model).dump() << '\n';
}

inline RulsifModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::exception& e) {
    throw data_error(path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace rulsif
