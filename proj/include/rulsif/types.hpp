#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rulsif {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical failure (singular system, degenerate geometry, non-convergence).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed external data (CSV shape/content problems).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An ordered collection of d-dimensional real vectors, one per row.
/// All entries are finite; dimensionality is uniform by construction.
class SampleSet {
 public:
  SampleSet() : data_(0, 0) {}

  explicit SampleSet(Matrix rows) : data_(std::move(rows)) {
    if (!data_.allFinite()) {
      throw std::invalid_argument("SampleSet: all entries must be finite");
    }
  }

  static SampleSet from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return SampleSet();
    const Index dim = static_cast<Index>(rows.front().size());
    Matrix m(static_cast<Index>(rows.size()), dim);
    for (Index i = 0; i < m.rows(); ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != dim) {
        throw std::invalid_argument("SampleSet: ragged rows");
      }
      for (Index j = 0; j < dim; ++j) {
        m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    return SampleSet(std::move(m));
  }

  Index size() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }
  bool empty() const { return size() == 0; }
  const Matrix& data() const { return data_; }

  auto row(Index i) const { return data_.row(i); }

  SampleSet rows(const std::vector<Index>& indices) const {
    Matrix out(static_cast<Index>(indices.size()), dim());
    for (Index i = 0; i < out.rows(); ++i) {
      out.row(i) = data_.row(indices[static_cast<std::size_t>(i)]);
    }
    return SampleSet(std::move(out));
  }

  SampleSet middle_rows(Index start, Index count) const {
    return SampleSet(data_.middleRows(start, count));
  }

 private:
  Matrix data_;
};

inline SampleSet concat(const SampleSet& a, const SampleSet& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("concat: dimension mismatch");
  }
  Matrix m(a.size() + b.size(), a.dim());
  m.topRows(a.size()) = a.data();
  m.bottomRows(b.size()) = b.data();
  return SampleSet(std::move(m));
}

/// Inputs paired with scalar regression targets.
struct LabeledSet {
  SampleSet inputs;
  Vector targets;

  LabeledSet() = default;
  LabeledSet(SampleSet in, Vector t) : inputs(std::move(in)), targets(std::move(t)) {
    if (inputs.size() != targets.size()) {
      throw std::invalid_argument("LabeledSet: inputs/targets length mismatch");
    }
    if (!targets.allFinite()) {
      throw std::invalid_argument("LabeledSet: targets must be finite");
    }
  }

  Index size() const { return inputs.size(); }
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace rulsif
