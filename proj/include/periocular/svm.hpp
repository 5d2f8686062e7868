#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace periocular {

/// Dense row-major sample matrix, one sample per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// Appends a row; the first row fixes the column count.
  void push_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-dimension z-scoring fitted on a training set.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // > 0; 1 for (near-)constant dimensions

  std::size_t dims() const { return mean.size(); }
};

Standardizer standardize_fit(const Matrix& x);
std::vector<double> standardize_apply(const Standardizer& s, std::span<const double> x);
Matrix standardize_apply(const Standardizer& s, const Matrix& x);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  int positive_label = 1;
  int negative_label = -1;

  double decision(std::span<const double> x) const;
};

struct SolverOptions {
  double C = 1.0;
  double tol = 1e-4;  // relative duality gap
  std::size_t max_updates = 1'000'000;
  std::uint64_t seed = 0;
};

struct BinaryTrainResult {
  LinearModel model;
  /// Dual objective 0.5|w|^2 - sum(alpha) after each epoch, starting with the
  /// initial point. The solver only ever decreases it.
  std::vector<double> dual_objective_trace;
  double primal_objective = 0.0;
  double duality_gap = 0.0;
  std::size_t updates = 0;
  bool converged = false;
};

/// Soft-margin linear SVM, 0.5|w|^2 + C sum hinge(y (w.x + b)), solved by dual
/// coordinate descent over a seeded random permutation per epoch. The bias is
/// learned as the weight of a constant unit feature. Labels must be +1/-1 and
/// both signs must be present.
BinaryTrainResult train_binary(const Matrix& x, std::span<const int> y, const SolverOptions& options);

/// One-vs-one ensemble; `classes` is sorted ascending and `models` holds the
/// pairs (i, j), i < j, in lexicographic order with classes[i] positive.
struct OvoModel {
  std::vector<int> classes;
  Standardizer standardizer;
  std::vector<LinearModel> models;
};

OvoModel train_ovo(const Matrix& x, std::span<const int> labels, const SolverOptions& options);

struct OvoPrediction {
  int label = 0;
  std::vector<int> votes;           // aligned with OvoModel::classes
  std::vector<double> margin_sums;  // |decision| of the votes each class won
};

/// Majority vote. A zero decision votes for the positive class; ties go to
/// the largest margin sum, then to the earlier class.
OvoPrediction predict_ovo(const OvoModel& model, std::span<const double> x);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const OvoModel& model);
OvoModel ovo_model_from_json(const nlohmann::json& doc);
void save_model(const OvoModel& model, const std::filesystem::path& path);
OvoModel load_model(const std::filesystem::path& path);

}  // namespace periocular
