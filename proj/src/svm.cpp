#include "periocular/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "periocular/error.hpp"

namespace periocular {
namespace {

constexpr double kConstantDimension = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::uint64_t pair_seed(std::uint64_t seed, std::size_t pair) {
  // splitmix64 step so neighbouring pairs get unrelated streams.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (pair + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw ShapeError("row has " + std::to_string(values.size()) + " values, matrix has " +
                     std::to_string(cols_) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) + " dims, model expects " +
                     std::to_string(weights.size()));
  }
  return dot(weights, x) + bias;
}

Standardizer standardize_fit(const Matrix& x) {
  if (x.rows() == 0) {
    throw ArgumentError("cannot fit a standardizer on an empty set");
  }
  const std::size_t d = x.cols();
  const auto n = static_cast<double>(x.rows());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = row[c] - s.mean[c];
      s.scale[c] += dv * dv;
    }
  }
  for (double& sc : s.scale) {
    sc = std::sqrt(sc / n);
    if (sc < kConstantDimension) sc = 1.0;
  }
  return s;
}

std::vector<double> standardize_apply(const Standardizer& s, std::span<const double> x) {
  if (x.size() != s.dims()) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) + " dims, standardizer expects " +
                     std::to_string(s.dims()));
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    out[c] = (x[c] - s.mean[c]) / s.scale[c];
  }
  return out;
}

Matrix standardize_apply(const Standardizer& s, const Matrix& x) {
  if (x.cols() != s.dims()) {
    throw ShapeError("matrix has " + std::to_string(x.cols()) + " columns, standardizer expects " +
                     std::to_string(s.dims()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      dst[c] = (src[c] - s.mean[c]) / s.scale[c];
    }
  }
  return out;
}

BinaryTrainResult train_binary(const Matrix& x, std::span<const int> y, const SolverOptions& options) {
  if (!(options.C > 0.0) || !(options.tol > 0.0)) {
    throw ArgumentError("SVM needs C > 0 and tol > 0");
  }
  if (x.rows() != y.size()) {
    throw ShapeError("label count does not match sample count");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) {
      has_pos = true;
    } else if (label == -1) {
      has_neg = true;
    } else {
      throw ArgumentError("binary labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) {
    throw TrainingError("degenerate training set: only one class present");
  }

  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double c_reg = options.C;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> q_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    q_diag[i] = dot(x.row(i), x.row(i)) + 1.0;
  }

  auto margin = [&](std::size_t i) { return dot(w, x.row(i)) + b; };
  auto dual_objective = [&]() {
    return 0.5 * (dot(w, w) + b * b) - std::accumulate(alpha.begin(), alpha.end(), 0.0);
  };
  auto primal_objective = [&]() {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss += std::max(0.0, 1.0 - y[i] * margin(i));
    }
    return 0.5 * (dot(w, w) + b * b) + c_reg * loss;
  };

  BinaryTrainResult result;
  result.dual_objective_trace.push_back(dual_objective());

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  while (result.updates < options.max_updates) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    for (std::size_t k = 0; k < n && result.updates < options.max_updates; ++k, ++result.updates) {
      const std::size_t i = order[k];
      const double yi = y[i];
      const double grad = yi * margin(i) - 1.0;
      const double updated = std::clamp(alpha[i] - grad / q_diag[i], 0.0, c_reg);
      const double delta = (updated - alpha[i]) * yi;
      if (delta == 0.0) continue;
      alpha[i] = updated;
      const auto row = x.row(i);
      for (std::size_t c = 0; c < d; ++c) w[c] += delta * row[c];
      b += delta;
    }
    const double dual = dual_objective();
    result.dual_objective_trace.push_back(dual);
    result.primal_objective = primal_objective();
    result.duality_gap = result.primal_objective + dual;
    if (result.duality_gap <= options.tol * std::max(1.0, std::abs(result.primal_objective))) {
      result.converged = true;
      break;
    }
  }
  result.model.weights = std::move(w);
  result.model.bias = b;
  return result;
}

OvoModel train_ovo(const Matrix& x, std::span<const int> labels, const SolverOptions& options) {
  if (x.rows() != labels.size()) {
    throw ShapeError("label count does not match sample count");
  }
  OvoModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) {
    throw TrainingError("degenerate training set: fewer than two classes");
  }
  model.standardizer = standardize_fit(x);
  const Matrix z = standardize_apply(model.standardizer, x);

  std::size_t pair = 0;
  for (std::size_t i = 0; i < model.classes.size(); ++i) {
    for (std::size_t j = i + 1; j < model.classes.size(); ++j, ++pair) {
      const int pos = model.classes[i];
      const int neg = model.classes[j];
      Matrix subset;
      std::vector<int> y;
      for (std::size_t r = 0; r < z.rows(); ++r) {
        if (labels[r] == pos || labels[r] == neg) {
          subset.push_row(z.row(r));
          y.push_back(labels[r] == pos ? 1 : -1);
        }
      }
      SolverOptions opts = options;
      opts.seed = pair_seed(options.seed, pair);
      LinearModel m = train_binary(subset, y, opts).model;
      m.positive_label = pos;
      m.negative_label = neg;
      model.models.push_back(std::move(m));
    }
  }
  return model;
}

OvoPrediction predict_ovo(const OvoModel& model, std::span<const double> x) {
  const std::vector<double> z = standardize_apply(model.standardizer, x);
  std::map<int, std::size_t> slot;
  for (std::size_t k = 0; k < model.classes.size(); ++k) slot[model.classes[k]] = k;

  OvoPrediction p;
  p.votes.assign(model.classes.size(), 0);
  p.margin_sums.assign(model.classes.size(), 0.0);
  for (const LinearModel& m : model.models) {
    const double dv = m.decision(z);
    const std::size_t winner = slot.at(dv >= 0.0 ? m.positive_label : m.negative_label);
    p.votes[winner] += 1;
    p.margin_sums[winner] += std::abs(dv);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < model.classes.size(); ++k) {
    if (p.votes[k] > p.votes[best] || (p.votes[k] == p.votes[best] && p.margin_sums[k] > p.margin_sums[best])) {
      best = k;
    }
  }
  p.label = model.classes[best];
  return p;
}

nlohmann::json to_json(const OvoModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["classes"] = model.classes;
  doc["standardizer"] = {{"mean", model.standardizer.mean}, {"scale", model.standardizer.scale}};
  auto& pairs = doc["pairs"] = nlohmann::json::array();
  for (const LinearModel& m : model.models) {
    pairs.push_back({{"positive", m.positive_label},
                     {"negative", m.negative_label},
                     {"bias", m.bias},
                     {"weights", m.weights}});
  }
  return doc;
}

OvoModel ovo_model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw FormatError("unsupported model format version");
    }
    OvoModel model;
    model.classes = doc.at("classes").get<std::vector<int>>();
    model.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
    model.standardizer.scale = doc.at("standardizer").at("scale").get<std::vector<double>>();
    for (const auto& p : doc.at("pairs")) {
      LinearModel m;
      m.positive_label = p.at("positive").get<int>();
      m.negative_label = p.at("negative").get<int>();
      m.bias = p.at("bias").get<double>();
      m.weights = p.at("weights").get<std::vector<double>>();
      if (m.weights.size() != model.standardizer.dims()) {
        throw FormatError("model weight length does not match standardizer");
      }
      model.models.push_back(std::move(m));
    }
    const std::size_t n = model.classes.size();
    if (model.models.size() != n * (n - 1) / 2 || model.standardizer.scale.size() != model.standardizer.dims()) {
      throw FormatError("inconsistent model document");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const OvoModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path.string());
  out << to_json(model).dump(1) << '\n';
}

OvoModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read model: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed model file " + path.string() + ": " + e.what());
  }
  return ovo_model_from_json(doc);
}

}  // namespace periocular
