#include "periocular/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "periocular/error.hpp"

namespace periocular {
namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool hidden(const fs::path& p) {
  const std::string name = p.filename().string();
  return !name.empty() && name.front() == '.';
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (hidden(entry.path())) continue;
    if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

std::optional<fs::path> find_landmarks(const fs::path& dir, const std::string& stem) {
  for (const std::string& name : {stem + "_landmarks.txt", stem + ".txt"}) {
    const fs::path p = dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

std::optional<fs::path> find_label_file(const fs::path& dir) {
  for (const fs::path& p : sorted_entries(dir, false)) {
    const std::string name = p.filename().string();
    if (name == "label.txt" || (name.size() > 12 && name.ends_with("_emotion.txt"))) return p;
  }
  return std::nullopt;
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context + ": " + e.what());
  }
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", round1(v));
  return buf;
}

}  // namespace

const char* to_string(Expression e) {
  switch (e) {
    case Expression::kNeutral: return "neutral";
    case Expression::kAngry: return "angry";
    case Expression::kContempt: return "contempt";
    case Expression::kDisgust: return "disgust";
    case Expression::kFear: return "fear";
    case Expression::kHappy: return "happy";
    case Expression::kSad: return "sad";
    case Expression::kSurprise: return "surprise";
  }
  return "?";
}

const char* short_name(Expression e) {
  static constexpr const char* kNames[] = {"Neu", "Ang", "Con", "Dis", "Fea", "Hap", "Sad", "Sur"};
  return kNames[static_cast<int>(e)];
}

Expression parse_expression(std::string_view text) {
  const std::string t = lower(trim(text));
  static const std::map<std::string, Expression> kNames{
      {"neutral", Expression::kNeutral},   {"angry", Expression::kAngry},       {"anger", Expression::kAngry},
      {"contempt", Expression::kContempt}, {"disgust", Expression::kDisgust},   {"disgusted", Expression::kDisgust},
      {"fear", Expression::kFear},         {"happy", Expression::kHappy},       {"happiness", Expression::kHappy},
      {"sad", Expression::kSad},           {"sadness", Expression::kSad},       {"surprise", Expression::kSurprise},
      {"surprised", Expression::kSurprise}};
  if (auto it = kNames.find(t); it != kNames.end()) return it->second;

  // CK+ emotion files hold a single number such as "3.0000000e+00".
  std::istringstream in(t);
  double code = 0.0;
  if (in >> code && (in >> std::ws).eof() && code == std::floor(code) && code >= 0.0 && code <= 7.0) {
    return static_cast<Expression>(static_cast<int>(code));
  }
  throw FormatError("unknown expression label '" + std::string(text) + "'");
}

Expression parse_sequence_label(std::string_view text) {
  const Expression e = parse_expression(text);
  if (e == Expression::kNeutral) {
    throw FormatError("'" + std::string(text) + "' is not a sequence label (neutral is implied by the first frame)");
  }
  return e;
}

Dataset ingest_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("dataset root is not a readable directory: " + root.string());
  }
  fs::path image_root = root;
  fs::path landmark_root = root;
  fs::path label_root = root;
  if (fs::is_directory(root / "cohn-kanade-images")) {
    image_root = root / "cohn-kanade-images";
    landmark_root = root / "Landmarks";
    label_root = root / "Emotion";
  }

  Dataset ds;
  for (const fs::path& subject_dir : sorted_entries(image_root, true)) {
    const std::string subject = subject_dir.filename().string();
    for (const fs::path& seq_dir : sorted_entries(subject_dir, true)) {
      Sequence seq;
      seq.subject_id = subject;
      seq.sequence_id = seq_dir.filename().string();
      const fs::path lm_dir = landmark_root / subject / seq.sequence_id;
      std::string problem;
      for (const fs::path& file : sorted_entries(seq_dir, false)) {
        if (!is_image_file(file)) continue;
        const auto lm = find_landmarks(lm_dir, file.stem().string());
        if (!lm) {
          problem = "missing landmark file for frame " + file.string();
          break;
        }
        seq.frames.push_back({file, *lm});
      }
      if (!problem.empty()) {
        ds.rejected.push_back({seq.subject_id, seq.sequence_id, problem});
        continue;
      }
      if (seq.frames.empty()) continue;
      if (const auto label_file = find_label_file(label_root / subject / seq.sequence_id)) {
        std::ifstream in(*label_file);
        if (!in) throw IoError("cannot read label file " + label_file->string());
        std::string line;
        std::getline(in, line);
        try {
          seq.label = parse_sequence_label(line);
        } catch (const FormatError& e) {
          throw FormatError(std::string(e.what()) + " in " + label_file->string());
        }
      }
      ds.sequences.push_back(std::move(seq));
    }
  }
  return ds;
}

std::vector<LabeledFrame> select_frames(const Sequence& seq) {
  std::vector<LabeledFrame> out;
  if (seq.frames.empty()) return out;
  auto make = [&](std::size_t k, Expression label) {
    LabeledFrame f;
    f.subject_id = seq.subject_id;
    f.sequence_id = seq.sequence_id;
    f.frame_index = static_cast<int>(k) + 1;
    f.paths = seq.frames[k];
    f.label = label;
    f.from_labeled_sequence = seq.label.has_value();
    return f;
  };
  out.push_back(make(0, Expression::kNeutral));
  if (!seq.label) return out;
  const std::size_t n = seq.frames.size();
  const std::size_t first = n >= 4 ? n - 3 : 1;
  for (std::size_t k = first; k < n; ++k) out.push_back(make(k, *seq.label));
  return out;
}

std::vector<Fold> loso_folds(std::span<const LabeledFrame> frames) {
  std::set<std::string> folded;
  for (const auto& f : frames) {
    if (f.from_labeled_sequence) folded.insert(f.subject_id);
  }
  std::vector<Fold> folds;
  for (const std::string& subject : folded) {
    Fold fold;
    fold.subject_id = subject;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      (frames[i].subject_id == subject ? fold.test : fold.train).push_back(i);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<Sample> augment_mirror(std::span<const Sample> train) {
  std::vector<Sample> out(train.begin(), train.end());
  out.reserve(2 * train.size());
  for (const Sample& s : train) {
    out.push_back({mirror_horizontal(s.roi), s.label, s.source, !s.mirrored});
  }
  return out;
}

Metrics compute_metrics(const Confusion& confusion) {
  Metrics m;
  std::int64_t total = 0;
  std::int64_t correct = 0;
  double recall_sum = 0.0;
  int counted = 0;
  m.min_acc = 100.0;
  for (int c = 0; c < kExpressionCount; ++c) {
    std::int64_t row = 0;
    for (std::int64_t v : confusion[static_cast<std::size_t>(c)]) row += v;
    const std::int64_t hit = confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    total += row;
    correct += hit;
    if (row == 0) {
      m.warnings.push_back(std::string("class '") + to_string(static_cast<Expression>(c)) +
                           "' has no test samples; excluded from average and minimum accuracy");
      continue;
    }
    const double recall = 100.0 * static_cast<double>(hit) / static_cast<double>(row);
    m.recalls[static_cast<std::size_t>(c)] = recall;
    recall_sum += recall;
    ++counted;
    m.min_acc = std::min(m.min_acc, recall);
  }
  if (counted == 0) {
    m.min_acc = 0.0;
    m.warnings.push_back("confusion matrix is empty");
    return m;
  }
  m.average_acc = recall_sum / counted;
  m.overall_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
  return m;
}

double round1(double percent) { return std::round(percent * 10.0) / 10.0; }

std::string combination_name(std::span<const Descriptor> descriptors) {
  std::string name;
  for (Descriptor d : descriptors) {
    if (!name.empty()) name += '+';
    name += to_string(d);
  }
  return name;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> names;
  for (Descriptor d : c.descriptors) names.emplace_back(to_string(d));
  return {{"dataset_root", c.dataset_root.string()},
          {"descriptors", names},
          {"roi", to_string(c.roi_variant)},
          {"block_size", c.block_size},
          {"clahe_clip_limit", c.clahe.clip_limit},
          {"clahe_tile", c.clahe.tile},
          {"glcm_levels", c.descriptor_params.glcm_levels},
          {"gabor_f_max", c.descriptor_params.gabor_f_max},
          {"gist_epsilon", c.descriptor_params.gist.epsilon},
          {"gist_window_fraction", c.descriptor_params.gist.window_fraction},
          {"svm_c", c.solver.C},
          {"svm_tol", c.solver.tol},
          {"svm_max_updates", c.solver.max_updates},
          {"seed", c.seed},
          {"strict_ingest", c.strict_ingest}};
}

Image prepare_roi(const Image& frame, const LandmarkSet& landmarks, const RoiSpec& spec, const ClaheParams& params) {
  const EyeGeometry geom = compute_eye_geometry(landmarks);
  const NormalizedFrame normalized = normalize_geometry(frame, geom);
  const Image roi = extract_roi(normalized.image, normalized.geometry, spec);
  return quantize_to_8bit(clahe(roi, params));
}

PreparedCorpus prepare_corpus(const ExperimentConfig& config, const LogFn& log) {
  const Dataset ds = ingest_dataset(config.dataset_root);
  for (const auto& r : ds.rejected) {
    if (log) log("rejected " + r.subject_id + "/" + r.sequence_id + ": " + r.reason);
  }
  if (config.strict_ingest && !ds.rejected.empty()) {
    throw DataError(ds.rejected.front().reason);
  }
  PreparedCorpus corpus;
  for (const Sequence& seq : ds.sequences) {
    auto frames = select_frames(seq);
    corpus.frames.insert(corpus.frames.end(), frames.begin(), frames.end());
  }
  if (log) {
    log("ingested " + std::to_string(ds.sequences.size()) + " sequences, " + std::to_string(corpus.frames.size()) +
        " selected frames");
  }
  const RoiSpec spec = config.roi_spec();
  corpus.rois.resize(corpus.frames.size());
  detail::parallel_for(corpus.frames.size(), config.jobs, [&](std::size_t i) {
    const LabeledFrame& f = corpus.frames[i];
    try {
      corpus.rois[i] = prepare_roi(load_image(f.paths.image), load_landmarks(f.paths.landmarks), spec, config.clahe);
    } catch (...) {
      rethrow_with_context("frame " + f.paths.image.string());
    }
  });
  return corpus;
}

std::vector<FeatureVector> compute_features(std::span<const Image> rois, Descriptor descriptor, const RoiSpec& spec,
                                            const FeatureExtractor& extractor, int jobs) {
  std::vector<Sample> samples;
  samples.reserve(rois.size());
  for (std::size_t i = 0; i < rois.size(); ++i) samples.push_back({rois[i], Expression::kNeutral, i, false});
  const std::vector<Sample> augmented = augment_mirror(samples);
  std::vector<FeatureVector> out(augmented.size());
  detail::parallel_for(augmented.size(), jobs,
                       [&](std::size_t i) { out[i] = extractor.extract(augmented[i].roi, descriptor, spec); });
  return out;
}

ExperimentReport evaluate_features(const ExperimentConfig& config, std::span<const LabeledFrame> frames,
                                   std::span<const std::vector<FeatureVector>* const> features, const LogFn& log) {
  if (features.empty()) {
    throw ArgumentError("no feature tables for the combination");
  }
  const std::size_t n = frames.size();
  for (const auto* table : features) {
    if (table->size() != 2 * n) throw ShapeError("feature table does not cover every frame and its mirror");
  }
  auto row_of = [&](std::size_t k) {
    std::vector<FeatureVector> parts;
    parts.reserve(features.size());
    for (const auto* table : features) parts.push_back((*table)[k]);
    return fuse(parts).values;
  };

  ExperimentReport report;
  report.config = config;
  report.combination = combination_name(config.descriptors);
  for (const auto* table : features) report.feature_dims += table->empty() ? 0 : table->front().dims();

  const std::vector<Fold> folds = loso_folds(frames);
  std::vector<std::vector<PredictionRecord>> fold_predictions(folds.size());
  report.folds.resize(folds.size());

  detail::parallel_for(folds.size(), config.jobs, [&](std::size_t f) {
    const Fold& fold = folds[f];
    try {
      for (std::size_t i : fold.train) {
        if (frames[i].subject_id == fold.subject_id) throw Error("test subject leaked into training");
      }
      Matrix x;
      std::vector<int> y;
      for (std::size_t pass = 0; pass < 2; ++pass) {
        for (std::size_t i : fold.train) {
          x.push_row(row_of(pass * n + i));
          y.push_back(static_cast<int>(frames[i].label));
        }
      }
      SolverOptions opts = config.solver;
      opts.seed = config.seed;
      const OvoModel model = train_ovo(x, y, opts);

      FoldSummary& summary = report.folds[f];
      summary.subject_id = fold.subject_id;
      summary.train_size = x.rows();
      summary.test_size = fold.test.size();
      for (std::size_t i : fold.test) {
        const OvoPrediction p = predict_ovo(model, row_of(i));
        PredictionRecord rec;
        rec.subject_id = frames[i].subject_id;
        rec.sequence_id = frames[i].sequence_id;
        rec.frame_index = frames[i].frame_index;
        rec.truth = frames[i].label;
        rec.predicted = static_cast<Expression>(p.label);
        for (std::size_t k = 0; k < model.classes.size(); ++k) {
          rec.votes[static_cast<std::size_t>(model.classes[k])] = p.votes[k];
        }
        if (rec.truth == rec.predicted) ++summary.correct;
        fold_predictions[f].push_back(std::move(rec));
      }
    } catch (...) {
      rethrow_with_context("fold " + fold.subject_id);
    }
  });

  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (log) {
      const auto& s = report.folds[f];
      log("fold " + s.subject_id + ": train " + std::to_string(s.train_size) + ", test " +
          std::to_string(s.test_size) + ", correct " + std::to_string(s.correct));
    }
    for (auto& rec : fold_predictions[f]) report.predictions.push_back(std::move(rec));
  }
  report.confusion = confusion_from_predictions(report.predictions);
  report.metrics = compute_metrics(report.confusion);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const LogFn& log) {
  if (config.descriptors.empty()) {
    throw ConfigError("no descriptor selected");
  }
  const PreparedCorpus corpus = prepare_corpus(config, log);
  const FeatureExtractor extractor(config.descriptor_params);
  const RoiSpec spec = config.roi_spec();
  std::vector<std::vector<FeatureVector>> tables;
  for (Descriptor d : config.descriptors) {
    tables.push_back(compute_features(corpus.rois, d, spec, extractor, config.jobs));
  }
  std::vector<const std::vector<FeatureVector>*> refs;
  for (const auto& t : tables) refs.push_back(&t);
  return evaluate_features(config, corpus.frames, refs, log);
}

Confusion confusion_from_predictions(std::span<const PredictionRecord> predictions) {
  Confusion c{};
  for (const auto& p : predictions) {
    c[static_cast<std::size_t>(p.truth)][static_cast<std::size_t>(p.predicted)] += 1;
  }
  return c;
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["combination"] = report.combination;
  doc["config"] = to_json(report.config);
  doc["feature_dims"] = report.feature_dims;

  std::vector<std::string> classes;
  for (Expression e : kAllExpressions) classes.emplace_back(to_string(e));
  doc["classes"] = classes;
  doc["confusion"] = report.confusion;

  nlohmann::json metrics;
  metrics["average_acc"] = report.metrics.average_acc;
  metrics["overall_acc"] = report.metrics.overall_acc;
  metrics["min_acc"] = report.metrics.min_acc;
  metrics["rounded"] = {{"average_acc", round1(report.metrics.average_acc)},
                        {"overall_acc", round1(report.metrics.overall_acc)},
                        {"min_acc", round1(report.metrics.min_acc)}};
  nlohmann::json recalls;
  for (Expression e : kAllExpressions) {
    const auto& r = report.metrics.recalls[static_cast<std::size_t>(e)];
    recalls[to_string(e)] = r ? nlohmann::json(*r) : nlohmann::json(nullptr);
  }
  metrics["recalls"] = recalls;
  metrics["warnings"] = report.metrics.warnings;
  doc["metrics"] = metrics;

  auto& folds = doc["folds"] = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back(
        {{"subject", f.subject_id}, {"train_size", f.train_size}, {"test_size", f.test_size}, {"correct", f.correct}});
  }
  auto& preds = doc["predictions"] = nlohmann::json::array();
  for (const auto& p : report.predictions) {
    preds.push_back({{"subject", p.subject_id},
                     {"sequence", p.sequence_id},
                     {"frame", p.frame_index},
                     {"true", to_string(p.truth)},
                     {"predicted", to_string(p.predicted)},
                     {"votes", p.votes}});
  }
  return doc;
}

std::vector<PredictionRecord> predictions_from_json(const nlohmann::json& report) {
  std::vector<PredictionRecord> out;
  try {
    for (const auto& p : report.at("predictions")) {
      PredictionRecord rec;
      rec.subject_id = p.at("subject").get<std::string>();
      rec.sequence_id = p.at("sequence").get<std::string>();
      rec.frame_index = p.at("frame").get<int>();
      rec.truth = parse_expression(p.at("true").get<std::string>());
      rec.predicted = parse_expression(p.at("predicted").get<std::string>());
      rec.votes = p.at("votes").get<std::array<int, kExpressionCount>>();
      out.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return out;
}

std::string format_report_table(const ExperimentReport& report) {
  std::ostringstream out;
  const auto& c = report.config;
  out << report.combination << " (" << to_string(c.roi_variant) << " periocular region, " << c.block_size << "x"
      << c.block_size << " blocks)\n\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %-14s %-14s\n", "Average Acc.", "Overall Acc.", "Min Acc.");
  out << line;
  std::snprintf(line, sizeof(line), "%-14s %-14s %-14s\n\n", format_percent(report.metrics.average_acc).c_str(),
                format_percent(report.metrics.overall_acc).c_str(), format_percent(report.metrics.min_acc).c_str());
  out << line;

  out << "Per-class accuracy (rows: true class, % of row)\n";
  std::snprintf(line, sizeof(line), "%-10s", "");
  out << line;
  for (Expression e : kAllExpressions) {
    std::snprintf(line, sizeof(line), "%7s", short_name(e));
    out << line;
  }
  out << '\n';
  for (Expression t : kAllExpressions) {
    const auto& row = report.confusion[static_cast<std::size_t>(t)];
    std::int64_t total = 0;
    for (auto v : row) total += v;
    std::string name = to_string(t);
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::snprintf(line, sizeof(line), "%-10s", name.c_str());
    out << line;
    for (Expression p : kAllExpressions) {
      if (total == 0) {
        std::snprintf(line, sizeof(line), "%7s", "-");
      } else {
        std::snprintf(line, sizeof(line), "%7.1f",
                      round1(100.0 * static_cast<double>(row[static_cast<std::size_t>(p)]) / static_cast<double>(total)));
      }
      out << line;
    }
    out << '\n';
  }
  for (const auto& w : report.metrics.warnings) out << "warning: " << w << '\n';
  return out.str();
}

void write_report_json(const ExperimentReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

void write_report_text(const ExperimentReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_report_table(report);
}

void write_predictions_csv(const ExperimentReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "subject,sequence,frame,true,predicted";
  for (Expression e : kAllExpressions) out << ",votes_" << to_string(e);
  out << '\n';
  for (const auto& p : report.predictions) {
    out << p.subject_id << ',' << p.sequence_id << ',' << p.frame_index << ',' << to_string(p.truth) << ','
        << to_string(p.predicted);
    for (int v : p.votes) out << ',' << v;
    out << '\n';
  }
}

std::string format_summary_table(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof(line), "%-26s %-10s %-10s %-10s\n", "Feature", "Average", "Overall", "Min");
  out << line;
  std::snprintf(line, sizeof(line), "%-26s %-10s %-10s %-10s\n", "", "Acc.", "Acc.", "Acc.");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-26s %-10s %-10s %-10s\n", r.combination.c_str(),
                  format_percent(r.metrics.average_acc).c_str(), format_percent(r.metrics.overall_acc).c_str(),
                  format_percent(r.metrics.min_acc).c_str());
    out << line;
  }
  return out.str();
}

nlohmann::json summary_json(std::span<const SummaryRow> rows) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  auto& arr = doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"combination", r.combination},
                   {"average_acc", r.metrics.average_acc},
                   {"overall_acc", r.metrics.overall_acc},
                   {"min_acc", r.metrics.min_acc}});
  }
  return doc;
}

}  // namespace periocular
