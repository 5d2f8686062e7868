#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "periocular/descriptors.hpp"
#include "periocular/image.hpp"
#include "periocular/imgproc.hpp"
#include "periocular/svm.hpp"

namespace periocular {

// Order used for confusion matrices and reports.
enum class Expression { kNeutral, kAngry, kContempt, kDisgust, kFear, kHappy, kSad, kSurprise };
inline constexpr int kExpressionCount = 8;
inline constexpr std::array<Expression, kExpressionCount> kAllExpressions{
    Expression::kNeutral, Expression::kAngry, Expression::kContempt, Expression::kDisgust,
    Expression::kFear,    Expression::kHappy, Expression::kSad,      Expression::kSurprise};

const char* to_string(Expression e);
const char* short_name(Expression e);  // "Neu", "Ang", ...
/// Accepts the names above case-insensitively, common synonyms ("anger",
/// "sadness", ...) and the CK+ numeric codes. Throws FormatError otherwise.
Expression parse_expression(std::string_view text);
/// Like parse_expression but only for the seven sequence labels.
Expression parse_sequence_label(std::string_view text);

// ---------------------------------------------------------------------------
// Dataset

struct FramePaths {
  std::filesystem::path image;
  std::filesystem::path landmarks;
};

struct Sequence {
  std::string subject_id;
  std::string sequence_id;
  std::vector<FramePaths> frames;  // sorted by image filename
  std::optional<Expression> label;
};

struct RejectedSequence {
  std::string subject_id;
  std::string sequence_id;
  std::string reason;
};

struct Dataset {
  std::vector<Sequence> sequences;  // sorted by (subject, sequence)
  std::vector<RejectedSequence> rejected;
};

/// Reads root/<subject>/<sequence>/ folders holding frame images
/// (.png/.jpg/.jpeg), a landmark file per frame (<stem>_landmarks.txt or
/// <stem>.txt) and an optional one-line label file (label.txt or
/// *_emotion.txt). When root contains the CK+ trees cohn-kanade-images/,
/// Landmarks/ and Emotion/, those are read instead. A sequence with a frame
/// lacking landmarks is moved to `rejected`.
Dataset ingest_dataset(const std::filesystem::path& root);

struct LabeledFrame {
  std::string subject_id;
  std::string sequence_id;
  int frame_index = 0;  // 1-based position in the sequence
  FramePaths paths;
  Expression label = Expression::kNeutral;
  bool from_labeled_sequence = false;
};

/// First frame as neutral; the last three (or, for short sequences, all but
/// the first) frames of a labeled sequence with its label.
std::vector<LabeledFrame> select_frames(const Sequence& seq);

struct Fold {
  std::string subject_id;
  std::vector<std::size_t> train;  // indices into the frame list
  std::vector<std::size_t> test;
};

/// One fold per subject with a labeled sequence, ordered by subject id.
/// Subjects with unlabeled sequences only are always in training.
std::vector<Fold> loso_folds(std::span<const LabeledFrame> frames);

struct Sample {
  Image roi;
  Expression label = Expression::kNeutral;
  std::size_t source = 0;
  bool mirrored = false;
};

/// The input followed by the horizontal mirror of each input sample.
std::vector<Sample> augment_mirror(std::span<const Sample> train);

// ---------------------------------------------------------------------------
// Metrics

using Confusion = std::array<std::array<std::int64_t, kExpressionCount>, kExpressionCount>;  // [true][predicted]

struct Metrics {
  double average_acc = 0.0;  // percent
  double overall_acc = 0.0;
  double min_acc = 0.0;
  std::array<std::optional<double>, kExpressionCount> recalls;  // percent; empty rows excluded
  std::vector<std::string> warnings;
};

Metrics compute_metrics(const Confusion& confusion);

/// Rounds a percentage to one decimal, as the report tables print it.
double round1(double percent);

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  std::filesystem::path dataset_root;
  std::vector<Descriptor> descriptors{Descriptor::kGabor};  // more than one means fused
  RoiVariant roi_variant = RoiVariant::kLarge;
  int block_size = 16;
  ClaheParams clahe;
  DescriptorParams descriptor_params;
  SolverOptions solver;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict_ingest = true;

  RoiSpec roi_spec() const { return RoiSpec::make(roi_variant, block_size); }
};

std::string combination_name(std::span<const Descriptor> descriptors);

nlohmann::json to_json(const ExperimentConfig& config);

/// Geometric normalization, ROI crop, CLAHE and rounding to integer gray
/// levels for one frame.
Image prepare_roi(const Image& frame, const LandmarkSet& landmarks, const RoiSpec& spec, const ClaheParams& clahe);

struct PreparedCorpus {
  std::vector<LabeledFrame> frames;
  std::vector<Image> rois;  // aligned with frames
};

using LogFn = std::function<void(const std::string&)>;

/// Ingest, frame selection and ROI preparation. Errors carry the frame path.
PreparedCorpus prepare_corpus(const ExperimentConfig& config, const LogFn& log = {});

/// Features of every ROI followed by those of every mirrored ROI, computed
/// through augment_mirror so entry i + n is the mirror of entry i.
std::vector<FeatureVector> compute_features(std::span<const Image> rois, Descriptor descriptor, const RoiSpec& spec,
                                            const FeatureExtractor& extractor, int jobs = 1);

struct PredictionRecord {
  std::string subject_id;
  std::string sequence_id;
  int frame_index = 0;
  Expression truth = Expression::kNeutral;
  Expression predicted = Expression::kNeutral;
  std::array<int, kExpressionCount> votes{};
};

struct FoldSummary {
  std::string subject_id;
  std::size_t train_size = 0;  // after mirror augmentation
  std::size_t test_size = 0;
  std::size_t correct = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string combination;
  std::size_t feature_dims = 0;
  std::vector<FoldSummary> folds;
  std::vector<PredictionRecord> predictions;  // in fold order
  Confusion confusion{};
  Metrics metrics;
};

/// LOSO evaluation over precomputed features. `features[k]` holds one table
/// per descriptor of the combination, laid out as compute_features returns.
ExperimentReport evaluate_features(const ExperimentConfig& config, std::span<const LabeledFrame> frames,
                                   std::span<const std::vector<FeatureVector>* const> features, const LogFn& log = {});

/// The whole pipeline for one descriptor combination.
ExperimentReport run_experiment(const ExperimentConfig& config, const LogFn& log = {});

Confusion confusion_from_predictions(std::span<const PredictionRecord> predictions);

// Report files.
nlohmann::json to_json(const ExperimentReport& report);
std::string format_report_table(const ExperimentReport& report);
void write_report_json(const ExperimentReport& report, const std::filesystem::path& path);
void write_report_text(const ExperimentReport& report, const std::filesystem::path& path);
void write_predictions_csv(const ExperimentReport& report, const std::filesystem::path& path);

struct SummaryRow {
  std::string combination;
  Metrics metrics;
};
std::string format_summary_table(std::span<const SummaryRow> rows);
nlohmann::json summary_json(std::span<const SummaryRow> rows);

/// Predictions from a report JSON, for recomputing its metrics.
std::vector<PredictionRecord> predictions_from_json(const nlohmann::json& report);

}  // namespace periocular
