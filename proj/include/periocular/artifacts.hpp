#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "periocular/eval.hpp"

namespace periocular {

// Stage hand-off files written by the CLI.

struct ManifestRow {
  std::string subject_id;
  std::string sequence_id;
  int frame_index = 0;
  Expression label = Expression::kNeutral;
  std::string roi_path;  // relative to the manifest's directory
  bool sequence_labeled = false;
};

void write_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& path);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// The settings a prepared ROI depends on; a cached manifest is reused only
/// when this matches.
nlohmann::json preprocess_fingerprint(const ExperimentConfig& config);

/// Writes ROIs, manifest.csv and preprocess.json under `out_dir`.
void write_prepared_corpus(const PreparedCorpus& corpus, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

/// Loads the corpus cached under `out_dir` if its fingerprint matches
/// `config`; returns false otherwise.
bool read_prepared_corpus(const ExperimentConfig& config, const std::filesystem::path& out_dir, PreparedCorpus& corpus);

/// One row per image: subject_id, sequence_id, frame_index, label, then the
/// feature values with 9 significant digits.
void write_feature_csv(std::span<const LabeledFrame> frames, std::span<const FeatureVector> features,
                       const std::filesystem::path& path);

/// Descriptor, ROI, block size and every bank/CLAHE constant behind a
/// feature CSV.
nlohmann::json feature_sidecar(const ExperimentConfig& config, std::size_t dims);

}  // namespace periocular
