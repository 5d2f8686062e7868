#include "periocular/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "periocular/error.hpp"

namespace periocular {
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader = "subject,sequence,frame,label,roi_path,sequence_labeled";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_manifest(std::span<const ManifestRow> rows, const fs::path& path) {
  auto out = open_for_write(path);
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.subject_id << ',' << r.sequence_id << ',' << r.frame_index << ',' << to_string(r.label) << ','
        << r.roi_path << ',' << (r.sequence_labeled ? 1 : 0) << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError("unexpected manifest header in " + path.string());
  }
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw FormatError("malformed manifest row '" + line + "' in " + path.string());
    ManifestRow r;
    r.subject_id = f[0];
    r.sequence_id = f[1];
    try {
      r.frame_index = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw FormatError("bad frame index in manifest row '" + line + "'");
    }
    r.label = parse_expression(f[3]);
    r.roi_path = f[4];
    r.sequence_labeled = f[5] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json preprocess_fingerprint(const ExperimentConfig& c) {
  return {{"format_version", 1},
          {"dataset_root", fs::absolute(c.dataset_root).lexically_normal().string()},
          {"roi", to_string(c.roi_variant)},
          {"clahe_clip_limit", c.clahe.clip_limit},
          {"clahe_tile", c.clahe.tile},
          {"strict_ingest", c.strict_ingest}};
}

void write_prepared_corpus(const PreparedCorpus& corpus, const ExperimentConfig& config, const fs::path& out_dir) {
  std::vector<ManifestRow> rows;
  rows.reserve(corpus.frames.size());
  for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
    const LabeledFrame& f = corpus.frames[i];
    const fs::path rel = fs::path("rois") / f.subject_id / f.sequence_id / (f.paths.image.stem().string() + ".png");
    save_png(corpus.rois[i], out_dir / rel);
    rows.push_back({f.subject_id, f.sequence_id, f.frame_index, f.label, rel.generic_string(),
                    f.from_labeled_sequence});
  }
  write_manifest(rows, out_dir / "manifest.csv");
  auto out = open_for_write(out_dir / "preprocess.json");
  out << preprocess_fingerprint(config).dump(2) << '\n';
}

bool read_prepared_corpus(const ExperimentConfig& config, const fs::path& out_dir, PreparedCorpus& corpus) {
  const fs::path fingerprint_path = out_dir / "preprocess.json";
  const fs::path manifest_path = out_dir / "manifest.csv";
  if (!fs::is_regular_file(fingerprint_path) || !fs::is_regular_file(manifest_path)) return false;
  nlohmann::json cached;
  try {
    std::ifstream in(fingerprint_path);
    in >> cached;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  if (cached != preprocess_fingerprint(config)) return false;

  PreparedCorpus loaded;
  for (const ManifestRow& r : read_manifest(manifest_path)) {
    LabeledFrame f;
    f.subject_id = r.subject_id;
    f.sequence_id = r.sequence_id;
    f.frame_index = r.frame_index;
    f.label = r.label;
    f.from_labeled_sequence = r.sequence_labeled;
    f.paths.image = out_dir / r.roi_path;
    loaded.rois.push_back(load_image(f.paths.image));
    loaded.frames.push_back(std::move(f));
  }
  corpus = std::move(loaded);
  return true;
}

void write_feature_csv(std::span<const LabeledFrame> frames, std::span<const FeatureVector> features,
                       const fs::path& path) {
  if (features.size() < frames.size()) throw ShapeError("fewer feature vectors than frames");
  auto out = open_for_write(path);
  char buf[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const LabeledFrame& f = frames[i];
    out << f.subject_id << ',' << f.sequence_id << ',' << f.frame_index << ',' << to_string(f.label);
    for (double v : features[i].values) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

nlohmann::json feature_sidecar(const ExperimentConfig& c, std::size_t dims) {
  const RoiSpec spec = c.roi_spec();
  std::vector<std::string> names;
  for (Descriptor d : c.descriptors) names.emplace_back(to_string(d));
  return {{"format_version", 1},
          {"descriptor", c.descriptors.size() == 1 ? to_string(c.descriptors.front()) : to_string(Descriptor::kFused)},
          {"components", names},
          {"dims", dims},
          {"columns", {"subject_id", "sequence_id", "frame_index", "label"}},
          {"roi", {{"variant", to_string(spec.variant)},
                   {"width", spec.width},
                   {"height", spec.height},
                   {"rows_above_eye_line", spec.above},
                   {"rows_below_eye_line", spec.below}}},
          {"block_size", spec.block_size},
          {"clahe", {{"clip_limit", c.clahe.clip_limit}, {"tile", c.clahe.tile}}},
          {"glcm_levels", c.descriptor_params.glcm_levels},
          {"gabor_bank", {{"num_freq", 5}, {"num_orient", 6}, {"f_max", c.descriptor_params.gabor_f_max},
                          {"bandwidth_octaves", 1.0}, {"truncation_sigmas", 3.0}}},
          {"gist_bank", {{"num_freq", 4}, {"num_orient", 8}, {"f_max", c.descriptor_params.gabor_f_max},
                         {"bandwidth_octaves", 1.0}, {"truncation_sigmas", 3.0}}},
          {"gist_prefilter", {{"epsilon", c.descriptor_params.gist.epsilon},
                              {"window_fraction", c.descriptor_params.gist.window_fraction}}}};
}

}  // namespace periocular
