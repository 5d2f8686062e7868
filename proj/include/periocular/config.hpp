#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "periocular/eval.hpp"

namespace periocular {

inline constexpr int kConfigFormatVersion = 1;

/// Contents of a pipeline config file: shared settings plus the descriptor
/// combinations to evaluate.
///
/// The file is plain "key = value" text; '#' starts a comment. Keys:
///
///   format_version        required, must be 1
///   dataset_root          path, relative to the config file's directory
///   descriptors           comma-separated combinations; '+' fuses, e.g.
///                         "GABOR, GIST, LBP+HOG+GLCM"
///   roi                   small | large                       (large)
///   block_size            16 | 32                             (16)
///   clahe_clip_limit      >= 1                                (2.0)
///   clahe_tile            pixels                              (32)
///   glcm_levels           >= 2                                (8)
///   gabor_f_max           (0, 0.5]                            (0.25)
///   gist_epsilon          > 0                                 (0.01)
///   gist_window_fraction  > 0                                 (0.25)
///   svm_c                 > 0                                 (1.0)
///   svm_tol               > 0                                 (1e-4)
///   svm_max_updates       >= 1                                (1000000)
///   seed                  unsigned 64-bit                     (0)
///   jobs                  >= 1                                (1)
///   strict_ingest         true | false                        (true)
struct PipelineConfig {
  ExperimentConfig base;  // `descriptors` unused; see combinations
  std::vector<std::vector<Descriptor>> combinations;

  ExperimentConfig experiment(std::size_t combination) const;
};

/// Throws ConfigError on unknown keys, bad values or a missing version.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

std::vector<std::vector<Descriptor>> parse_combinations(const std::string& value);

}  // namespace periocular
