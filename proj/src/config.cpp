#include "periocular/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "periocular/error.hpp"

namespace periocular {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

ExperimentConfig PipelineConfig::experiment(std::size_t combination) const {
  ExperimentConfig c = base;
  c.descriptors = combinations.at(combination);
  return c;
}

std::vector<std::vector<Descriptor>> parse_combinations(const std::string& value) {
  std::vector<std::vector<Descriptor>> out;
  for (const std::string& combo : split(value, ',')) {
    if (combo.empty()) throw ConfigError("empty descriptor combination in '" + value + "'");
    std::vector<Descriptor> parts;
    for (const std::string& name : split(combo, '+')) parts.push_back(parse_descriptor(name));
    out.push_back(std::move(parts));
  }
  return out;
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  static const std::set<std::string> kKnown{
      "format_version", "dataset_root",   "descriptors",          "roi",           "block_size",
      "clahe_clip_limit", "clahe_tile",   "glcm_levels",          "gabor_f_max",   "gist_epsilon",
      "gist_window_fraction", "svm_c",    "svm_tol",              "svm_max_updates", "seed",
      "jobs",           "strict_ingest"};
  for (const auto& [k, v] : kv) {
    if (!kKnown.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  auto it = kv.find("format_version");
  if (it == kv.end()) throw ConfigError("config is missing format_version");
  if (to_int<int>("format_version", it->second) != kConfigFormatVersion) {
    throw ConfigError("unsupported config format_version " + it->second);
  }

  PipelineConfig cfg;
  ExperimentConfig& b = cfg.base;
  auto get = [&kv](const std::string& key) -> const std::string* {
    auto found = kv.find(key);
    return found == kv.end() ? nullptr : &found->second;
  };

  if (auto v = get("dataset_root")) {
    std::filesystem::path p(*v);
    b.dataset_root = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  } else {
    b.dataset_root = base_dir;
  }
  if (auto v = get("descriptors")) {
    cfg.combinations = parse_combinations(*v);
  } else {
    cfg.combinations = {{Descriptor::kGabor}};
  }
  if (auto v = get("roi")) b.roi_variant = parse_roi_variant(*v);
  if (auto v = get("block_size")) b.block_size = to_int<int>("block_size", *v);
  require(b.block_size == 16 || b.block_size == 32, "block_size must be 16 or 32");
  if (auto v = get("clahe_clip_limit")) b.clahe.clip_limit = to_double("clahe_clip_limit", *v);
  require(b.clahe.clip_limit >= 1.0, "clahe_clip_limit must be >= 1");
  if (auto v = get("clahe_tile")) b.clahe.tile = to_int<int>("clahe_tile", *v);
  require(b.clahe.tile >= 1, "clahe_tile must be positive");
  if (auto v = get("glcm_levels")) b.descriptor_params.glcm_levels = to_int<int>("glcm_levels", *v);
  require(b.descriptor_params.glcm_levels >= 2, "glcm_levels must be >= 2");
  if (auto v = get("gabor_f_max")) b.descriptor_params.gabor_f_max = to_double("gabor_f_max", *v);
  require(b.descriptor_params.gabor_f_max > 0.0 && b.descriptor_params.gabor_f_max <= 0.5,
          "gabor_f_max must lie in (0, 0.5]");
  if (auto v = get("gist_epsilon")) b.descriptor_params.gist.epsilon = to_double("gist_epsilon", *v);
  require(b.descriptor_params.gist.epsilon > 0.0, "gist_epsilon must be positive");
  if (auto v = get("gist_window_fraction")) {
    b.descriptor_params.gist.window_fraction = to_double("gist_window_fraction", *v);
  }
  require(b.descriptor_params.gist.window_fraction > 0.0, "gist_window_fraction must be positive");
  if (auto v = get("svm_c")) b.solver.C = to_double("svm_c", *v);
  require(b.solver.C > 0.0, "svm_c must be positive");
  if (auto v = get("svm_tol")) b.solver.tol = to_double("svm_tol", *v);
  require(b.solver.tol > 0.0, "svm_tol must be positive");
  if (auto v = get("svm_max_updates")) b.solver.max_updates = to_int<std::size_t>("svm_max_updates", *v);
  require(b.solver.max_updates >= 1, "svm_max_updates must be >= 1");
  if (auto v = get("seed")) b.seed = to_int<std::uint64_t>("seed", *v);
  if (auto v = get("jobs")) b.jobs = to_int<int>("jobs", *v);
  require(b.jobs >= 1, "jobs must be >= 1");
  if (auto v = get("strict_ingest")) b.strict_ingest = to_bool("strict_ingest", *v);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace periocular
