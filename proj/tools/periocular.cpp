// Batch driver: preprocess, extract, evaluate, report.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "periocular/artifacts.hpp"
#include "periocular/config.hpp"
#include "periocular/error.hpp"
#include "periocular/eval.hpp"

namespace fs = std::filesystem;
using namespace periocular;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kInternalError = 4 };

struct Options {
  std::string command;
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool verbose = false;
};

LogFn make_logger(bool verbose) {
  if (!verbose) return {};
  return [](const std::string& msg) { std::clog << "[periocular] " << msg << '\n'; };
}

PipelineConfig resolve_config(const Options& opt) {
  PipelineConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.base.seed = *opt.seed;
  if (opt.jobs) {
    if (*opt.jobs < 1) throw ConfigError("--jobs must be >= 1");
    cfg.base.jobs = *opt.jobs;
  }
  return cfg;
}

// File-safe name of a combination, e.g. "LBP+HOG+GLCM" -> "LBP_HOG_GLCM".
std::string file_stem(const std::string& combination) {
  std::string s = combination;
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

PreparedCorpus load_or_prepare(const PipelineConfig& cfg, const fs::path& out, const LogFn& log) {
  PreparedCorpus corpus;
  if (read_prepared_corpus(cfg.base, out, corpus)) {
    if (log) log("reusing " + std::to_string(corpus.frames.size()) + " prepared ROIs from " + out.string());
    return corpus;
  }
  corpus = prepare_corpus(cfg.base, log);
  write_prepared_corpus(corpus, cfg.base, out);
  return corpus;
}

// Feature tables per single descriptor, computed on first use.
class FeatureCache {
 public:
  FeatureCache(const PreparedCorpus& corpus, const ExperimentConfig& base)
      : corpus_(corpus), base_(base), extractor_(base.descriptor_params) {}

  const std::vector<FeatureVector>& get(Descriptor d, const LogFn& log) {
    auto it = tables_.find(d);
    if (it == tables_.end()) {
      if (log) log(std::string("extracting ") + to_string(d) + " features");
      it = tables_.emplace(d, compute_features(corpus_.rois, d, base_.roi_spec(), extractor_, base_.jobs)).first;
    }
    return it->second;
  }

 private:
  const PreparedCorpus& corpus_;
  const ExperimentConfig& base_;
  FeatureExtractor extractor_;
  std::map<Descriptor, std::vector<FeatureVector>> tables_;
};

int cmd_preprocess(const Options& opt) {
  const PipelineConfig cfg = resolve_config(opt);
  const LogFn log = make_logger(opt.verbose);
  const PreparedCorpus corpus = prepare_corpus(cfg.base, log);
  write_prepared_corpus(corpus, cfg.base, opt.out);
  std::cout << "wrote " << corpus.frames.size() << " ROIs and " << (opt.out / "manifest.csv").string() << '\n';
  return kOk;
}

int cmd_extract(const Options& opt) {
  const PipelineConfig cfg = resolve_config(opt);
  const LogFn log = make_logger(opt.verbose);
  const PreparedCorpus corpus = load_or_prepare(cfg, opt.out, log);
  FeatureCache cache(corpus, cfg.base);
  for (std::size_t k = 0; k < cfg.combinations.size(); ++k) {
    const ExperimentConfig exp = cfg.experiment(k);
    std::vector<FeatureVector> rows(corpus.frames.size());
    for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
      std::vector<FeatureVector> parts;
      for (Descriptor d : exp.descriptors) parts.push_back(cache.get(d, log)[i]);
      rows[i] = parts.size() == 1 ? parts.front() : fuse(parts);
    }
    const std::string stem = file_stem(combination_name(exp.descriptors));
    const fs::path csv = opt.out / "features" / (stem + ".csv");
    write_feature_csv(corpus.frames, rows, csv);
    std::ofstream sidecar(opt.out / "features" / (stem + ".json"));
    sidecar << feature_sidecar(exp, rows.empty() ? 0 : rows.front().dims()).dump(2) << '\n';
    std::cout << "wrote " << csv.string() << '\n';
  }
  return kOk;
}

void write_report_files(const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string stem = file_stem(report.combination);
  write_report_json(report, dir / (stem + ".json"));
  write_report_text(report, dir / (stem + ".txt"));
  write_predictions_csv(report, dir / (stem + "_predictions.csv"));
}

void write_summary(const std::vector<SummaryRow>& rows, const fs::path& out) {
  std::ofstream txt(out / "summary.txt");
  txt << format_summary_table(rows);
  std::ofstream js(out / "summary.json");
  js << summary_json(rows).dump(2) << '\n';
}

int cmd_evaluate(const Options& opt) {
  const PipelineConfig cfg = resolve_config(opt);
  const LogFn log = make_logger(opt.verbose);
  const PreparedCorpus corpus = load_or_prepare(cfg, opt.out, log);
  FeatureCache cache(corpus, cfg.base);
  std::vector<SummaryRow> summary;
  for (std::size_t k = 0; k < cfg.combinations.size(); ++k) {
    const ExperimentConfig exp = cfg.experiment(k);
    const std::string name = combination_name(exp.descriptors);
    try {
      std::vector<const std::vector<FeatureVector>*> tables;
      for (Descriptor d : exp.descriptors) tables.push_back(&cache.get(d, log));
      const ExperimentReport report = evaluate_features(exp, corpus.frames, tables, log);
      write_report_files(report, opt.out / "reports");
      summary.push_back({report.combination, report.metrics});
      std::cout << format_report_table(report) << '\n';
    } catch (const DataError& e) {
      throw DataError(name + ": " + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(name + ": " + e.what());
    }
  }
  write_summary(summary, opt.out);
  std::cout << format_summary_table(summary);
  return kOk;
}

// Re-derives every report's metrics from its prediction log and rebuilds the
// summary table.
int cmd_report(const Options& opt) {
  const PipelineConfig cfg = resolve_config(opt);
  std::vector<SummaryRow> summary;
  for (std::size_t k = 0; k < cfg.combinations.size(); ++k) {
    const std::string name = combination_name(cfg.combinations[k]);
    const fs::path path = opt.out / "reports" / (file_stem(name) + ".json");
    std::ifstream in(path);
    if (!in) throw IoError("missing report " + path.string() + " (run evaluate first)");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("malformed report " + path.string() + ": " + e.what());
    }
    const auto predictions = predictions_from_json(doc);
    const Metrics m = compute_metrics(confusion_from_predictions(predictions));
    const auto& stored = doc.at("metrics");
    if (stored.at("average_acc").get<double>() != m.average_acc ||
        stored.at("overall_acc").get<double>() != m.overall_acc || stored.at("min_acc").get<double>() != m.min_acc) {
      throw FormatError("stored metrics in " + path.string() + " do not match its prediction log");
    }
    summary.push_back({name, m});
  }
  write_summary(summary, opt.out);
  std::cout << format_summary_table(summary);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periocular expression recognition: preprocessing, descriptors, one-vs-one SVM, LOSO evaluation"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "Pipeline config file")->required();
  app.add_option("--out", opt.out, "Output directory")->required();
  app.add_option("--seed", opt.seed, "Override the config seed");
  app.add_option("--jobs", opt.jobs, "Worker threads");
  app.add_flag("--verbose", opt.verbose, "Log progress to stderr");

  app.add_subcommand("preprocess", "Write normalized, equalized ROIs and a manifest");
  app.add_subcommand("extract", "Write per-image feature CSVs for every configured combination");
  app.add_subcommand("evaluate", "Leave-one-subject-out evaluation of every configured combination");
  app.add_subcommand("report", "Recompute metrics from stored prediction logs and rebuild the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    fs::create_directories(opt.out);
    if (opt.command == "preprocess") return cmd_preprocess(opt);
    if (opt.command == "extract") return cmd_extract(opt);
    if (opt.command == "evaluate") return cmd_evaluate(opt);
    return cmd_report(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}
