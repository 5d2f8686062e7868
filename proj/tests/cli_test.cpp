#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run_cli(const std::string& args, const fs::path& scratch) {
  const std::string cmd = std::string("\"") + PERIOCULAR_CLI + "\" " + args + " > \"" + (scratch / "stdout").string() +
                          "\" 2> \"" + (scratch / "stderr").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(scratch / "stdout");
  r.err = slurp(scratch / "stderr");
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "pipeline.conf";
  std::ofstream(p) << "format_version = 1\n" << body;
  return p;
}

void write_ten_frame_sequence(const fs::path& root) {
  const fs::path dir = root / "S001" / "001";
  fs::create_directories(dir);
  const auto lm = synth::landmarks_for_eyes({110, 120}, {210, 121});
  for (int f = 1; f <= 10; ++f) {
    const std::string stem = "S001_001_" + std::to_string(100 + f);
    periocular::save_png(synth::sinusoid(320, 240, 0.12, 20.0 * f), dir / (stem + ".png"));
    synth::write_landmarks(lm, dir / (stem + "_landmarks.txt"));
  }
  std::ofstream(dir / "label.txt") << "disgust\n";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("preprocess") {
  const fs::path dir = synth::temp_dir("cli_pre");
  SUBCASE("one labeled sequence gives four ROIs") {
    write_ten_frame_sequence(dir / "data");
    const auto cfg = write_config(dir, "dataset_root = data\n");
    const Run r = run_cli("preprocess --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 0);
    const std::string manifest = slurp(dir / "out" / "manifest.csv");
    CHECK(count_lines(manifest) == 5);
    std::size_t pngs = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "out" / "rois")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 4);
    CHECK(manifest.find("S001,001,10,disgust") != std::string::npos);

    // Re-running reproduces the same files.
    const std::string before = slurp(dir / "out" / "rois" / "S001" / "001" / "S001_001_110.png");
    CHECK(run_cli("preprocess --config " + cfg.string() + " --out " + (dir / "out").string(), dir).code == 0);
    CHECK(slurp(dir / "out" / "rois" / "S001" / "001" / "S001_001_110.png") == before);
  }
  SUBCASE("empty corpus") {
    fs::create_directories(dir / "data");
    const auto cfg = write_config(dir, "dataset_root = data\n");
    const Run r = run_cli("preprocess --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 0);
    CHECK(count_lines(slurp(dir / "out" / "manifest.csv")) == 1);
  }
  SUBCASE("missing landmark file") {
    write_ten_frame_sequence(dir / "data");
    fs::remove(dir / "data" / "S001" / "001" / "S001_001_104_landmarks.txt");
    const auto cfg = write_config(dir, "dataset_root = data\n");
    const Run r = run_cli("preprocess --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("S001_001_104") != std::string::npos);
  }
}

TEST_CASE("evaluate and report") {
  const fs::path dir = synth::temp_dir("cli_eval");
  synth::TextureCorpusSpec spec;
  spec.subjects = 4;
  synth::write_texture_corpus(dir / "data", spec);
  const fs::path out = dir / "out";

  SUBCASE("two single descriptors") {
    const auto cfg = write_config(dir, "dataset_root = data\ndescriptors = LBP, GABOR\n");
    const Run r = run_cli("--config " + cfg.string() + " --out " + out.string() + " evaluate", dir);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "reports" / "LBP.json"));
    CHECK(fs::exists(out / "reports" / "GABOR.json"));
    CHECK(fs::exists(out / "reports" / "GABOR_predictions.csv"));
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary.at("rows").size() == 2);

    const Run rep = run_cli("--config " + cfg.string() + " --out " + out.string() + " report", dir);
    CHECK(rep.code == 0);
    CHECK(rep.out.find("GABOR") != std::string::npos);

    auto doc = nlohmann::json::parse(slurp(out / "reports" / "LBP.json"));
    doc["metrics"]["overall_acc"] = 12.5;
    std::ofstream(out / "reports" / "LBP.json") << doc.dump();
    CHECK(run_cli("--config " + cfg.string() + " --out " + out.string() + " report", dir).code == 3);
  }
  SUBCASE("fusion gives one report") {
    const auto cfg = write_config(dir, "dataset_root = data\ndescriptors = LBP+HOG+GLCM\n");
    const Run r = run_cli("evaluate --config " + cfg.string() + " --out " + out.string(), dir);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "reports" / "LBP_HOG_GLCM.json"));
    std::size_t reports = 0;
    for (const auto& e : fs::directory_iterator(out / "reports")) reports += e.path().extension() == ".json";
    CHECK(reports == 1);
    const auto doc = nlohmann::json::parse(slurp(out / "reports" / "LBP_HOG_GLCM.json"));
    CHECK(doc.at("feature_dims") == 84 * 21);
  }
  SUBCASE("extract writes feature tables") {
    const auto cfg = write_config(dir, "dataset_root = data\ndescriptors = GLCM\n");
    REQUIRE(run_cli("extract --config " + cfg.string() + " --out " + out.string(), dir).code == 0);
    CHECK(count_lines(slurp(out / "features" / "GLCM.csv")) == 16);
  }
  SUBCASE("configuration errors stop before any work") {
    auto cfg = write_config(dir, "dataset_root = data\ndescriptors = LBP, SIFT\n");
    Run r = run_cli("evaluate --config " + cfg.string() + " --out " + out.string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("SIFT") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "manifest.csv"));
    CHECK(run_cli("evaluate --out " + out.string(), dir).code == 2);
    CHECK(run_cli("frobnicate --config " + cfg.string() + " --out " + out.string(), dir).code == 2);
    CHECK(run_cli("evaluate --config " + (dir / "none.conf").string() + " --out " + out.string(), dir).code == 2);
  }
}
