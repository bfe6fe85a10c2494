#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "featlab/cli.hpp"
#include "featlab/error.hpp"

using namespace featlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "featlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("featlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

constexpr const char* kSmallRun = R"({
  "seed": 3,
  "folds": 3,
  "pair": "4-2",
  "pairs": ["4-2", "8-8"],
  "features": {"vol_up": {"K": 4, "n": 300}, "occ_up": {"K": 3, "n": 300},
               "vol_down": {"K": 4, "n": 300}, "occ_down": {"K": 3, "n": 300}},
  "svm": {"grid": [{"c": 1.0, "gamma": 0.125}, {"c": 8.0, "gamma": 0.03125}]}
})";

/// Writes train/test CSVs from small synthetic sites into `dir`.
void make_data(const fs::path& dir) {
  ASSERT_EQ(run({"synth", "--seed", "1", "--n-units", "9", "--out", (dir / "train.csv").string()}).code, 0);
  ASSERT_EQ(run({"synth", "--seed", "2", "--n-units", "5", "--out", (dir / "test.csv").string()}).code, 0);
  write(dir / "run.json", kSmallRun);
}

}  // namespace

TEST(Cli, UnknownSubcommandPrintsUsage) {
  const Outcome r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
}

TEST(Cli, SynthWritesCsvAndManifest) {
  const fs::path dir = fresh_dir("synth");
  write(dir / "cfg.json", R"({"n_units": 4, "pre_len": 20, "inc_len": 5, "seed": 12})");
  const Outcome r = run({"synth", "--config", (dir / "cfg.json").string(), "--out", (dir / "d.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset ds = load_dataset(dir / "d.csv");
  EXPECT_EQ(ds.units.size(), 4u);
  const Json m = read_json_file(dir / "d.csv.manifest.json");
  EXPECT_EQ(m.at("command"), "synth");
  EXPECT_EQ(m.at("seed"), 12u);
  EXPECT_EQ(m.at("outputs").at("dataset").at("fnv1a64"), file_digest(dir / "d.csv"));
}

TEST(Cli, MissingUnlabeledFileNamesPath) {
  const fs::path dir = fresh_dir("missing");
  make_data(dir);
  const std::string missing = (dir / "site_b.csv").string();
  const Outcome r = run({"e2e", "--config", (dir / "run.json").string(), "--mode", "transfer-enhanced",
                     "--train", (dir / "train.csv").string(), "--test", (dir / "test.csv").string(),
                     "--unlabeled", missing, "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST(Cli, BadConfigIsExitOne) {
  const fs::path dir = fresh_dir("badcfg");
  write(dir / "cfg.json", R"({"seed": 1, "bogus": 2})");
  EXPECT_EQ(run({"grid", "--config", (dir / "cfg.json").string()}).code, 1);
  EXPECT_EQ(run({"e2e", "--pair", "2-4"}).code, 1);
  EXPECT_EQ(run({"e2e", "--mode", "deep"}).code, 1);
}

TEST(Cli, GridWritesTable) {
  const fs::path dir = fresh_dir("grid");
  make_data(dir);
  const Outcome r = run({"grid", "--config", (dir / "run.json").string(), "--train", (dir / "train.csv").string(),
                     "--test", (dir / "test.csv").string(), "--pairs", "4-2,8-8,12-12", "--out",
                     (dir / "g").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "g" / "grid.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 1u + 3u * 3u);
  EXPECT_NE(r.out.find("12-12"), std::string::npos);
}

TEST(Cli, ManifestReplayIsByteIdentical) {
  const fs::path dir = fresh_dir("replay");
  make_data(dir);
  const Outcome first = run({"e2e", "--config", (dir / "run.json").string(), "--mode", "enhanced", "--train",
                         (dir / "train.csv").string(), "--test", (dir / "test.csv").string(), "--out",
                         (dir / "a").string()});
  ASSERT_EQ(first.code, 0) << first.err;
  // replay the manifest into a second directory
  const Outcome second = run({"e2e", "--config", (dir / "a" / "manifest.json").string(), "--out",
                          (dir / "b").string()});
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(slurp(dir / "a" / "report.csv"), slurp(dir / "b" / "report.csv"));
  const Json ma = read_json_file(dir / "a" / "manifest.json");
  const Json mb = read_json_file(dir / "b" / "manifest.json");
  EXPECT_EQ(ma.at("outputs").at("report_csv").at("fnv1a64"), mb.at("outputs").at("report_csv").at("fnv1a64"));
  EXPECT_EQ(ma.at("repeat_seeds"), Json::array({3}));
  EXPECT_EQ(ma.at("config").at("mode"), "enhanced");
}

TEST(Cli, LearnTrainEval) {
  const fs::path dir = fresh_dir("pipeline");
  make_data(dir);
  const std::string cfg = (dir / "run.json").string();
  Outcome r = run({"learn", "--config", cfg, "--data", (dir / "train.csv").string(), "--out",
               (dir / "cb.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(codebooks_from_json(read_json_file(dir / "cb.json"))[0].K(), 4u);

  r = run({"train", "--config", cfg, "--train", (dir / "train.csv").string(), "--codebooks",
           (dir / "cb.json").string(), "--out", (dir / "model.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json model = read_json_file(dir / "model.json");
  EXPECT_EQ(model.at("mode"), "enhanced");

  r = run({"eval", "--config", cfg, "--model", (dir / "model.json").string(), "--test",
           (dir / "test.csv").string(), "--pt", "0,2", "--out", (dir / "metrics.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json metrics = read_json_file(dir / "metrics.json");
  EXPECT_FALSE(metrics.dump().empty());

  r = run({"train", "--config", cfg, "--train", (dir / "train.csv").string(), "--c", "2", "--out",
           (dir / "m2.json").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, RunConfigJsonRoundTrip) {
  const cli::RunConfig cfg = cli::run_config_from_json(Json::parse(kSmallRun));
  EXPECT_EQ(cfg.experiment.grid.size(), 2u);
  EXPECT_EQ(cfg.experiment.learn.channels[1].K, 3u);
  EXPECT_EQ(cfg.pairs.size(), 2u);
  const cli::RunConfig back = cli::run_config_from_json(cli::run_config_to_json(cfg));
  EXPECT_EQ(cli::run_config_to_json(back), cli::run_config_to_json(cfg));
}
