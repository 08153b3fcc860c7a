#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const std::string kTiny =
    " --set dataset.synthetic.node_count=80 --set dataset.synthetic.event_count=800"
    " --set dataset.synthetic.node_feature_dim=4 --set dataset.synthetic.edge_feature_dim=4"
    " --set encoder.time_dim=4 --set encoder.output_dim=6 --set encoder.layers=1 --set encoder.neighbor_k=5"
    " --set method.epochs_per_step=2 --set method.warmup_epochs=1 --set method.em_iterations=3"
    " --set method.learning_rate=0.01 --set method.batch_size=64";

struct Result {
  int code;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("ptcl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }

  Result run(const std::string& args) const {
    const fs::path log = root_ / "cli.log";
    const std::string cmd = "cd '" + root_.string() + "' && PTCL_OUTPUT_ROOT='" + root_.string() + "/out' '" +
                            PTCL_CLI_BINARY + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(status), ss.str()};
  }

  std::string config() const { return std::string(PTCL_SOURCE_DIR) + "/tools/configs/drift_ptcl.json"; }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path root_;
};

}  // namespace

TEST_F(Cli, PrepareSyntheticWritesThreeFilesAndSplit) {
  const auto r = run("prepare --synthetic drift-default --out d0");
  ASSERT_EQ(r.code, 0) << r.output;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root_ / "out/d0")) files += e.is_regular_file();
  EXPECT_EQ(files, 4u);
  for (const char* f : {"nodes.csv", "edges.csv", "labels.csv", "split.json"}) EXPECT_TRUE(fs::exists(root_ / "out/d0" / f));
}

TEST_F(Cli, PrepareConvertsJodieAndRejectsMissingInput) {
  std::ofstream(root_ / "w.csv") << "user_id,item_id,timestamp,state_label,f1\n1,9,1,0,0.5\n2,9,2,0,0.1\n3,8,3,1,0.2\n"
                                 << "1,8,4,1,0.3\n2,8,5,0,0.0\n";
  const auto ok = run("prepare --jodie w.csv --out wiki");
  ASSERT_EQ(ok.code, 0) << ok.output;
  EXPECT_TRUE(fs::exists(root_ / "out/wiki/edges.csv"));
  const auto missing = run("prepare --jodie nowhere.csv --out x");
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(missing.output.find("nowhere.csv"), std::string::npos);
  EXPECT_NE(run("prepare --synthetic drift-unknown --out x").code, 0);
}

TEST_F(Cli, InvalidConfigListsEveryProblemBeforeTraining) {
  const auto r = run("train --config " + config() + " --set method.beta=3 --set method.name=magic --set encoder.nope=1 --out bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("beta"), std::string::npos);
  EXPECT_NE(r.output.find("magic"), std::string::npos);
  EXPECT_NE(r.output.find("encoder.nope"), std::string::npos);
  EXPECT_FALSE(fs::exists(root_ / "out/bad"));
}

TEST_F(Cli, TrainIsReproducibleAndBounded) {
  ASSERT_EQ(run("train --config " + config() + kTiny + " --out a").code, 0);
  ASSERT_EQ(run("train --config " + config() + kTiny + " --out b").code, 0);
  const fs::path a = root_ / "out/a/seed_0", b = root_ / "out/b/seed_0";
  EXPECT_EQ(slurp(a / "history.jsonl"), slurp(b / "history.jsonl"));
  for (const char* f : {"checkpoint.json", "predictions.csv", "manifest.json", "pseudo_labels_iter1.csv"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  std::ifstream in(a / "history.jsonl");
  std::size_t iterations = 0;
  for (std::string line; std::getline(in, line);) iterations += Json::parse(line)["type"] == "iteration";
  EXPECT_GE(iterations, 1u);
  EXPECT_LE(iterations, 11u);
  const Json manifest = Json::parse(slurp(a / "manifest.json"));
  EXPECT_TRUE(manifest.contains("timings_seconds"));
  EXPECT_EQ(manifest["config"]["method"]["name"], "ptcl");
}

TEST_F(Cli, DlsWithoutDynamicLabelsIsUnsupported) {
  const auto r = run("train --config " + config() + kTiny + " --set method.name=dls --set dataset.drop_dynamic_labels=true --out d");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("unsupported"), std::string::npos);
}

TEST_F(Cli, CompareBuildsOneRowPerMethod) {
  for (const char* m : {"ptcl", "cft", "npl"}) {
    ASSERT_EQ(run("train --config " + config() + kTiny + " --seeds 0 1 --set method.name=" + m + " --out " + m).code, 0);
  }
  const auto r = run("compare out/ptcl out/cft out/npl --out cmp");
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string table = slurp(root_ / "out/cmp/compare.md");
  std::size_t rows = 0;
  std::istringstream lines(table);
  for (std::string line; std::getline(lines, line);) rows += line.rfind("| ", 0) == 0 && line.find("±") != std::string::npos && line.find("| method") != 0;
  EXPECT_EQ(rows, 3u);
  for (const char* m : {"| ptcl |", "| cft |", "| npl |"}) EXPECT_NE(table.find(m), std::string::npos);
}

TEST_F(Cli, EvaluateWritesReport) {
  ASSERT_EQ(run("train --config " + config() + kTiny + " --out e").code, 0);
  ASSERT_EQ(run("evaluate --run out/e").code, 0);
  const Json report = Json::parse(slurp(root_ / "out/e/report.json"));
  EXPECT_EQ(report["method"], "ptcl");
  EXPECT_TRUE(fs::exists(root_ / "out/e/convergence.svg"));
  const auto missing = run("evaluate --run out/none");
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(missing.output.find("out/none"), std::string::npos);
}

TEST_F(Cli, AnalyzeReplicatedLabelsAreFullyConsistent) {
  ASSERT_EQ(run("train --config " + config() + kTiny + " --set method.name=cft --out c").code, 0);
  ASSERT_EQ(run("analyze --run out/c").code, 0);
  const Json doc = Json::parse(slurp(root_ / "out/c/analysis.json"));
  const auto hist = doc["pseudo_labels"]["histogram"].get<std::vector<std::size_t>>();
  const std::size_t total = doc["pseudo_labels"]["count"];
  EXPECT_GT(total, 0u);
  EXPECT_EQ(hist.back(), total);
}

TEST_F(Cli, AnalyzeFlipAtFinalTruthHasZeroConsistency) {
  const fs::path d = root_ / "flip";
  fs::create_directories(d);
  std::ofstream(d / "nodes.csv") << "id,f\n0,0\n1,0\n2,0\n";
  std::ofstream(d / "edges.csv") << "src,dst,t,f\n0,1,1,0\n0,2,2,0\n1,2,3,0\n0,1,4,0\n";
  // Every node holds class 0 and switches to 1 at its final timestamp.
  std::ofstream(d / "labels.csv") << "id,label,t\n0,0,1\n0,0,2\n0,1,4\n1,0,1\n1,0,3\n1,1,4\n2,0,2\n2,1,3\n";
  const auto r = run("analyze --dataset flip --out flip_analysis");
  ASSERT_EQ(r.code, 0) << r.output;
  const Json doc = Json::parse(slurp(root_ / "out/flip_analysis/analysis.json"));
  const auto hist = doc["ground_truth"]["histogram"].get<std::vector<std::size_t>>();
  EXPECT_EQ(hist.front(), 3u);
  EXPECT_EQ(doc["ground_truth"]["count"], 3);
}
