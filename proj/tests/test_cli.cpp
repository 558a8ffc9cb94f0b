// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "cli.h"
#include "topocl/io_util.h"
#include "topocl/manifest.h"
#include "topocl/vectorize.h"

namespace fs = std::filesystem;
using namespace topocl;

namespace {

struct Outcome {
  int         code = -1;
  std::string out;
  std::string err;
};

Outcome runCli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Outcome            o;
  o.code = cli::run(args, out, err);
  o.out  = out.str();
  o.err  = err.str();
  return o;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("topocl_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  //! 80 rows, 40 ring systems labelled 1 and 40 acyclic molecules labelled 0.
  std::string labelledCorpus() {
    const char* pos[] = {"C1CC1", "c1ccccc1", "C1CCNCC1", "C1CCOC1", "C1CCCC1", "C1CCCCC1", "c1ccncc1", "C1CC2CC1C2"};
    const char* neg[] = {"CCO", "CCCC", "CC(=O)O", "CCN", "CCCCC", "CC(C)C", "OCCO", "CCOC"};
    std::string csv   = "smiles,label\n";
    for (int r = 0; r < 5; ++r) {
      for (const char* s : pos) csv += std::string(s) + ",1\n";
      for (const char* s : neg) csv += std::string(s) + ",0\n";
    }
    writeFile(path("labelled.csv"), csv);
    return path("labelled.csv");
  }

  fs::path dir_;
};

std::vector<std::string> csvLines(const std::string& file) {
  std::vector<std::string> lines;
  std::stringstream        ss(readFile(file));
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  return lines;
}

std::size_t columns(const std::string& line) { return splitCsvLine(line).size(); }

//! Every regular file below `dir`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = readFile(e.path());
  }
  return files;
}

}  // namespace

TEST_F(CliTest, FingerprintRowsAndWidth) {
  writeFile(path("three.csv"), "smiles\nC1CC1\nCCO\nc1ccccc1\n");
  const Outcome a = runCli({"fingerprint", "--dataset", path("three.csv"), "--out", path("atom")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto atom = csvLines(path("atom/fingerprints.csv"));
  ASSERT_EQ(atom.size(), 4u);
  for (const auto& line : atom) EXPECT_EQ(columns(line), columns(atom[0]));

  const Outcome b = runCli({"fingerprint", "--dataset", path("three.csv"), "--filters", "ahd", "--out", path("ahd")});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ahd = csvLines(path("ahd/fingerprints.csv"));
  ASSERT_EQ(ahd.size(), 4u);
  EXPECT_EQ(columns(ahd[0]) - 1, 3 * (columns(atom[0]) - 1));
}

TEST_F(CliTest, RerunIsByteIdenticalAcrossOutputDirectories) {
  const std::string data = labelledCorpus();
  for (const char* out : {"r1", "r2"}) {
    ASSERT_EQ(runCli({"fingerprint", "--dataset", data, "--seed", "9", "--jobs", "2", "--out", path(out)}).code, 0);
  }
  EXPECT_EQ(tree(path("r1")), tree(path("r2")));
}

TEST_F(CliTest, LambdaIsInertOutsideCombinedMode) {
  const std::string data = labelledCorpus();
  ASSERT_EQ(runCli({"pretrain", "--dataset", data, "--epochs", "2", "--loss", "ntxent", "--out", path("a")}).code, 0);
  ASSERT_EQ(runCli({"pretrain", "--dataset", data, "--epochs", "2", "--loss", "ntxent", "--lambda", "0", "--out", path("b")})
                .code,
            0);
  const auto a = tree(path("a"));
  EXPECT_EQ(a, tree(path("b")));
  for (const char* f : {"loss_curve.csv", "checkpoint_best.ckpt", "checkpoint_final.ckpt", "embeddings.csv", "manifest.json"}) {
    EXPECT_TRUE(a.count(f)) << f;
  }
}

TEST_F(CliTest, ProbeWritesRocAucColumns) {
  const std::string data = labelledCorpus();
  ASSERT_EQ(runCli({"pretrain", "--dataset", data, "--epochs", "1", "--out", path("pre")}).code, 0);
  const Outcome o = runCli({"probe", "--dataset", data, "--checkpoint", path("pre/checkpoint_final.ckpt"), "--mode", "linear",
                            "--epochs", "3", "--out", path("probe")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto lines = csvLines(path("probe/probe_metrics.csv"));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "mode,task,best_epoch,valid_roc_auc,test_roc_auc,samples");
  EXPECT_EQ(lines[1].rfind("linear,classification,", 0), 0u);
  EXPECT_EQ(csvLines(path("probe/probe_curve.csv"))[0], "epoch,train_loss,valid_roc_auc");
}

TEST_F(CliTest, FinetuneWritesCheckpointAndProbeRejectsFullMode) {
  const std::string data = labelledCorpus();
  ASSERT_EQ(runCli({"pretrain", "--dataset", data, "--epochs", "1", "--out", path("pre")}).code, 0);
  const std::string ckpt = path("pre/checkpoint_final.ckpt");
  const Outcome     ft   = runCli({"finetune", "--dataset", data, "--checkpoint", ckpt, "--epochs", "2", "--out", path("ft")});
  ASSERT_EQ(ft.code, 0) << ft.err;
  EXPECT_TRUE(fs::exists(path("ft/checkpoint_finetuned.ckpt")));
  EXPECT_EQ(csvLines(path("ft/probe_metrics.csv"))[1].rfind("full,", 0), 0u);

  const Outcome bad = runCli({"probe", "--dataset", data, "--checkpoint", ckpt, "--mode", "full", "--out", path("bad")});
  EXPECT_EQ(bad.code, cli::kExitValidation);
  EXPECT_NE(bad.err.find("/probe/mode"), std::string::npos);
}

TEST_F(CliTest, MissingDatasetIsValidationErrorWithSchemaPath) {
  const Outcome o = runCli({"pretrain", "--out", path("o")});
  EXPECT_EQ(o.code, cli::kExitValidation);
  EXPECT_NE(o.err.find("/dataset/path"), std::string::npos) << o.err;

  writeFile(path("cfg.json"), R"({"dataset": {"format": "csv"}})");
  const Outcome c = runCli({"fingerprint", "--config", path("cfg.json"), "--out", path("o")});
  EXPECT_EQ(c.code, cli::kExitValidation);
  EXPECT_NE(c.err.find("/dataset/path"), std::string::npos) << c.err;
}

TEST_F(CliTest, UnknownKeysAndBadFlagsAreValidationErrors) {
  writeFile(path("cfg.json"), R"({"train": {"epochs": 2, "epoch": 3}})");
  const Outcome a = runCli({"pretrain", "--config", path("cfg.json"), "--out", path("o")});
  EXPECT_EQ(a.code, cli::kExitValidation);
  EXPECT_NE(a.err.find("/train/epoch"), std::string::npos) << a.err;

  const std::string data = labelledCorpus();
  const Outcome     b    = runCli({"pretrain", "--dataset", data, "--loss", "bogus", "--out", path("o")});
  EXPECT_EQ(b.code, cli::kExitValidation);
  EXPECT_NE(b.err.find("/loss/mode"), std::string::npos) << b.err;

  EXPECT_EQ(runCli({"pretrain", "--no-such-flag"}).code, cli::kExitValidation);
  EXPECT_EQ(runCli({}).code, cli::kExitValidation);
}

TEST_F(CliTest, SpectraOnRankOneEmbeddingsReportsOneValue) {
  std::string csv = "id,f0,f1,f2\n";
  for (int i = 0; i < 10; ++i) {
    const double t = i - 4.5;
    csv += "m" + std::to_string(i) + ',' + formatDouble(t) + ',' + formatDouble(2 * t) + ',' + formatDouble(-t) + '\n';
  }
  writeFile(path("z.csv"), csv);
  const Outcome o = runCli({"spectra", "--embeddings", path("z.csv"), "--out", path("s")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("non_collapsed=1 of 3"), std::string::npos) << o.out;
  EXPECT_EQ(csvLines(path("s/spectrum.csv"))[0], "index,value,log_value,collapsed");
}

TEST_F(CliTest, DistancesOnIdenticalSpacesPrintsUnitCorrelation) {
  const std::string data = labelledCorpus();
  ASSERT_EQ(runCli({"fingerprint", "--dataset", data, "--filters", "degree", "--resolution", "4", "--out", path("fp")}).code, 0);
  const std::string fp = path("fp/fingerprints.csv");
  const Outcome o = runCli({"distances", "--embeddings", fp, "--external-fingerprints", fp, "--out", path("d")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("pearson_r=1 "), std::string::npos) << o.out;
  const auto lines = csvLines(path("d/distances.csv"));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(splitCsvLine(lines[1])[1], "1");
}

TEST_F(CliTest, ConstantEmbeddingsAreNumericFailure) {
  std::string csv = "id,f0\n";
  for (int i = 0; i < 6; ++i) csv += "m" + std::to_string(i) + ",0.5\n";
  writeFile(path("z.csv"), csv);
  const Outcome o = runCli({"distances", "--embeddings", path("z.csv"), "--external-fingerprints", path("z.csv"), "--out", path("d")});
  EXPECT_EQ(o.code, cli::kExitNumeric) << o.err;
}

TEST_F(CliTest, HistIsDeterministicGivenSeed) {
  const std::string data = labelledCorpus();
  ASSERT_EQ(runCli({"pretrain", "--dataset", data, "--epochs", "1", "--out", path("pre")}).code, 0);
  const std::string ckpt = path("pre/checkpoint_final.ckpt");
  for (const char* out : {"h1", "h2"}) {
    const Outcome o = runCli({"hist", "--dataset", data, "--checkpoint", ckpt, "--seed", "5", "--pairs", "200", "--by", "label",
                              "--out", path(out)});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  EXPECT_EQ(tree(path("h1")), tree(path("h2")));
  EXPECT_EQ(csvLines(path("h1/alignment.csv"))[0], "bin_left,bin_right,pos_count,neg_count");
  EXPECT_TRUE(fs::exists(path("h1/alignment.gp")));
}

TEST_F(CliTest, ManifestHashesInputsAndOutputsAndInputsStayUnchanged) {
  const std::string data   = labelledCorpus();
  const std::string before = readFile(data);
  ASSERT_EQ(runCli({"fingerprint", "--dataset", data, "--seed", "3", "--out", path("m")}).code, 0);
  EXPECT_EQ(readFile(data), before);

  const auto doc = nlohmann::json::parse(readFile(path("m/manifest.json")));
  EXPECT_EQ(doc.at("subcommand"), "fingerprint");
  EXPECT_EQ(doc.at("seed"), 3);
  EXPECT_FALSE(doc.at("config").contains("out"));
  bool sawInput = false;
  for (const auto& in : doc.at("inputs")) {
    if (in.at("role") == "dataset") {
      EXPECT_EQ(in.at("hash"), gitBlobHash(before));
      sawInput = true;
    }
  }
  EXPECT_TRUE(sawInput);
  ASSERT_EQ(doc.at("outputs").size(), 1u);
  EXPECT_EQ(doc.at("outputs")[0].at("path"), "fingerprints.csv");
  EXPECT_EQ(doc.at("outputs")[0].at("hash"), gitBlobHash(readFile(path("m/fingerprints.csv"))));
}

TEST_F(CliTest, FingerprinterMatchesCliRowBitForBit) {
  writeFile(path("one.csv"), "smiles\nC1CC1\n");
  ASSERT_EQ(runCli({"fingerprint", "--dataset", path("one.csv"), "--out", path("one")}).code, 0);
  const auto lines = csvLines(path("one/fingerprints.csv"));
  ASSERT_EQ(lines.size(), 2u);
  const TopoFingerprint row   = Fingerprinter::fromPreset("atom").fingerprint("C1CC1");
  const auto            cells = splitCsvLine(lines[1]);
  ASSERT_EQ(cells.size(), row.values.size() + 1);
  for (std::size_t j = 0; j < row.values.size(); ++j) EXPECT_EQ(cells[j + 1], formatDouble(row.values[j])) << j;

  const std::vector<std::string> batch{"C1CC1", "CCO", "c1ccccc1"};
  writeFile(path("three.csv"), "smiles\nC1CC1\nCCO\nc1ccccc1\n");
  ASSERT_EQ(runCli({"fingerprint", "--dataset", path("three.csv"), "--out", path("three")}).code, 0);
  const auto rows = Fingerprinter::fromPreset("atom").fingerprintBatch(batch);
  const std::vector<std::string> ids{"0", "1", "2"};
  EXPECT_EQ(readFile(path("three/fingerprints.csv")), fingerprintsToCsv(ids, rows));
  EXPECT_THROW(Fingerprinter::fromPreset("atom").fingerprint("C1CC"), Error);
}
