#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "streamlp/io.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string command = std::string(STREAMLP_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "streamlp_cli_test";
    fs::remove_all(dir_);
    ASSERT_EQ(run("generate --out " + dir_.string() +
                  " --classes 4 --per-class 20 --dim 16 --shots 2 --seed 3"),
              0);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string files(bool fewshot = true) const {
    std::string out = "--prototypes " + (dir_ / "prototypes.ecl").string() + " --test " +
                      (dir_ / "test.ecl").string() + " --sidecar " +
                      (dir_ / "sidecar.json").string();
    if (fewshot) out += " --fewshot " + (dir_ / "fewshot.ecl").string();
    return out;
  }

  fs::path dir_;
};

TEST_F(Cli, SuccessfulRunWritesDeterministicReport) {
  const auto a = dir_ / "a.json";
  const auto b = dir_ / "b.json";
  EXPECT_EQ(run(files() + " --transductive --oracle-check --report " + a.string()), 0);
  EXPECT_EQ(run(files() + " --transductive --oracle-check --report " + b.string()), 0);
  EXPECT_EQ(streamlp::io::read_bytes(a), streamlp::io::read_bytes(b));
  EXPECT_EQ(run(files(false) + " --no-text-reweight --kl 0"), 0);
}

TEST_F(Cli, IngestErrorsExitWithTwo) {
  EXPECT_EQ(run("--prototypes " + (dir_ / "missing.ecl").string() + " --test " +
                (dir_ / "test.ecl").string() + " --sidecar " + (dir_ / "sidecar.json").string()),
            2);
  // Test rows passed as prototypes: the class count no longer matches.
  EXPECT_EQ(run("--prototypes " + (dir_ / "test.ecl").string() + " --test " +
                (dir_ / "test.ecl").string() + " --sidecar " + (dir_ / "sidecar.json").string()),
            2);
}

TEST_F(Cli, ConfigErrorsExitWithThree) {
  EXPECT_EQ(run(files() + " --alpha 0"), 3);
  EXPECT_EQ(run(files() + " --beta 1.5"), 3);
  EXPECT_EQ(run(files() + " --kp 0"), 3);
  EXPECT_EQ(run("--no-such-flag"), 3);
  EXPECT_EQ(run("--test " + (dir_ / "test.ecl").string()), 3);
  EXPECT_EQ(run("generate --out " + (dir_ / "bad").string() + " --classes 20 --dim 2"), 3);
}

TEST(CliHelp, ExitsWithZero) { EXPECT_EQ(run("--help"), 0); }

}  // namespace
