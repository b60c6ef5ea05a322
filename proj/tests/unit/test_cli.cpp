#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "bdac/output.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& out = "/dev/null") {
  const std::string cmd = std::string(BDAC_CLI) + " " + args + " > " + out + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string data(const std::string& name) { return std::string(BDAC_TEST_DATA) + "/" + name; }
std::string sample(const std::string& name) { return std::string(BDAC_CONFIGS) + "/" + name; }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("bdac_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Cli, ValidateExitCodes) {
  EXPECT_EQ(run("validate " + sample("default.toml")), 0);
  EXPECT_EQ(run("validate " + data("zero_monomers.toml")), 3);
  EXPECT_EQ(run("validate " + data("bad_syntax.toml")), 2);
  EXPECT_EQ(run("validate " + data("unknown_key.toml")), 2);
}

TEST(Cli, EquilibriumPrintsClosedForm) {
  TempDir dir("eq");
  const auto out = (dir.path / "eq.json").string();
  ASSERT_EQ(run("equilibrium " + sample("gamma_one.toml") + " --rho 4 --chi 0.5", out), 0);
  const auto j = bdac::json::parse(bdac::read_text_file(out));
  EXPECT_NEAR(j.at("kBar").get<double>(), 0.5, 1e-14);
  EXPECT_NEAR(j.at("nBar").get<double>(), 2.0, 1e-13);
  EXPECT_EQ(j.at("status"), "satisfied");
}

TEST(Cli, EquilibriumNoRootIsRuntimeError) {
  TempDir dir("noroot");
  const auto cfg = dir.path / "v.toml";
  std::ofstream(cfg) << "[model.enthalpy.phase1]\nkind = \"volume_surface\"\nvolume = 1.0\n"
                        "[model.enthalpy.phase2]\nkind = \"volume_surface\"\nvolume = 1.0\n"
                        "[model.activation]\nphase1 = 0.0\nphase2 = 0.0\n";
  EXPECT_EQ(run("equilibrium " + cfg.string() + " --rho 1 --chi 0.5"), 4);
}

TEST(Cli, RunAndDiagnose) {
  TempDir dir("run");
  ASSERT_EQ(run("run " + data("tiny.toml") + " --output-dir " + dir.path.string()), 0);
  const auto lines = bdac::read_ndjson(dir.path / "records.ndjson");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].at("type"), "header");
  EXPECT_EQ(lines[1].at("type"), "record");
  EXPECT_EQ(lines[2].at("type"), "summary");
  EXPECT_EQ(run("diagnose " + (dir.path / "checkpoint_final.json").string()), 0);
  EXPECT_EQ(run("diagnose " + data("tiny.toml")), 4);
}

TEST(Cli, RunRejectsBadConfig) {
  TempDir dir("bad");
  EXPECT_EQ(run("run " + data("zero_monomers.toml") + " --output-dir " + dir.path.string()), 3);
  EXPECT_EQ(run("run " + data("bad_syntax.toml") + " --output-dir " + dir.path.string()), 2);
}
