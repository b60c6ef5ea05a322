#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bdac/output.hpp"

using namespace bdac;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("bdac_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SimConfig small() {
  SimConfig c;
  c.n = 8;
  c.nx = 5;
  c.h = 0.2;
  c.init.kind = "geometric";
  c.init.chiKind = "tanh";
  c.T = 0.05;
  c.dt = 0.01;
  c.outputEvery = 2;
  c.snapshotEvery = 5;
  c.snapshotSizes = {1, 3};
  return c;
}

}  // namespace

TEST(Output, NonFiniteNumbersRoundTrip) {
  EXPECT_EQ(num(INFINITY), "inf");
  EXPECT_EQ(num(-INFINITY), "-inf");
  EXPECT_EQ(num(NAN), "nan");
  EXPECT_TRUE(std::isinf(to_double(num(-INFINITY))));
  EXPECT_TRUE(std::isnan(to_double(num(NAN))));
  EXPECT_EQ(to_double(num(0.25)), 0.25);
}

TEST(Output, LargestCluster) {
  const std::vector<double> z{1.0, 0.5, 1e-12, 0.0};
  EXPECT_EQ(largest_cluster(z), 2u);
}

TEST(Output, RunWritesRecordsSnapshotsCheckpoints) {
  TempDir dir("run");
  Simulation sim(small());
  run_with_output(sim, dir.path);
  const auto lines = read_ndjson(dir.path / "records.ndjson");
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines.front().at("type"), "header");
  EXPECT_EQ(lines.back().at("type"), "summary");
  const auto hash = config_hash(small());
  for (const auto& l : lines) {
    EXPECT_EQ(l.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(l.at("config_hash"), hash);
  }
  std::vector<std::size_t> steps;
  for (const auto& l : lines) {
    if (l.at("type") == "record") steps.push_back(l.at("step").get<std::size_t>());
  }
  EXPECT_EQ(steps, (std::vector<std::size_t>{0, 2, 4, 5}));
  for (const char* f : {"chi_0.csv", "z1_0.csv", "z3_5.csv", "chi_5.csv", "checkpoint_final.json"}) {
    EXPECT_TRUE(fs::exists(dir.path / f)) << f;
  }
  std::ifstream csv(dir.path / "chi_0.csv");
  std::string row;
  std::getline(csv, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
}

TEST(Output, TornLastLineIsDropped) {
  TempDir dir("torn");
  {
    std::ofstream out(dir.path / "r.ndjson");
    out << "{\"a\":1}\n{\"b\":2}\n{\"c\":";
  }
  EXPECT_EQ(read_ndjson(dir.path / "r.ndjson").size(), 2u);
  {
    std::ofstream out(dir.path / "bad.ndjson");
    out << "{\"a\":1}\n{oops}\n{\"c\":3}\n";
  }
  EXPECT_THROW(read_ndjson(dir.path / "bad.ndjson"), Error);
}

TEST(Output, CheckpointRoundTripResumesIdentically) {
  TempDir dir("ckpt");
  auto c = small();
  c.T = 0.1;
  Simulation full(c);
  full.run();

  auto half = c;
  half.T = 0.05;
  Simulation first(half);
  first.run();
  write_checkpoint(dir.path / "cp.json", half, first.state());
  const auto cp = read_checkpoint(dir.path / "cp.json");
  EXPECT_EQ(cp.config, half);
  EXPECT_EQ(cp.state.z.data(), first.state().z.data());
  EXPECT_EQ(cp.state.chi, first.state().chi);
  EXPECT_EQ(cp.state.step, first.state().step);

  auto rest = cp.config;
  rest.T = 0.1;
  Simulation resumed(rest, cp.state);
  resumed.run();
  EXPECT_EQ(resumed.state().z.data(), full.state().z.data());
  EXPECT_EQ(resumed.state().chi, full.state().chi);
}

TEST(Output, CheckpointRejectsTampering) {
  TempDir dir("tamper");
  const auto c = small();
  const auto s = make_initial_state(c);
  auto j = checkpoint_json(c, s);
  j["config_hash"] = "0000000000000000";
  std::ofstream(dir.path / "a.json") << j.dump();
  EXPECT_THROW(read_checkpoint(dir.path / "a.json"), Error);
  j = checkpoint_json(c, s);
  j["z"][0] = -1.0;
  std::ofstream(dir.path / "b.json") << j.dump();
  EXPECT_THROW(read_checkpoint(dir.path / "b.json"), Error);
}

TEST(Output, FailedRunLeavesErrorRecord) {
  TempDir dir("fail");
  auto c = small();
  c.e2 = EnergyProfile::constant(800.0);
  Simulation sim(c);
  EXPECT_THROW(run_with_output(sim, dir.path), std::exception);
  const auto lines = read_ndjson(dir.path / "records.ndjson");
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.back().at("type"), "error");
  EXPECT_TRUE(fs::exists(dir.path / "checkpoint_failed.json"));
}
