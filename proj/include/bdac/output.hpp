#pragma once

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bdac/config.hpp"
#include "bdac/error.hpp"
#include "bdac/sim.hpp"
#include "json.hpp"

namespace bdac {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

// JSON has no inf/nan; they are written as strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error("expected a number in output record");
}

inline json to_json(const EnergyBreakdown& e) {
  return {{"bulk", num(e.bulk)}, {"mixing", num(e.mixing)}, {"gradient", num(e.gradient)},
          {"total", num(e.total)}, {"bulk_rewritten", num(e.bulkRewritten)}};
}

inline json to_json(const DissipationReport& d) {
  return {{"bd_term", num(d.bdTerm)},         {"bd_exact", num(d.bdExact)},
          {"ac_term", num(d.acTerm)},         {"ac_square", num(d.acSquare)},
          {"max_summand", num(d.maxSummand)}, {"constraint_defect", num(d.constraintDefect)},
          {"dFdt_numeric", num(d.dFdtNumeric)}, {"defect", num(d.defect)}};
}

// Largest alpha with z_alpha > threshold * rho(z); 0 for an empty cell.
inline std::size_t largest_cluster(std::span<const double> z, double threshold = 1e-10) {
  const double cut = threshold * rho(z);
  for (std::size_t i = z.size(); i-- > 0;) {
    if (z[i] > cut) return i + 1;
  }
  return 0;
}

inline json header_record(const SimConfig& cfg) {
  return {{"type", "header"},
          {"schema_version", kSchemaVersion},
          {"config_hash", config_hash(cfg)},
          {"units",
           {{"length", "grid units (h)"},
            {"energy", "k_B theta"},
            {"time", "tau"},
            {"density", "clusters per unit volume"}}},
          {"scales", {{"k_B", cfg.kB}, {"theta", cfg.theta}, {"h", cfg.h}, {"tau", cfg.tau}}},
          {"config", serialize_config(cfg)}};
}

inline json output_record(const Diagnostics& d, const SimState& s, const std::string& hash) {
  json cells = {{"rho", json::array()}, {"N", json::array()}, {"z1", json::array()}, {"largest", json::array()}};
  for (std::size_t c = 0; c < s.z.cells(); ++c) {
    const auto zc = s.z.cell(c);
    cells["rho"].push_back(num(rho(zc)));
    cells["N"].push_back(num(count_N(zc)));
    cells["z1"].push_back(num(zc[0]));
    cells["largest"].push_back(largest_cluster(zc));
  }
  return {{"type", "record"},
          {"schema_version", kSchemaVersion},
          {"config_hash", hash},
          {"t", num(d.t)},
          {"step", d.step},
          {"dt", num(d.dt)},
          {"energy", to_json(d.energy)},
          {"dissipation", to_json(d.dissipation)},
          {"mass", {{"total", num(d.totalMass)}, {"max_drift", num(d.maxMassDrift)}}},
          {"chi", {{"min", num(d.minChi)}, {"max", num(d.maxChi)}}},
          {"cells", cells}};
}

inline json summary_record(const RunSummary& r, const std::string& hash) {
  return {{"type", "summary"},
          {"schema_version", kSchemaVersion},
          {"config_hash", hash},
          {"steps", r.steps},
          {"t", num(r.t)},
          {"max_mass_drift", num(r.maxMassDrift)},
          {"dissipation_violations", r.dissipationViolations},
          {"max_F_increase", num(r.maxFIncrease)},
          {"max_defect", num(r.maxDefect)},
          {"max_summand", num(r.maxSummand)},
          {"phase_violations", r.phaseViolations},
          {"rejected_steps", r.rejectedSteps},
          {"chi_min", num(r.minChi)},
          {"chi_max", num(r.maxChi)},
          {"F0", num(r.F0)},
          {"F", num(r.F)},
          {"wall_seconds", r.wallSeconds}};
}

// Line writer fed through a bounded queue by the engine thread. Every line
// is flushed as soon as it is written, so a killed run leaves whole lines.
class NdjsonWriter {
 public:
  explicit NdjsonWriter(const std::filesystem::path& path, std::size_t depth = 64)
      : out_(path, std::ios::binary | std::ios::trunc), depth_(depth) {
    if (!out_) throw Error("cannot open output file '" + path.string() + "'");
    worker_ = std::thread([this] { drain(); });
  }

  NdjsonWriter(const NdjsonWriter&) = delete;
  NdjsonWriter& operator=(const NdjsonWriter&) = delete;

  ~NdjsonWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void write(const json& record) {
    std::string line = record.dump();
    std::unique_lock lock(m_);
    notFull_.wait(lock, [&] { return queue_.size() < depth_ || failed_; });
    if (failed_) throw Error("output writer failed");
    queue_.push_back(std::move(line));
    notEmpty_.notify_one();
  }

  void close() {
    {
      std::lock_guard lock(m_);
      if (closed_) return;
      closed_ = true;
    }
    notEmpty_.notify_one();
    if (worker_.joinable()) worker_.join();
    if (failed_) throw Error("output writer failed");
  }

 private:
  void drain() {
    while (true) {
      std::string line;
      {
        std::unique_lock lock(m_);
        notEmpty_.wait(lock, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return;
        line = std::move(queue_.front());
        queue_.pop_front();
        notFull_.notify_one();
      }
      out_ << line << '\n';
      out_.flush();
      if (!out_) {
        std::lock_guard lock(m_);
        failed_ = true;
        notFull_.notify_all();
        return;
      }
    }
  }

  std::ofstream out_;
  std::size_t depth_;
  std::mutex m_;
  std::condition_variable notEmpty_, notFull_;
  std::deque<std::string> queue_;
  bool closed_ = false;
  bool failed_ = false;
  std::thread worker_;
};

// Parses an NDJSON file; an unterminated trailing line that fails to parse
// is treated as a torn write and dropped.
inline std::vector<json> read_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = text.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : text.size();
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      if (terminated) throw Error("corrupt record in '" + path.string() + "'");
    }
  }
  return out;
}

// One CSV grid: ny rows of nx values.
inline void write_csv_grid(const std::filesystem::path& path, const GridSpec& g, std::span<const double> values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "'");
  char buf[32];
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      std::snprintf(buf, sizeof buf, "%.17g", values[g.index(ix, iy)]);
      out << (ix ? "," : "") << buf;
    }
    out << '\n';
  }
}

// Writes chi_<step>.csv and z<alpha>_<step>.csv for the configured sizes.
inline void write_snapshots(const std::filesystem::path& dir, const SimState& s, const std::vector<std::size_t>& sizes) {
  const std::string step = std::to_string(s.step);
  write_csv_grid(dir / ("chi_" + step + ".csv"), s.grid, s.chi);
  std::vector<double> field(s.z.cells());
  for (std::size_t a : sizes) {
    for (std::size_t c = 0; c < s.z.cells(); ++c) field[c] = s.z(c, a - 1);
    write_csv_grid(dir / ("z" + std::to_string(a) + "_" + step + ".csv"), s.grid, field);
  }
}

inline json checkpoint_json(const SimConfig& cfg, const SimState& s) {
  return {{"type", "checkpoint"},
          {"schema_version", kSchemaVersion},
          {"config_hash", config_hash(cfg)},
          {"config", serialize_config(cfg)},
          {"t", s.t},
          {"step", s.step},
          {"grid", {{"dim", s.grid.dim}, {"nx", s.grid.nx}, {"ny", s.grid.ny}, {"h", s.grid.h}}},
          {"n", s.z.n()},
          {"z", s.z.data()},
          {"chi", s.chi},
          {"rho0", s.rho0},
          {"dt_hint", s.dtHint}};
}

// Written to a temporary name and renamed, so a checkpoint is never torn.
inline void write_checkpoint(const std::filesystem::path& path, const SimConfig& cfg, const SimState& s) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "'");
    out << checkpoint_json(cfg, s).dump() << '\n';
    if (!out) throw Error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

struct Checkpoint {
  SimConfig config;
  SimState state;
  std::string hash;
};

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path.string()));
  } catch (const json::exception& e) {
    throw Error("invalid checkpoint '" + path.string() + "': " + e.what());
  }
  try {
    if (j.at("type") != "checkpoint") throw Error("not a checkpoint file");
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw Error("unsupported checkpoint schema version");
    Checkpoint cp;
    cp.config = parse_config(j.at("config").get<std::string>());
    cp.hash = j.at("config_hash").get<std::string>();
    if (cp.hash != config_hash(cp.config)) throw Error("checkpoint config hash mismatch");
    auto& s = cp.state;
    const auto& g = j.at("grid");
    s.grid = GridSpec::make(g.at("dim").get<int>(), g.at("nx").get<std::size_t>(), g.at("ny").get<std::size_t>(),
                            g.at("h").get<double>());
    s.t = j.at("t").get<double>();
    s.step = j.at("step").get<std::size_t>();
    const auto n = j.at("n").get<std::size_t>();
    s.z = ClusterField(s.grid.cells(), n);
    s.z.data() = j.at("z").get<std::vector<double>>();
    s.chi = j.at("chi").get<std::vector<double>>();
    s.rho0 = j.at("rho0").get<std::vector<double>>();
    s.dtHint = j.at("dt_hint").get<std::vector<double>>();
    if (s.z.data().size() != s.grid.cells() * n || s.chi.size() != s.grid.cells() ||
        s.rho0.size() != s.grid.cells()) {
      throw Error("checkpoint arrays do not match the grid");
    }
    for (double v : s.z.data()) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error("checkpoint holds an invalid cluster density");
    }
    PhaseField check(s.chi);
    return cp;
  } catch (const json::exception& e) {
    throw Error("invalid checkpoint '" + path.string() + "': " + e.what());
  }
}

// Runs a simulation writing records.ndjson, snapshots and checkpoints to
// `dir`. The summary is appended as the last record, also on failure.
inline RunSummary run_with_output(Simulation& sim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = sim.config();
  const std::string hash = config_hash(cfg);
  NdjsonWriter writer(dir / "records.ndjson");
  writer.write(header_record(cfg));
  RunHooks hooks;
  hooks.record = [&](const Diagnostics& d, const SimState& s) { writer.write(output_record(d, s, hash)); };
  hooks.snapshot = [&](const SimState& s) { write_snapshots(dir, s, cfg.snapshotSizes); };
  hooks.checkpoint = [&](const SimState& s) {
    write_checkpoint(dir / ("checkpoint_" + std::to_string(s.step) + ".json"), cfg, s);
  };
  try {
    auto summary = sim.run(hooks);
    writer.write(summary_record(summary, hash));
    write_checkpoint(dir / "checkpoint_final.json", cfg, sim.state());
    writer.close();
    return summary;
  } catch (const std::exception& e) {
    writer.write({{"type", "error"}, {"schema_version", kSchemaVersion}, {"config_hash", hash},
                  {"t", num(sim.state().t)}, {"step", sim.state().step}, {"message", e.what()}});
    write_checkpoint(dir / "checkpoint_failed.json", cfg, sim.state());
    writer.close();
    throw;
  }
}

}  // namespace bdac
