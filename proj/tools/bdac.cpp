#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bdac/config.hpp"
#include "bdac/equilibrium.hpp"
#include "bdac/output.hpp"
#include "bdac/sim.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kValidation = 3, kRuntime = 4 };

using bdac::json;
using bdac::num;

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

int cmd_validate(const std::string& path) {
  const auto cfg = bdac::parse_config(bdac::read_text_file(path));
  const auto rep = bdac::validate_config(cfg);
  json errs = json::array(), warns = json::array();
  for (const auto& e : rep.errors) errs.push_back(e.text());
  for (const auto& w : rep.warnings) warns.push_back(w);
  json out = {{"config", path},
              {"config_hash", bdac::config_hash(cfg)},
              {"valid", rep.ok()},
              {"errors", errs},
              {"warnings", warns},
              {"c0", num(rep.c0)},
              {"growth",
               {{"finite", rep.growth.finite},
                {"monotone", rep.growth.monotone},
                {"decays", rep.growth.decays},
                {"tail_slope", num(rep.growth.tailSlope)},
                {"c1", num(rep.growth.c1)}}}};
  if (rep.equilibrium) out["equilibrium_condition"] = bdac::to_string(*rep.equilibrium);
  print(out);
  return rep.ok() ? kOk : kValidation;
}

int cmd_equilibrium(const std::string& path, double rhoBar, double chiBar) {
  const auto cfg = bdac::parse_config(bdac::read_text_file(path));
  const auto rm = cfg.rate_model();
  bdac::EquilibriumProblem p;
  p.rhoBar = rhoBar;
  p.chiBar = chiBar;
  p.rm = &rm;
  p.theta = cfg.theta;
  const auto sol = bdac::solve_equilibrium(p);
  json z = json::array();
  for (double v : sol.zBar) z.push_back(num(v));
  json out = {{"kBar", num(sol.kBar)},
              {"nBar", num(sol.nBar)},
              {"s", num(sol.s)},
              {"status", bdac::to_string(sol.status)},
              {"truncation", sol.zBar.size()},
              {"residuals",
               {{"f_tilde", num(sol.residualF)}, {"mass", num(sol.residualMass)}, {"flux", num(sol.residualFlux)}}},
              {"zBar", z}};
  if (sol.phaseResidual) out["phase_residual"] = num(*sol.phaseResidual);
  print(out);
  return kOk;
}

struct RunFlags {
  std::string outputDir = "out";
  std::optional<std::size_t> snapshotEvery;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

int cmd_run(const std::string& path, const RunFlags& f) {
  std::vector<std::string> warnings;
  auto cfg = bdac::load_config(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (f.snapshotEvery) cfg.snapshotEvery = *f.snapshotEvery;
  if (f.threads) cfg.threads = *f.threads;
  if (f.seed) cfg.seed = *f.seed;
  if (f.strict) cfg.strictDissipation = true;
  bdac::Simulation sim(cfg);
  const auto summary = bdac::run_with_output(sim, f.outputDir);
  print(bdac::summary_record(summary, bdac::config_hash(cfg)));
  return kOk;
}

int cmd_diagnose(const std::string& path) {
  auto cp = bdac::read_checkpoint(path);
  bdac::Simulation sim(cp.config, cp.state);
  const auto d = sim.diagnose();
  json out = bdac::output_record(d, sim.state(), cp.hash);
  out["type"] = "diagnosis";
  const double direct = d.energy.total;
  const double rewritten = bdac::total_free_energy_rewritten(
      bdac::FieldView{sim.state().grid, sim.state().z, sim.state().chi}, cp.config.phase_params(), sim.rate_model());
  out["energy_form_gap"] = num(std::abs(direct - rewritten));
  out.erase("cells");
  print(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Becker-Doring / Allen-Cahn nucleation simulator"};
  app.require_subcommand(1);

  std::string runPath, eqPath, valPath, diagPath;
  RunFlags flags;
  double rhoBar = 1.0, chiBar = 0.5;

  auto* run = app.add_subcommand("run", "integrate a configuration and write outputs");
  run->add_option("config", runPath, "configuration file")->required();
  run->add_option("--output-dir", flags.outputDir, "output directory");
  run->add_option("--snapshot-every", flags.snapshotEvery, "write CSV snapshots every k steps");
  run->add_option("--threads", flags.threads, "worker threads for the cluster kinetics")->check(CLI::PositiveNumber);
  run->add_option("--seed", flags.seed, "seed for the initial perturbation");
  run->add_flag("--strict-dissipation", flags.strict, "fail when the free energy increases beyond tolerance");

  auto* eq = app.add_subcommand("equilibrium", "solve for the equilibrium at prescribed mass and phase");
  eq->add_option("config", eqPath, "configuration file")->required();
  eq->add_option("--rho", rhoBar, "total mass")->required();
  eq->add_option("--chi", chiBar, "constant phase value")->required();

  auto* val = app.add_subcommand("validate", "check the configuration against the model assumptions");
  val->add_option("config", valPath, "configuration file")->required();

  auto* diag = app.add_subcommand("diagnose", "recompute energies and dissipation of a checkpoint");
  diag->add_option("checkpoint", diagPath, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(runPath, flags);
    if (*eq) return cmd_equilibrium(eqPath, rhoBar, chiBar);
    if (*val) return cmd_validate(valPath);
    if (*diag) return cmd_diagnose(diagPath);
  } catch (const bdac::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const bdac::AssumptionViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
