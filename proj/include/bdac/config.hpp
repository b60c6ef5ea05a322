#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bdac/equilibrium.hpp"
#include "bdac/error.hpp"
#include "bdac/growth.hpp"
#include "bdac/mollifier.hpp"
#include "bdac/sim.hpp"
#include "bdac/toml_lite.hpp"

namespace bdac {

namespace detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const toml::Document& doc) : doc_(doc) {}

  const json* table(const std::string& path) const {
    const json* node = &doc_.root;
    std::string sofar;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      sofar += (sofar.empty() ? "" : ".") + key;
      if (!node->contains(key)) return nullptr;
      node = &(*node)[key];
      if (!node->is_object()) throw ConfigError("expected a table", sofar, doc_.line_of(sofar));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  // Rejects keys of `path` that were not consumed.
  void finish(const std::string& path, const std::set<std::string>& known) const {
    const json* t = path.empty() ? &doc_.root : table(path);
    if (t == nullptr) return;
    for (auto it = t->begin(); it != t->end(); ++it) {
      if (!known.count(it.key())) {
        const std::string full = path.empty() ? it.key() : path + "." + it.key();
        throw ConfigError("unknown key", full, doc_.line_of(full));
      }
    }
  }

  const json* get(const std::string& path, const std::string& key) const {
    const json* t = path.empty() ? &doc_.root : table(path);
    if (t == nullptr || !t->contains(key)) return nullptr;
    return &(*t)[key];
  }

  std::string full(const std::string& path, const std::string& key) const {
    return path.empty() ? key : path + "." + key;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& what) const {
    const std::string f = full(path, key);
    throw ConfigError(what, f, doc_.line_of(f));
  }

  void number(const std::string& path, const std::string& key, double& out) const {
    if (const json* v = get(path, key)) {
      if (!v->is_number()) fail(path, key, "expected a number");
      out = v->get<double>();
    }
  }

  template <class U>
  void integer(const std::string& path, const std::string& key, U& out, long long lo) const {
    if (const json* v = get(path, key)) {
      if (!v->is_number_integer()) fail(path, key, "expected an integer");
      const long long x = v->get<long long>();
      if (x < lo) fail(path, key, "must be >= " + std::to_string(lo));
      out = static_cast<U>(x);
    }
  }

  void boolean(const std::string& path, const std::string& key, bool& out) const {
    if (const json* v = get(path, key)) {
      if (!v->is_boolean()) fail(path, key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& path, const std::string& key, std::string& out) const {
    if (const json* v = get(path, key)) {
      if (!v->is_string()) fail(path, key, "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& path, const std::string& key, std::vector<double>& out) const {
    if (const json* v = get(path, key)) {
      if (!v->is_array()) fail(path, key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) fail(path, key, "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void sizes(const std::string& path, const std::string& key, std::vector<std::size_t>& out) const {
    if (const json* v = get(path, key)) {
      if (!v->is_array()) fail(path, key, "expected an array of positive integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<long long>() < 1) fail(path, key, "expected an array of positive integers");
        out.push_back(static_cast<std::size_t>(e.get<long long>()));
      }
    }
  }

 private:
  const toml::Document& doc_;
};

inline EnergyProfile read_profile(const Reader& r, const std::string& path, EnergyProfile fallback) {
  if (r.table(path) == nullptr) return fallback;
  std::string kind = "constant";
  r.string(path, "kind", kind);
  EnergyProfile p;
  if (kind == "constant") {
    double v = 0.0;
    if (!r.get(path, "value")) r.fail(path, "value", "constant profile needs a value");
    r.number(path, "value", v);
    p = EnergyProfile::constant(v);
    r.finish(path, {"kind", "value"});
  } else if (kind == "volume_surface") {
    r.number(path, "volume", p.volume);
    r.number(path, "surface", p.surface);
    r.number(path, "offset", p.offset);
    r.finish(path, {"kind", "volume", "surface", "offset"});
  } else if (kind == "table") {
    std::vector<double> t;
    r.numbers(path, "table", t);
    if (t.empty()) r.fail(path, "table", "table profile needs a non-empty table");
    p = EnergyProfile::from_table(t);
    r.number(path, "offset", p.offset);
    r.number(path, "volume", p.volume);
    r.number(path, "surface", p.surface);
    r.finish(path, {"kind", "table", "offset", "volume", "surface"});
  } else {
    r.fail(path, "kind", "unknown profile kind '" + kind + "'");
  }
  return p;
}

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string fmt_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

inline std::string fmt_array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt_double(v[i]);
  return out + "]";
}

inline void write_profile(std::ostringstream& os, const std::string& path, const EnergyProfile& p) {
  os << "\n[" << path << "]\n";
  if (!p.table.empty()) {
    os << "kind = \"table\"\n";
    os << "table = " << fmt_array(p.table) << "\n";
    os << "offset = " << fmt_double(p.offset) << "\n";
    os << "volume = " << fmt_double(p.volume) << "\n";
    os << "surface = " << fmt_double(p.surface) << "\n";
  } else if (p.volume == 0.0 && p.surface == 0.0) {
    os << "kind = \"constant\"\nvalue = " << fmt_double(p.offset) << "\n";
  } else {
    os << "kind = \"volume_surface\"\n";
    os << "volume = " << fmt_double(p.volume) << "\n";
    os << "surface = " << fmt_double(p.surface) << "\n";
    os << "offset = " << fmt_double(p.offset) << "\n";
  }
}

}  // namespace detail

// Parses configuration text; checks the schema but not the assumptions.
inline SimConfig parse_config(const std::string& text) {
  const auto doc = toml::parse(text);
  const detail::Reader r(doc);
  SimConfig c;
  r.finish("", {"model", "grid", "initial", "time", "output", "integrator"});

  r.integer("model", "n", c.n, 1);
  r.number("model", "k_B", c.kB);
  r.number("model", "theta", c.theta);
  r.number("model", "b1", c.b1);
  r.number("model", "b2", c.b2);
  r.number("model", "gamma", c.gamma);
  r.number("model", "tau", c.tau);
  r.number("model", "eps", c.eps);
  std::string mode = to_string(c.kMode);
  r.string("model", "k_mode", mode);
  if (mode == "self_consistent") {
    c.kMode = KMode::SelfConsistent;
  } else if (mode == "fixed") {
    c.kMode = KMode::Fixed;
  } else {
    r.fail("model", "k_mode", "expected \"self_consistent\" or \"fixed\"");
  }
  r.number("model", "k_fixed", c.kFixed);
  c.e1 = detail::read_profile(r, "model.enthalpy.phase1", c.e1);
  c.e2 = detail::read_profile(r, "model.enthalpy.phase2", c.e2);
  r.finish("model.enthalpy", {"phase1", "phase2"});
  r.number("model.activation", "phase1", c.ea.phase1);
  r.number("model.activation", "phase2", c.ea.phase2);
  r.finish("model.activation", {"phase1", "phase2"});
  r.finish("model", {"n", "k_B", "theta", "b1", "b2", "gamma", "tau", "eps", "k_mode", "k_fixed",
                     "enthalpy", "activation"});

  r.integer("grid", "dim", c.dim, 1);
  r.integer("grid", "nx", c.nx, 1);
  r.integer("grid", "ny", c.ny, 1);
  r.number("grid", "h", c.h);
  if (c.dim == 1 && r.get("grid", "ny") && c.ny != 1) r.fail("grid", "ny", "1D grids have ny = 1");
  if (c.dim == 1) c.ny = 1;
  r.finish("grid", {"dim", "nx", "ny", "h"});

  auto& in = c.init;
  r.string("initial", "kind", in.kind);
  r.number("initial", "rho", in.rho);
  r.number("initial", "ratio", in.ratio);
  r.numbers("initial", "table", in.table);
  r.number("initial", "perturbation", in.perturbation);
  r.string("initial", "chi_kind", in.chiKind);
  r.number("initial", "chi", in.chi);
  r.number("initial", "chi_low", in.chiLow);
  r.number("initial", "chi_high", in.chiHigh);
  r.number("initial", "chi_width", in.chiWidth);
  r.integer("initial", "seed", c.seed, 0);
  r.finish("initial", {"kind", "rho", "ratio", "table", "perturbation", "chi_kind", "chi", "chi_low",
                       "chi_high", "chi_width", "seed"});

  r.number("time", "T", c.T);
  r.number("time", "dt", c.dt);
  r.number("time", "dt_min", c.dtMin);
  r.finish("time", {"T", "dt", "dt_min"});

  r.integer("output", "every", c.outputEvery, 0);
  r.integer("output", "snapshot_every", c.snapshotEvery, 0);
  r.integer("output", "checkpoint_every", c.checkpointEvery, 0);
  r.sizes("output", "snapshot_sizes", c.snapshotSizes);
  r.boolean("output", "strict_dissipation", c.strictDissipation);
  r.number("output", "dissipation_tol", c.dissipationTol);
  r.integer("output", "threads", c.threads, 1);
  r.finish("output", {"every", "snapshot_every", "checkpoint_every", "snapshot_sizes", "strict_dissipation",
                      "dissipation_tol", "threads"});

  r.number("integrator", "rtol", c.rtol);
  r.number("integrator", "atol_fraction", c.atolFraction);
  r.number("integrator", "phase_delta", c.phaseDelta);
  r.finish("integrator", {"rtol", "atol_fraction", "phase_delta"});

  const auto need = [&](bool ok, const std::string& path, const std::string& key, const std::string& what) {
    if (!ok) r.fail(path, key, what);
  };
  need(c.kB > 0.0 && std::isfinite(c.kB), "model", "k_B", "must be positive");
  need(c.theta > 0.0 && std::isfinite(c.theta), "model", "theta", "must be positive");
  need(c.b1 > 0.0 && c.b1 <= 1.0, "model", "b1", "must lie in (0,1]");
  need(c.b2 > 0.0 && c.b2 <= 1.0, "model", "b2", "must lie in (0,1]");
  need(c.gamma > 0.0 && std::isfinite(c.gamma), "model", "gamma", "must be positive");
  need(c.tau > 0.0 && std::isfinite(c.tau), "model", "tau", "must be positive");
  need(std::isnan(c.eps) || (c.eps >= 0.0 && std::isfinite(c.eps)), "model", "eps", "must be non-negative");
  need(c.kMode != KMode::Fixed || (c.kFixed > 0.0 && std::isfinite(c.kFixed)), "model", "k_fixed",
       "must be positive");
  need(c.dim == 1 || c.dim == 2, "grid", "dim", "must be 1 or 2");
  need(c.nx >= 3, "grid", "nx", "needs at least 3 cells");
  need(c.dim == 1 || c.ny >= 3, "grid", "ny", "needs at least 3 cells");
  need(c.h > 0.0 && std::isfinite(c.h), "grid", "h", "must be positive");
  need(in.rho > 0.0 || in.kind == "table", "initial", "rho", "must be positive");
  need(in.perturbation >= 0.0 && in.perturbation < 1.0, "initial", "perturbation", "must lie in [0,1)");
  need(in.chi >= 0.0 && in.chi <= 1.0, "initial", "chi", "must lie in [0,1]");
  need(in.chiLow > 0.0 && in.chiHigh < 1.0 && in.chiLow <= in.chiHigh, "initial", "chi_low",
       "phase range must satisfy 0 < chi_low <= chi_high < 1");
  need(in.chiWidth > 0.0, "initial", "chi_width", "must be positive");
  need(in.ratio > 0.0, "initial", "ratio", "must be positive");
  const std::set<std::string> kinds{"monomers", "geometric", "equilibrium", "table"};
  need(kinds.count(in.kind) > 0, "initial", "kind", "unknown initial data kind");
  const std::set<std::string> chiKinds{"uniform", "tanh", "random"};
  need(chiKinds.count(in.chiKind) > 0, "initial", "chi_kind", "unknown phase initial data kind");
  need(in.kind != "table" || !in.table.empty(), "initial", "table", "table initial data needs a table");
  need(in.table.size() <= c.n, "initial", "table", "longer than n");
  need(c.T >= 0.0 && std::isfinite(c.T), "time", "T", "must be non-negative");
  need(c.dt > 0.0, "time", "dt", "must be positive");
  need(c.dtMin > 0.0 && c.dtMin <= c.dt, "time", "dt_min", "must lie in (0, dt]");
  need(c.rtol > 0.0, "integrator", "rtol", "must be positive");
  need(c.atolFraction > 0.0, "integrator", "atol_fraction", "must be positive");
  need(c.phaseDelta > 0.0 && c.phaseDelta < 0.5, "integrator", "phase_delta", "must lie in (0, 0.5)");
  need(c.dissipationTol >= 0.0, "output", "dissipation_tol", "must be non-negative");
  for (std::size_t a : c.snapshotSizes) need(a <= c.n, "output", "snapshot_sizes", "size exceeds n");
  return c;
}

// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const SimConfig& c) {
  using detail::fmt_double;
  using detail::fmt_string;
  std::ostringstream os;
  os << "[model]\n";
  os << "n = " << c.n << "\n";
  os << "k_B = " << fmt_double(c.kB) << "\n";
  os << "theta = " << fmt_double(c.theta) << "\n";
  os << "b1 = " << fmt_double(c.b1) << "\n";
  os << "b2 = " << fmt_double(c.b2) << "\n";
  os << "gamma = " << fmt_double(c.gamma) << "\n";
  os << "tau = " << fmt_double(c.tau) << "\n";
  if (!std::isnan(c.eps)) os << "eps = " << fmt_double(c.eps) << "\n";
  os << "k_mode = " << fmt_string(to_string(c.kMode)) << "\n";
  os << "k_fixed = " << fmt_double(c.kFixed) << "\n";
  detail::write_profile(os, "model.enthalpy.phase1", c.e1);
  detail::write_profile(os, "model.enthalpy.phase2", c.e2);
  os << "\n[model.activation]\nphase1 = " << fmt_double(c.ea.phase1) << "\nphase2 = " << fmt_double(c.ea.phase2)
     << "\n";
  os << "\n[grid]\ndim = " << c.dim << "\nnx = " << c.nx << "\nny = " << c.ny << "\nh = " << fmt_double(c.h) << "\n";
  const auto& in = c.init;
  os << "\n[initial]\n";
  os << "kind = " << fmt_string(in.kind) << "\n";
  os << "rho = " << fmt_double(in.rho) << "\n";
  os << "ratio = " << fmt_double(in.ratio) << "\n";
  if (!in.table.empty()) os << "table = " << detail::fmt_array(in.table) << "\n";
  os << "perturbation = " << fmt_double(in.perturbation) << "\n";
  os << "chi_kind = " << fmt_string(in.chiKind) << "\n";
  os << "chi = " << fmt_double(in.chi) << "\n";
  os << "chi_low = " << fmt_double(in.chiLow) << "\n";
  os << "chi_high = " << fmt_double(in.chiHigh) << "\n";
  os << "chi_width = " << fmt_double(in.chiWidth) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "\n[time]\nT = " << fmt_double(c.T) << "\ndt = " << fmt_double(c.dt) << "\ndt_min = " << fmt_double(c.dtMin)
     << "\n";
  os << "\n[output]\nevery = " << c.outputEvery << "\nsnapshot_every = " << c.snapshotEvery
     << "\ncheckpoint_every = " << c.checkpointEvery << "\nsnapshot_sizes = [";
  for (std::size_t i = 0; i < c.snapshotSizes.size(); ++i) os << (i ? ", " : "") << c.snapshotSizes[i];
  os << "]\nstrict_dissipation = " << (c.strictDissipation ? "true" : "false")
     << "\ndissipation_tol = " << fmt_double(c.dissipationTol) << "\nthreads = " << c.threads << "\n";
  os << "\n[integrator]\nrtol = " << fmt_double(c.rtol) << "\natol_fraction = " << fmt_double(c.atolFraction)
     << "\nphase_delta = " << fmt_double(c.phaseDelta) << "\n";
  return os.str();
}

// FNV-1a over the canonical form, as 16 hex digits.
inline std::string config_hash(const SimConfig& c) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

struct ValidationIssue {
  // "A1".."A4", or empty for a setup problem.
  std::string assumption;
  std::string what;

  std::string text() const { return assumption.empty() ? "setup: " + what : "(" + assumption + ") " + what; }
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<std::string> warnings;
  GrowthReport growth;
  double c0 = 0.0;
  std::optional<EqStatus> equilibrium;

  bool ok() const noexcept { return errors.empty(); }
};

// Checks (A1)-(A4) and the numerical setup for the configuration.
inline ValidationReport validate_config(const SimConfig& c) {
  ValidationReport rep;
  std::optional<RateModel> rm;
  try {
    rm.emplace(c.rate_model());
  } catch (const Error& e) {
    rep.errors.push_back({"A4", e.what()});
    return rep;
  }
  double c0 = std::numeric_limits<double>::infinity();
  for (int phase : {1, 2}) {
    const double inf = rm->enthalpy(phase).infimum();
    if (!std::isfinite(inf)) {
      rep.errors.push_back({"A4", "enthalpy of phase " + std::to_string(phase) + " is unbounded below"});
    } else if (inf == 0.0) {
      rep.warnings.push_back("(A4) enthalpy of phase " + std::to_string(phase) +
                             " reaches zero; rates rely on the activation energy alone");
    }
  }
  for (double chi : {0.0, 0.5, 1.0}) {
    const EvaporationSeries series(*rm, chi);
    if (series.a4_holds()) c0 = std::min(c0, series.c0());
  }
  rep.c0 = std::isfinite(c0) ? c0 : 0.0;

  std::vector<double> chis;
  for (int i = 0; i <= 8; ++i) chis.push_back(i / 8.0);
  std::vector<double> ks;
  if (c.kMode == KMode::Fixed) {
    ks.push_back(c.kFixed);
  } else {
    // z_1 <= N bounds the self-consistent K by Gamma_1 / s.
    for (double chi : chis) ks.push_back(std::exp(rm->log_evaporation_rate(1, chi) - rm->log_s(chi)));
  }
  rep.growth = check_growth_assumptions(*rm, ks, chis, c.n);
  for (const auto& w : rep.growth.warnings) rep.warnings.push_back(w);

  try {
    const auto g = c.grid();
    if (c.mollifier_eps() > 0.0) MollifierKernel::bump(g, c.mollifier_eps());
    make_initial_state(c);
  } catch (const AssumptionViolation& e) {
    std::string what = e.what();
    const auto colon = what.find(": ");
    rep.errors.push_back({e.assumption(), colon == std::string::npos ? what : what.substr(colon + 2)});
  } catch (const Error& e) {
    rep.errors.push_back({"", e.what()});
  }
  if (c.init.kind == "equilibrium" && rep.errors.empty()) {
    rep.equilibrium = check_EQ(c.init.chi, *rm);
  }
  return rep;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Reads, parses and validates. Warnings are appended to `warnings`.
inline SimConfig load_config(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  SimConfig c = parse_config(read_text_file(path));
  const auto rep = validate_config(c);
  if (warnings) warnings->insert(warnings->end(), rep.warnings.begin(), rep.warnings.end());
  if (!rep.ok()) {
    const auto& first = rep.errors.front();
    if (first.assumption.empty()) throw ConfigError(first.what);
    throw AssumptionViolation(first.assumption, first.what);
  }
  return c;
}

}  // namespace bdac
