#include "kerrcat/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include "kerrcat/dynamics.hpp"
#include "kerrcat/errors.hpp"
#include "kerrcat/fock.hpp"
#include "kerrcat/parallel.hpp"
#include "kerrcat/tomography.hpp"

namespace kerrcat {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string num(double v) { return format_cell(v); }

// --- json access with actionable errors -----------------------------------

std::string key_path(const char* where, const char* key) {
  return std::string(where) + "." + key;
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(std::string(where) + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) fail(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& obj, const char* where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(key_path(where, key) + " must be a number");
  return v.get<double>();
}

int get_int(const json& obj, const char* where, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(key_path(where, key) + " must be an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const char* where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(key_path(where, key) + " must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const char* where, const char* key,
                    const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(key_path(where, key) + " must be a string");
  return v.get<std::string>();
}

// Accepts a single number or an array of numbers.
std::vector<double> get_list(const json& obj, const char* where, const char* key) {
  const json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(key_path(where, key) + " must be a number or an array");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) fail(key_path(where, key) + " entries must be numbers");
    out.push_back(e.get<double>());
  }
  if (out.empty()) fail(key_path(where, key) + " must not be empty");
  return out;
}

// --- misc ------------------------------------------------------------------

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[std::size_t(i)] = n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1);
  return v;
}

IntegratorOptions integrator_of(const PhysicalConfig& p) {
  IntegratorOptions o;
  o.rtol = p.rtol;
  o.atol = p.atol;
  return o;
}

NoiseParams noise_of(const PhysicalConfig& p) {
  NoiseParams n;
  n.t1_us = p.t1_us;
  n.t2_us = p.t2_us;
  return n;
}

RampSpec ramp_spec_for(const PhysicalConfig& p, const SweepPoint& pt,
                       CompensationStrategy strategy, double hold_ns) {
  RampSpec r;
  r.eps2_kc_mhz = pt.eps2_kc_mhz;
  r.t_up_ns = p.t_up_ns;
  r.t_hold_ns = hold_ns;
  r.t_down_ns = -1.0;  // mirror
  r.sharpness = p.sharpness;
  r.strategy = strategy;
  r.gamma_per_mhz = p.gamma_per_mhz;
  r.static_delta_as_mhz = pt.delta_as_kc_mhz;
  return r;
}

void prepare_out(const ExperimentConfig& cfg, const RunContext& ctx) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.out_dir, ec);
  if (ec)
    throw Error("cannot create output directory " + ctx.out_dir.string() + ": " +
                ec.message());
  write_text_file(ctx.out_dir / "config.echo.json", canonical_config_json(cfg));
}

json summary_base(const ExperimentConfig& cfg, const RunContext& ctx,
                  const char* experiment) {
  json s;
  s["version"] = std::string(kVersionString);
  s["experiment"] = experiment;
  s["strategy"] = strategy_choice_name(cfg.strategy);
  s["config_hash"] = config_hash_hex(cfg);
  s["seed"] = ctx.seed;
  return s;
}

void write_summary(const RunContext& ctx, const json& s) {
  write_text_file(ctx.out_dir / "summary.json", s.dump(2) + "\n");
}

void check_experiment_tag(const ExperimentConfig& cfg, const char* sub) {
  if (!cfg.experiment.empty() && cfg.experiment != sub)
    fail("config protocol.experiment is '" + cfg.experiment + "' but the '" +
         std::string(sub) + "' command was invoked");
}

// --- config sections -------------------------------------------------------

void parse_physical(const json& j, PhysicalConfig& p) {
  check_keys(j, "physical",
             {"k_mhz", "eps2_kc_mhz", "delta_as_kc_mhz", "gamma_per_mhz", "t_up_ns",
              "sharpness", "t1_us", "t2_us", "dim", "rtol", "atol"});
  if (j.contains("eps2_kc_mhz") && j.contains("delta_as_kc_mhz"))
    fail("physical: give either eps2_kc_mhz or delta_as_kc_mhz, not both");
  p.k_mhz = get_num(j, "physical", "k_mhz", p.k_mhz);
  if (j.contains("delta_as_kc_mhz")) {
    p.delta_as_kc_mhz = get_list(j, "physical", "delta_as_kc_mhz");
    p.eps2_kc_mhz.clear();
  }
  if (j.contains("eps2_kc_mhz")) p.eps2_kc_mhz = get_list(j, "physical", "eps2_kc_mhz");
  p.gamma_per_mhz = get_num(j, "physical", "gamma_per_mhz", p.gamma_per_mhz);
  p.t_up_ns = get_num(j, "physical", "t_up_ns", p.t_up_ns);
  p.sharpness = get_num(j, "physical", "sharpness", p.sharpness);
  p.t1_us = get_num(j, "physical", "t1_us", p.t1_us);
  p.t2_us = get_num(j, "physical", "t2_us", p.t2_us);
  p.dim = get_int(j, "physical", "dim", p.dim);
  p.rtol = get_num(j, "physical", "rtol", p.rtol);
  p.atol = get_num(j, "physical", "atol", p.atol);
}

void parse_protocol(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "protocol", {"strategy", "experiment", "hold_ns"});
  cfg.strategy = parse_strategy(
      get_str(j, "protocol", "strategy", strategy_choice_name(cfg.strategy)));
  cfg.experiment = get_str(j, "protocol", "experiment", cfg.experiment);
  cfg.hold_ns = get_num(j, "protocol", "hold_ns", cfg.hold_ns);
}

void parse_levels(const json& j, LevelsConfig& c) {
  check_keys(j, "levels",
             {"delta_lo_k", "delta_hi_k", "delta_points", "eps2_points",
              "path_delta_pi_k", "path_points"});
  c.delta_lo_k = get_num(j, "levels", "delta_lo_k", c.delta_lo_k);
  c.delta_hi_k = get_num(j, "levels", "delta_hi_k", c.delta_hi_k);
  c.delta_points = get_int(j, "levels", "delta_points", c.delta_points);
  c.eps2_points = get_int(j, "levels", "eps2_points", c.eps2_points);
  c.path_delta_pi_k = get_num(j, "levels", "path_delta_pi_k", c.path_delta_pi_k);
  c.path_points = get_int(j, "levels", "path_points", c.path_points);
}

void parse_ramp(const json& j, RampConfig& c) {
  check_keys(j, "ramp",
             {"samples", "emit_wigner", "wigner_half_width", "wigner_points"});
  c.samples = get_int(j, "ramp", "samples", c.samples);
  c.emit_wigner = get_bool(j, "ramp", "emit_wigner", c.emit_wigner);
  c.wigner_half_width = get_num(j, "ramp", "wigner_half_width", c.wigner_half_width);
  c.wigner_points = get_int(j, "ramp", "wigner_points", c.wigner_points);
}

void parse_qpt(const json& j, QptConfig& c) {
  check_keys(j, "qpt",
             {"space", "run_noiseless", "run_lindblad", "with_spam", "spam_z_contrast",
              "spam_x_contrast", "x_duration_ns", "emit_r_matrices"});
  c.space = get_str(j, "qpt", "space", c.space);
  c.run_noiseless = get_bool(j, "qpt", "run_noiseless", c.run_noiseless);
  c.run_lindblad = get_bool(j, "qpt", "run_lindblad", c.run_lindblad);
  c.with_spam = get_bool(j, "qpt", "with_spam", c.with_spam);
  c.spam_z_contrast = get_num(j, "qpt", "spam_z_contrast", c.spam_z_contrast);
  c.spam_x_contrast = get_num(j, "qpt", "spam_x_contrast", c.spam_x_contrast);
  c.x_duration_ns = get_num(j, "qpt", "x_duration_ns", c.x_duration_ns);
  c.emit_r_matrices = get_bool(j, "qpt", "emit_r_matrices", c.emit_r_matrices);
}

void parse_nems(const json& j, NemsConfig& c) {
  check_keys(j, "nems",
             {"ej_mhz", "ec_mhz", "r1", "r2", "r3", "n_r", "n_l", "delta_phi_over_pi",
              "eps_p"});
  c.junction.ej_mhz = get_num(j, "nems", "ej_mhz", c.junction.ej_mhz);
  c.junction.ec_mhz = get_num(j, "nems", "ec_mhz", c.junction.ec_mhz);
  c.junction.r1 = get_num(j, "nems", "r1", c.junction.r1);
  c.junction.r2 = get_num(j, "nems", "r2", c.junction.r2);
  c.junction.r3 = get_num(j, "nems", "r3", c.junction.r3);
  c.junction.n_r = get_int(j, "nems", "n_r", c.junction.n_r);
  c.junction.n_l = get_int(j, "nems", "n_l", c.junction.n_l);
  c.delta_phi_rad = std::numbers::pi * get_num(j, "nems", "delta_phi_over_pi",
                                               c.delta_phi_rad / std::numbers::pi);
  if (j.contains("eps_p")) c.eps_p = get_list(j, "nems", "eps_p");
}

void parse_calibrate(const json& j, CalibrateConfig& c) {
  check_keys(j, "calibrate",
             {"delta_as_candidates_mhz", "hold_ns", "theta2_rad", "x_duration_ns",
              "omega_x_probe_mhz"});
  if (j.contains("delta_as_candidates_mhz"))
    c.delta_as_candidates_mhz = get_list(j, "calibrate", "delta_as_candidates_mhz");
  if (j.contains("hold_ns")) c.hold_ns = get_list(j, "calibrate", "hold_ns");
  if (j.contains("theta2_rad")) c.theta2_rad = get_list(j, "calibrate", "theta2_rad");
  c.x_duration_ns = get_num(j, "calibrate", "x_duration_ns", c.x_duration_ns);
  c.omega_x_probe_mhz = get_num(j, "calibrate", "omega_x_probe_mhz", c.omega_x_probe_mhz);
}

void parse_io(const json& j, IoConfig& c) {
  check_keys(j, "io", {"out_dir", "seed"});
  c.out_dir = get_str(j, "io", "out_dir", c.out_dir);
  if (j.contains("seed")) {
    const json& v = j.at("seed");
    if (v.is_number_integer() && v.get<long long>() < 0) fail("io.seed must be >= 0");
    if (!v.is_number_integer() && !v.is_number_unsigned())
      fail("io.seed must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
}

json config_to_json(const ExperimentConfig& c) {
  json ph{{"k_mhz", c.physical.k_mhz},
          {"gamma_per_mhz", c.physical.gamma_per_mhz},
          {"t_up_ns", c.physical.t_up_ns},
          {"sharpness", c.physical.sharpness},
          {"t1_us", c.physical.t1_us},
          {"t2_us", c.physical.t2_us},
          {"dim", c.physical.dim},
          {"rtol", c.physical.rtol},
          {"atol", c.physical.atol}};
  if (!c.physical.delta_as_kc_mhz.empty())
    ph["delta_as_kc_mhz"] = c.physical.delta_as_kc_mhz;
  else
    ph["eps2_kc_mhz"] = c.physical.eps2_kc_mhz;

  json j;
  j["physical"] = ph;
  j["protocol"] = json{{"strategy", strategy_choice_name(c.strategy)},
                       {"experiment", c.experiment},
                       {"hold_ns", c.hold_ns}};
  j["levels"] = json{{"delta_lo_k", c.levels.delta_lo_k},
                     {"delta_hi_k", c.levels.delta_hi_k},
                     {"delta_points", c.levels.delta_points},
                     {"eps2_points", c.levels.eps2_points},
                     {"path_delta_pi_k", c.levels.path_delta_pi_k},
                     {"path_points", c.levels.path_points}};
  j["ramp"] = json{{"samples", c.ramp.samples},
                   {"emit_wigner", c.ramp.emit_wigner},
                   {"wigner_half_width", c.ramp.wigner_half_width},
                   {"wigner_points", c.ramp.wigner_points}};
  j["qpt"] = json{{"space", c.qpt.space},
                  {"run_noiseless", c.qpt.run_noiseless},
                  {"run_lindblad", c.qpt.run_lindblad},
                  {"with_spam", c.qpt.with_spam},
                  {"spam_z_contrast", c.qpt.spam_z_contrast},
                  {"spam_x_contrast", c.qpt.spam_x_contrast},
                  {"x_duration_ns", c.qpt.x_duration_ns},
                  {"emit_r_matrices", c.qpt.emit_r_matrices}};
  j["nems"] = json{{"ej_mhz", c.nems.junction.ej_mhz},
                   {"ec_mhz", c.nems.junction.ec_mhz},
                   {"r1", c.nems.junction.r1},
                   {"r2", c.nems.junction.r2},
                   {"r3", c.nems.junction.r3},
                   {"n_r", c.nems.junction.n_r},
                   {"n_l", c.nems.junction.n_l},
                   {"delta_phi_over_pi", c.nems.delta_phi_rad / std::numbers::pi},
                   {"eps_p", c.nems.eps_p}};
  j["calibrate"] = json{{"delta_as_candidates_mhz", c.calibrate.delta_as_candidates_mhz},
                        {"hold_ns", c.calibrate.hold_ns},
                        {"theta2_rad", c.calibrate.theta2_rad},
                        {"x_duration_ns", c.calibrate.x_duration_ns},
                        {"omega_x_probe_mhz", c.calibrate.omega_x_probe_mhz}};
  j["io"] = json{{"out_dir", c.io.out_dir}, {"seed", c.io.seed}};
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Strategy helpers.

StrategyChoice parse_strategy(const std::string& name) {
  if (name == "none") return StrategyChoice::None;
  if (name == "static") return StrategyChoice::Static;
  if (name == "dynamic") return StrategyChoice::Dynamic;
  if (name == "both") return StrategyChoice::Both;
  fail("protocol.strategy must be one of none|static|dynamic|both (got '" + name +
       "')");
}

std::string strategy_choice_name(StrategyChoice choice) {
  switch (choice) {
    case StrategyChoice::None: return "none";
    case StrategyChoice::Static: return "static";
    case StrategyChoice::Dynamic: return "dynamic";
    case StrategyChoice::Both: return "both";
  }
  return "dynamic";
}

std::string strategy_name(CompensationStrategy strategy) {
  switch (strategy) {
    case CompensationStrategy::None: return "none";
    case CompensationStrategy::Static: return "static";
    case CompensationStrategy::Dynamic: return "dynamic";
  }
  return "dynamic";
}

std::vector<CompensationStrategy> expand_strategies(StrategyChoice choice) {
  switch (choice) {
    case StrategyChoice::None: return {CompensationStrategy::None};
    case StrategyChoice::Static: return {CompensationStrategy::Static};
    case StrategyChoice::Dynamic: return {CompensationStrategy::Dynamic};
    case StrategyChoice::Both:
      return {CompensationStrategy::Static, CompensationStrategy::Dynamic};
  }
  return {CompensationStrategy::Dynamic};
}

// ---------------------------------------------------------------------------
// Config load / validate / echo.

ExperimentConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config: top level must be a JSON object");
  check_keys(j, "config",
             {"physical", "protocol", "io", "levels", "ramp", "qpt", "nems",
              "calibrate"});
  ExperimentConfig cfg;
  if (j.contains("physical")) parse_physical(j.at("physical"), cfg.physical);
  if (j.contains("protocol")) parse_protocol(j.at("protocol"), cfg);
  if (j.contains("levels")) parse_levels(j.at("levels"), cfg.levels);
  if (j.contains("ramp")) parse_ramp(j.at("ramp"), cfg.ramp);
  if (j.contains("qpt")) parse_qpt(j.at("qpt"), cfg.qpt);
  if (j.contains("nems")) parse_nems(j.at("nems"), cfg.nems);
  if (j.contains("calibrate")) parse_calibrate(j.at("calibrate"), cfg.calibrate);
  if (j.contains("io")) parse_io(j.at("io"), cfg.io);
  if (cfg.nems.eps_p.empty()) cfg.nems.eps_p = linspace(0.01, 0.30, 30);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("config file not readable: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  const PhysicalConfig& p = cfg.physical;
  if (!(p.k_mhz > 0.0)) fail("physical.k_mhz must be > 0 (MHz)");
  if (p.eps2_kc_mhz.empty() && p.delta_as_kc_mhz.empty())
    fail("physical: eps2_kc_mhz or delta_as_kc_mhz must list at least one value");
  for (double e : p.eps2_kc_mhz)
    if (!(e >= 0.0)) fail("physical.eps2_kc_mhz entries must be >= 0 (MHz)");
  for (double d : p.delta_as_kc_mhz)
    if (!(d >= 0.0)) fail("physical.delta_as_kc_mhz entries must be >= 0 (MHz)");
  if (!(p.gamma_per_mhz >= 0.0)) fail("physical.gamma_per_mhz must be >= 0 (1/MHz)");
  if (!p.delta_as_kc_mhz.empty() && !(p.gamma_per_mhz > 0.0))
    fail("physical.gamma_per_mhz must be > 0 to convert delta_as_kc_mhz into pump "
         "amplitudes");
  if (!(p.t_up_ns > 0.0)) fail("physical.t_up_ns must be > 0 (ns)");
  if (!(p.sharpness > 0.0)) fail("physical.sharpness must be > 0");
  if (p.t1_us < 0.0 || p.t2_us < 0.0)
    fail("physical.t1_us and t2_us must be >= 0 (0 disables that channel)");
  if (p.t1_us > 0.0 && p.t2_us > 2.0 * p.t1_us)
    fail("physical.t2_us=" + num(p.t2_us) + " exceeds the 2*t1_us=" +
         num(2.0 * p.t1_us) + " dephasing bound");
  if (p.dim < 4) fail("physical.dim must be >= 4");
  if (!(p.rtol > 0.0) || !(p.atol > 0.0))
    fail("physical.rtol and atol must be > 0");
  double alpha_max = 0.0;
  for (const SweepPoint& s : resolve_sweep(p))
    alpha_max = std::max(alpha_max, std::sqrt(s.eps2_kc_mhz / p.k_mhz));
  const int need = required_dim(Complex(alpha_max, 0.0));
  if (p.dim < need)
    fail("physical.dim=" + std::to_string(p.dim) + " too small for |alpha|^2=" +
         num(alpha_max * alpha_max) + "; need dim >= " + std::to_string(need));

  if (cfg.hold_ns < 0.0) fail("protocol.hold_ns must be >= 0 (ns)");
  if (!cfg.experiment.empty() && cfg.experiment != "levels" &&
      cfg.experiment != "ramp" && cfg.experiment != "qpt" && cfg.experiment != "nems" &&
      cfg.experiment != "calibrate")
    fail("protocol.experiment must be one of levels|ramp|qpt|nems|calibrate (got '" +
         cfg.experiment + "')");

  const LevelsConfig& lv = cfg.levels;
  if (!(lv.delta_hi_k > lv.delta_lo_k))
    fail("levels.delta_hi_k must exceed levels.delta_lo_k");
  if (lv.delta_points < 2) fail("levels.delta_points must be >= 2");
  if (lv.eps2_points < 2) fail("levels.eps2_points must be >= 2");
  if (!(lv.path_delta_pi_k > 0.0)) fail("levels.path_delta_pi_k must be > 0");
  if (lv.path_points < 2) fail("levels.path_points must be >= 2");

  const RampConfig& rp = cfg.ramp;
  if (rp.samples < 2) fail("ramp.samples must be >= 2");
  if (rp.emit_wigner) {
    if (rp.wigner_points < 2) fail("ramp.wigner_points must be >= 2");
    if (!(rp.wigner_half_width > 0.0)) fail("ramp.wigner_half_width must be > 0");
  }

  const QptConfig& q = cfg.qpt;
  if (q.space != "fock" && q.space != "cat")
    fail("qpt.space must be 'fock' or 'cat' (got '" + q.space + "')");
  if (q.with_spam && q.space != "cat")
    fail("qpt.with_spam models readout-pulse contrast loss and needs qpt.space='cat'");
  if (!(q.spam_z_contrast > 0.0) || q.spam_z_contrast > 1.0 ||
      !(q.spam_x_contrast > 0.0) || q.spam_x_contrast > 1.0)
    fail("qpt.spam_*_contrast values must lie in (0, 1]");
  if (!(q.x_duration_ns > 0.0)) fail("qpt.x_duration_ns must be > 0 (ns)");

  const NemsConfig& nm = cfg.nems;
  if (!(nm.junction.ej_mhz > 0.0)) fail("nems.ej_mhz must be > 0 (MHz)");
  if (!(nm.junction.ec_mhz > 0.0)) fail("nems.ec_mhz must be > 0 (MHz)");
  if (!(nm.junction.r1 > 0.0) || !(nm.junction.r2 > 0.0) || !(nm.junction.r3 > 0.0))
    fail("nems.r1/r2/r3 junction-size ratios must be > 0");
  if (nm.junction.n_r < 1 || nm.junction.n_l < 1)
    fail("nems.n_r and n_l array counts must be >= 1");
  if (nm.delta_phi_rad < 0.0 || nm.delta_phi_rad > std::numbers::pi)
    fail("nems.delta_phi_over_pi must lie in [0, 1]");
  for (double e : nm.eps_p)
    if (!(e > 0.0)) fail("nems.eps_p entries must be > 0");

  const CalibrateConfig& cb = cfg.calibrate;
  if (cb.hold_ns.empty()) fail("calibrate.hold_ns must list at least one hold time");
  double prev = 0.0;
  for (double h : cb.hold_ns) {
    if (!(h > prev))
      fail("calibrate.hold_ns must be positive and strictly increasing");
    prev = h;
  }
  if (cb.theta2_rad.empty()) fail("calibrate.theta2_rad must not be empty");
  for (double d : cb.delta_as_candidates_mhz)
    if (!(d >= 0.0)) fail("calibrate.delta_as_candidates_mhz entries must be >= 0");
  if (!(cb.x_duration_ns > 0.0)) fail("calibrate.x_duration_ns must be > 0 (ns)");
  if (!(cb.omega_x_probe_mhz > 0.0)) fail("calibrate.omega_x_probe_mhz must be > 0");
}

std::string canonical_config_json(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::string config_hash_hex(const ExperimentConfig& config) {
  const std::uint64_t h = fnv1a64(canonical_config_json(config));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<SweepPoint> resolve_sweep(const PhysicalConfig& physical) {
  std::vector<SweepPoint> out;
  if (!physical.delta_as_kc_mhz.empty()) {
    for (double d : physical.delta_as_kc_mhz)
      out.push_back(SweepPoint{std::sqrt(d / physical.gamma_per_mhz), d});
  } else {
    for (double e : physical.eps2_kc_mhz)
      out.push_back(SweepPoint{e, physical.gamma_per_mhz * e * e});
  }
  return out;
}

// ---------------------------------------------------------------------------
// File output.

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size())
    throw Error("table row has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(columns.size()));
  rows.push_back(std::move(cells));
}

std::string format_cell(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  if (std::strcmp(buf, "-0") == 0) return "0";
  return std::string(buf);
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const std::vector<std::string>& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(content.data(), std::streamsize(content.size()));
  f.flush();
  if (!f) throw Error("write failed: " + path.string());
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// levels: eigenlevel diagrams.

void cmd_levels(const ExperimentConfig& cfg, const RunContext& ctx) {
  check_experiment_tag(cfg, "levels");
  prepare_out(cfg, ctx);
  const PhysicalConfig& p = cfg.physical;
  const HilbertSpace space{p.dim};
  const double k = p.k_mhz;
  json summary = summary_base(cfg, ctx, "levels");

  {  // pump-off detuning sweep: parity-resolved branches and crossings
    EigenTraceInput in{space, k, delta_sweep(cfg.levels.delta_lo_k * k, cfg.levels.delta_hi_k * k,
                          cfg.levels.delta_points)};
    const EigenTraceResult tr = eigen_trace(in, false);
    Table t;
    t.columns.push_back("delta_mhz");
    for (int b = 0; b < p.dim; ++b)
      t.columns.push_back("e_f" + std::to_string(tr.branches[std::size_t(b)].fock_label));
    for (std::size_t i = 0; i < tr.path.size(); ++i) {
      std::vector<std::string> row;
      row.push_back(num(tr.path[i].delta_mhz));
      for (int b = 0; b < p.dim; ++b) row.push_back(num(tr.energies_mhz(int(i), b)));
      t.add_row(std::move(row));
    }
    write_text_file(ctx.out_dir / "levels_delta.csv", render_csv(t));
    json cr = json::array();
    for (const Crossing& c : tr.crossings)
      cr.push_back(json{{"branch_a", c.branch_a},
                        {"branch_b", c.branch_b},
                        {"parity", c.parity},
                        {"delta_mhz", c.delta_mhz}});
    summary["delta_sweep"] = json{{"crossings", cr},
                                  {"continuation_ok", tr.continuation_ok},
                                  {"points", int(tr.path.size())}};
  }

  {  // pump sweep at zero effective detuning: pair degeneracy and confinement
    double e_max = 0.0;
    for (const SweepPoint& s : resolve_sweep(p)) e_max = std::max(e_max, s.eps2_kc_mhz);
    EigenTraceInput in{space, k, {}};
    for (double e : linspace(0.0, e_max, cfg.levels.eps2_points))
      in.path.push_back(TracePoint{0.0, e});
    const EigenTraceResult tr = eigen_trace(in, false);
    Table t;
    t.columns = {"eps2_mhz",
                 "e_f0",
                 "e_f1",
                 "e_f2",
                 "e_f3",
                 "pair_splitting_mhz",
                 "adjacent_pair_splitting_mhz",
                 "confinement_gap_mhz"};
    double pair_max = 0.0;
    double adj_prev = 0.0;
    double conf_last = 0.0;
    bool adj_monotone = true;
    for (std::size_t i = 0; i < tr.path.size(); ++i) {
      const double e0 = tr.energies_mhz(int(i), 0);
      const double e1 = tr.energies_mhz(int(i), 1);
      const double e2 = tr.energies_mhz(int(i), 2);
      const double e3 = tr.energies_mhz(int(i), 3);
      const double pair = std::abs(e0 - e1);
      const double adj = std::abs(e2 - e3);
      conf_last = 0.5 * (e0 + e1) - 0.5 * (e2 + e3);
      pair_max = std::max(pair_max, pair);
      if (i > 0 && adj > adj_prev + 1.0e-8) adj_monotone = false;
      adj_prev = adj;
      t.add_row({num(tr.path[i].eps2_mhz), num(e0), num(e1), num(e2), num(e3), num(pair),
                 num(adj), num(conf_last)});
    }
    write_text_file(ctx.out_dir / "levels_pump.csv", render_csv(t));
    summary["pump_sweep"] = json{{"pair_splitting_max_mhz", pair_max},
                                 {"adjacent_pair_splitting_monotone", adj_monotone},
                                 {"confinement_gap_final_mhz", conf_last}};
  }

  {  // pump path under static compensation: branch rearrangement
    if (!(p.gamma_per_mhz > 0.0))
      fail("levels: the static-path diagram needs physical.gamma_per_mhz > 0");
    const double delta_pi = cfg.levels.path_delta_pi_k * k;
    const double eps2_kc = std::sqrt(delta_pi / p.gamma_per_mhz);
    const int need = required_dim(Complex(std::sqrt(eps2_kc / k), 0.0));
    if (p.dim < need)
      fail("levels: physical.dim=" + std::to_string(p.dim) +
           " too small for the static path plateau; need dim >= " +
           std::to_string(need));
    EigenTraceInput in{space, k, {}};
    for (double e : linspace(0.0, eps2_kc, cfg.levels.path_points))
      in.path.push_back(TracePoint{delta_pi - p.gamma_per_mhz * e * e, e});
    const EigenTraceResult tr = eigen_trace(in, false);
    Table t;
    t.columns = {"eps2_mhz", "delta_mhz"};
    for (int b = 0; b < p.dim; ++b)
      t.columns.push_back("e_f" + std::to_string(tr.branches[std::size_t(b)].fock_label));
    for (std::size_t i = 0; i < tr.path.size(); ++i) {
      std::vector<std::string> row;
      row.push_back(num(tr.path[i].eps2_mhz));
      row.push_back(num(tr.path[i].delta_mhz));
      for (int b = 0; b < p.dim; ++b) row.push_back(num(tr.energies_mhz(int(i), b)));
      t.add_row(std::move(row));
    }
    write_text_file(ctx.out_dir / "levels_static_path.csv", render_csv(t));
    const int last = int(tr.path.size()) - 1;
    int rank = 0;  // energy rank of the vacuum branch among even branches at the end
    for (int b = 1; b < p.dim; ++b)
      if (tr.branches[std::size_t(b)].parity == +1 &&
          tr.energies_mhz(last, b) > tr.energies_mhz(last, 0))
        ++rank;
    summary["static_path"] = json{{"delta_pi_kc_mhz", delta_pi},
                                  {"eps2_kc_mhz", eps2_kc},
                                  {"vacuum_final_rank_even", rank},
                                  {"vacuum_connects_to_top", rank == 0},
                                  {"diabatic_events", int(tr.diabatic_events.size())}};
  }

  write_summary(ctx, summary);
}

// ---------------------------------------------------------------------------
// ramp: single initialization, fidelity traces, optional Wigner map.

void cmd_ramp(const ExperimentConfig& cfg, const RunContext& ctx) {
  check_experiment_tag(cfg, "ramp");
  prepare_out(cfg, ctx);
  const PhysicalConfig& p = cfg.physical;
  const HilbertSpace space{p.dim};
  const double k = p.k_mhz;
  const IntegratorOptions integ = integrator_of(p);
  const NoiseParams noise = noise_of(p);
  const SweepPoint pt = resolve_sweep(p).front();
  const double alpha = std::sqrt(pt.eps2_kc_mhz / k);

  json summary = summary_base(cfg, ctx, "ramp");
  summary["eps2_kc_mhz"] = pt.eps2_kc_mhz;
  summary["delta_as_kc_mhz"] = pt.delta_as_kc_mhz;
  summary["alpha_sq"] = alpha * alpha;

  json per = json::object();
  for (CompensationStrategy s : expand_strategies(cfg.strategy)) {
    const std::string tag = strategy_name(s);
    const PumpSchedule sched(ramp_spec_for(p, pt, s, cfg.hold_ns));
    const Drive drv = schedule_drive(sched, k);
    const double t_end = sched.t_up_ns() + sched.t_hold_ns();

    HamiltonianTerms plateau;
    plateau.delta_mhz = sched.delta_mhz(sched.t_up_ns());
    plateau.k_mhz = k;
    plateau.eps2_mhz = sched.eps2_mhz(sched.t_up_ns());
    const MatrixXc evens = top_eigenstates(space, plateau, +1, 2);
    const VectorXc target = evens.col(0);
    const VectorXc leak = evens.col(1);
    const VectorXc cat = cat_state(alpha, CatKind::Plus, space).vec();
    const VectorXc vac = StateVector::basis(space, 0).vec();

    const std::vector<double> samples = linspace(0.0, t_end, cfg.ramp.samples);
    Table t;
    t.columns = {"t_ns", "fid_cat", "fid_plateau", "fid_leak", "weight"};
    MatrixXc rho_final;
    double fin_cat = 0.0, fin_plateau = 0.0, fin_leak = 0.0;
    if (noise.any()) {
      const LindbladResult res = evolve_lindblad(space, drv, noise,
                                                 MatrixXc(vac * vac.adjoint()), 0.0,
                                                 t_end, samples, integ);
      for (std::size_t i = 0; i < res.times_ns.size(); ++i) {
        const MatrixXc& rho = res.states[i];
        fin_cat = std::real(cat.dot(rho * cat));
        fin_plateau = std::real(target.dot(rho * target));
        fin_leak = std::real(leak.dot(rho * leak));
        t.add_row({num(res.times_ns[i]), num(fin_cat), num(fin_plateau), num(fin_leak),
                   num(std::real(rho.trace()))});
      }
      rho_final = res.states.back();
    } else {
      const SchrodingerResult res =
          evolve_schrodinger(space, drv, vac, 0.0, t_end, samples, integ);
      for (std::size_t i = 0; i < res.times_ns.size(); ++i) {
        const VectorXc& psi = res.states[i];
        fin_cat = std::norm(cat.dot(psi));
        fin_plateau = std::norm(target.dot(psi));
        fin_leak = std::norm(leak.dot(psi));
        t.add_row({num(res.times_ns[i]), num(fin_cat), num(fin_plateau), num(fin_leak),
                   num(psi.squaredNorm())});
      }
      rho_final = res.states.back() * res.states.back().adjoint();
    }
    write_text_file(ctx.out_dir / ("ramp_" + tag + ".csv"), render_csv(t));

    per[tag] = json{{"t_end_ns", t_end},
                    {"fid_cat", fin_cat},
                    {"fid_plateau", fin_plateau},
                    {"fid_leak", fin_leak}};

    if (cfg.ramp.emit_wigner) {
      const std::vector<Complex> grid =
          wigner_grid(cfg.ramp.wigner_half_width, cfg.ramp.wigner_points);
      const WignerMap wm = wigner(rho_final, grid, ctx.jobs);
      Table w;
      w.columns = {"re_alpha", "im_alpha", "w"};
      for (std::size_t i = 0; i < wm.grid.size(); ++i)
        w.add_row({num(wm.grid[i].real()), num(wm.grid[i].imag()), num(wm.values[i])});
      write_text_file(ctx.out_dir / ("wigner_" + tag + ".csv"), render_csv(w));
    }
  }
  summary["ramp"] = per;
  write_summary(ctx, summary);
}

// ---------------------------------------------------------------------------
// qpt: process-fidelity sweeps over compensation strategy and noise model.

void cmd_qpt(const ExperimentConfig& cfg, const RunContext& ctx) {
  check_experiment_tag(cfg, "qpt");
  prepare_out(cfg, ctx);
  const PhysicalConfig& p = cfg.physical;
  const HilbertSpace space{p.dim};
  const double k = p.k_mhz;
  const IntegratorOptions integ = integrator_of(p);
  const NoiseParams noise = noise_of(p);
  const bool cat_space = cfg.qpt.space == "cat";
  const std::vector<SweepPoint> pts = resolve_sweep(p);
  const std::vector<CompensationStrategy> strategies = expand_strategies(cfg.strategy);

  struct Variant {
    bool lindblad = false;
    bool spam = false;
  };
  std::vector<Variant> variants;
  if (noise.any()) {
    if (cfg.qpt.run_noiseless) variants.push_back({false, false});
    if (cfg.qpt.run_lindblad) {
      variants.push_back({true, false});
      if (cfg.qpt.with_spam) variants.push_back({true, true});
    }
  } else {
    variants.push_back({false, false});
    if (cfg.qpt.with_spam) variants.push_back({false, true});
  }
  if (variants.empty())
    fail("qpt: no model variants enabled; set qpt.run_noiseless or qpt.run_lindblad");

  const int n_strat = int(strategies.size());
  const int n_ps = int(pts.size()) * n_strat;
  const int nv = int(variants.size());
  std::vector<std::vector<std::vector<std::string>>> rows(static_cast<std::size_t>(n_ps));
  std::vector<std::vector<double>> fids(static_cast<std::size_t>(n_ps),
                                        std::vector<double>(std::size_t(nv), 0.0));
  std::vector<std::vector<json>> rmats(static_cast<std::size_t>(n_ps));

  parallel_for(n_ps, ctx.jobs, [&](int idx) {
    const SweepPoint pt = pts[std::size_t(idx / n_strat)];
    const CompensationStrategy strat = strategies[std::size_t(idx % n_strat)];
    const double alpha = std::sqrt(pt.eps2_kc_mhz / k);

    const PumpSchedule sched(ramp_spec_for(p, pt, strat, cfg.hold_ns));
    const Drive drv = schedule_drive(sched, k);
    const double t_run = cat_space ? sched.t_up_ns() + sched.t_hold_ns()
                                   : sched.t_total_ns();

    const ProtocolRunner pure_run = [&space, &drv, t_run, &integ](const VectorXc& in) {
      const SchrodingerResult r =
          evolve_schrodinger(space, drv, in, 0.0, t_run, {}, integ);
      return MatrixXc(r.states.back() * r.states.back().adjoint());
    };
    const ProtocolRunner noisy_run = [&space, &drv, &noise, t_run,
                                      &integ](const VectorXc& in) {
      return evolve_lindblad(space, drv, noise, MatrixXc(in * in.adjoint()), 0.0,
                             t_run, {}, integ)
          .states.back();
    };

    const GateContext gctx{space, k, sched.delta_mhz(sched.t_up_ns()),
                           sched.eps2_mhz(sched.t_up_ns()),
                           sched.delta_as_mhz(sched.t_up_ns())};
    ZHalfCalibration zc;
    XHalfCalibration xc;
    FrameCalibration fc;
    Eigen::Matrix4d r_id = Eigen::Matrix4d::Identity();
    double frame_phi = 0.0;
    if (cat_space) {
      zc = calibrate_z_half(gctx, alpha);
      xc = calibrate_x_half(gctx, alpha, zc.gate, cfg.qpt.x_duration_ns, 0.0, 61, integ);
      fc = calibrate_frame(space, pure_run, alpha);
    } else {
      // The protocol's deterministic 0-1 precession is a frame choice, not an
      // error; measure it off the noiseless |+> image (the fock analogue of
      // the cat frame calibration) and fold it into the reference channel.
      const QubitFrame fr = QubitFrame::fock(space);
      const VectorXc plus = (fr.basis0() + fr.basis1()) / std::sqrt(2.0);
      const PVector pv = p_vector(pure_run(plus), fr);
      frame_phi = std::atan2(pv.p_y, pv.p_x);
      const double c = std::cos(frame_phi);
      const double s = std::sin(frame_phi);
      r_id(1, 1) = c;
      r_id(1, 2) = -s;
      r_id(2, 1) = s;
      r_id(2, 2) = c;
    }

    for (int v = 0; v < nv; ++v) {
      const Variant var = variants[std::size_t(v)];
      QptResult q;
      if (cat_space) {
        const SpamTable spam = var.spam
                                   ? SpamTable{cfg.qpt.spam_z_contrast,
                                               cfg.qpt.spam_x_contrast}
                                   : SpamTable{};
        // spam=0 rows are the measurement-error-free projection; spam=1 rows
        // run the simulated pulse chain with its decoherence and the
        // configured contrast table.
        const CatQptSpec cs{space,
                            var.lindblad ? noisy_run : pure_run,
                            Complex(alpha, 0.0),
                            gctx,
                            GateSet{xc.gate, zc.gate},
                            var.spam && var.lindblad ? noise : NoiseParams{},
                            fc.theta2_rad,
                            spam,
                            integ,
                            !var.spam};
        q = cat_qpt(cs);
      } else {
        q = fock_qpt(space, var.lindblad ? noisy_run : pure_run, r_id);
      }
      std::vector<std::string> row{num(pt.delta_as_kc_mhz),
                                   num(pt.eps2_kc_mhz),
                                   num(alpha * alpha),
                                   strategy_name(strat),
                                   var.lindblad ? "lindblad" : "noiseless",
                                   var.spam ? "1" : "0",
                                   num(q.fidelity)};
      if (cat_space) {
        row.push_back(num(fc.theta2_rad));
        row.push_back(num(zc.gate.duration_ns));
        row.push_back(num(xc.gate.amp_mhz));
      } else {
        row.push_back(num(frame_phi));
      }
      rows[std::size_t(idx)].push_back(std::move(row));
      fids[std::size_t(idx)][std::size_t(v)] = q.fidelity;
      if (cfg.qpt.emit_r_matrices) {
        json rj;
        rj["delta_as_kc_mhz"] = pt.delta_as_kc_mhz;
        rj["eps2_kc_mhz"] = pt.eps2_kc_mhz;
        rj["strategy"] = strategy_name(strat);
        rj["model"] = var.lindblad ? "lindblad" : "noiseless";
        rj["spam"] = var.spam;
        rj["fidelity"] = q.fidelity;
        json r16 = json::array();
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) r16.push_back(q.r(a, b));
        rj["r"] = r16;
        rmats[std::size_t(idx)].push_back(std::move(rj));
      }
    }
  });

  Table t;
  t.columns = {"delta_as_kc_mhz", "eps2_kc_mhz", "alpha_sq", "strategy",
               "model",           "spam",        "fidelity"};
  if (cat_space) {
    t.columns.push_back("theta2_rad");
    t.columns.push_back("z_half_ns");
    t.columns.push_back("x_half_amp_mhz");
  } else {
    t.columns.push_back("frame_phi_rad");
  }
  for (int i = 0; i < n_ps; ++i)
    for (std::vector<std::string>& row : rows[std::size_t(i)]) t.add_row(std::move(row));
  write_text_file(ctx.out_dir / (cat_space ? "qpt_cat.csv" : "qpt_fock.csv"),
                  render_csv(t));

  if (cfg.qpt.emit_r_matrices) {
    json all = json::array();
    for (int i = 0; i < n_ps; ++i)
      for (json& rj : rmats[std::size_t(i)]) all.push_back(std::move(rj));
    write_text_file(ctx.out_dir / "qpt_rmatrices.json", all.dump(2) + "\n");
  }

  json summary = summary_base(cfg, ctx, "qpt");
  summary["space"] = cfg.qpt.space;
  json agg = json::array();
  for (int si = 0; si < n_strat; ++si) {
    for (int v = 0; v < nv; ++v) {
      double lo = 1.0e300, hi = -1.0e300, sum = 0.0;
      int n = 0;
      for (std::size_t pi = 0; pi < pts.size(); ++pi) {
        const double f = fids[pi * std::size_t(n_strat) + std::size_t(si)][std::size_t(v)];
        lo = std::min(lo, f);
        hi = std::max(hi, f);
        sum += f;
        ++n;
      }
      agg.push_back(json{{"strategy", strategy_name(strategies[std::size_t(si)])},
                         {"model", variants[std::size_t(v)].lindblad ? "lindblad"
                                                                     : "noiseless"},
                         {"spam", variants[std::size_t(v)].spam},
                         {"fidelity_min", lo},
                         {"fidelity_mean", sum / double(n)},
                         {"fidelity_max", hi},
                         {"points", n}});
    }
  }
  summary["results"] = agg;
  write_summary(ctx, summary);
}

// ---------------------------------------------------------------------------
// nems: circuit extraction and pump-induced shift curves.

void cmd_nems(const ExperimentConfig& cfg, const RunContext& ctx) {
  check_experiment_tag(cfg, "nems");
  prepare_out(cfg, ctx);
  const NemsConfig& nm = cfg.nems;

  const PotentialModel pot = potential(nm.junction, working_point(nm.delta_phi_rad));
  const ExtractedParams hp = hoa_extract(pot, nm.junction.ec_mhz);
  const PifsCurve pc = pifs_curve(nm.junction, nm.delta_phi_rad, nm.eps_p);
  const SpecialPointFrequencies sp = special_point_frequencies(nm.junction);
  const JunctionSolveResult js =
      solve_junction_params(sp.f_000_mhz, sp.f_0p0_mhz, sp.f_pp0_mhz,
                            nm.junction.ec_mhz, nm.junction.n_r, nm.junction.n_l);

  Table t;
  t.columns = {"eps_p",       "omega_a_mhz", "delta_omega_mhz", "k_mhz",
               "delta_k_mhz", "g2_ac_mhz",   "eps2_mhz",        "alpha_sq"};
  double dkk = 0.0;
  for (const PifsPoint& q : pc.points) {
    dkk = std::max(dkk, std::abs(q.delta_k_mhz) / hp.k_mhz);
    t.add_row({num(q.eps_p), num(q.omega_a_mhz), num(q.delta_omega_mhz), num(q.k_mhz),
               num(q.delta_k_mhz), num(q.g2_ac_mhz), num(q.eps2_mhz), num(q.alpha_sq)});
  }
  write_text_file(ctx.out_dir / "nems_pifs.csv", render_csv(t));

  json summary = summary_base(cfg, ctx, "nems");
  summary["nems"] =
      json{{"omega_a_mhz", hp.omega_a_mhz},
           {"k_mhz", hp.k_mhz},
           {"g4_mhz", hp.g4_mhz},
           {"phi_zpf", hp.phi_zpf},
           {"g2_ac_mhz_at_zero", g2_ac(nm.junction, nm.delta_phi_rad, 0.0)},
           {"gamma_per_mhz", pc.gamma_per_mhz},
           {"fit_exponent", pc.fit_exponent},
           {"eps2_linearity_r2", pc.eps2_linearity_r2},
           {"delta_k_over_k_max", dkk},
           {"special_points", json{{"f_000_mhz", sp.f_000_mhz},
                                   {"f_0p0_mhz", sp.f_0p0_mhz},
                                   {"f_pp0_mhz", sp.f_pp0_mhz}}},
           {"junction_solve", json{{"ej_mhz", js.ej_mhz},
                                   {"r1", js.r1},
                                   {"r2", js.r2},
                                   {"r3", js.r3},
                                   {"residual_mhz", js.residual_mhz}}}};
  write_summary(ctx, summary);
}

// ---------------------------------------------------------------------------
// calibrate: gate tune-up, frame azimuth, rate check, shift-gain scan.

void cmd_calibrate(const ExperimentConfig& cfg, const RunContext& ctx) {
  check_experiment_tag(cfg, "calibrate");
  prepare_out(cfg, ctx);
  const PhysicalConfig& p = cfg.physical;
  const HilbertSpace space{p.dim};
  const double k = p.k_mhz;
  const IntegratorOptions integ = integrator_of(p);
  const NoiseParams noise = noise_of(p);
  const SweepPoint pt = resolve_sweep(p).front();
  const double alpha = std::sqrt(pt.eps2_kc_mhz / k);

  const GateContext gctx{space, k, 0.0, pt.eps2_kc_mhz, pt.delta_as_kc_mhz};

  const ZHalfCalibration zc = calibrate_z_half(gctx, alpha);
  Table zt;
  zt.columns = {"t_ns", "contrast"};
  for (std::size_t i = 0; i < zc.scan_t_ns.size(); ++i)
    zt.add_row({num(zc.scan_t_ns[i]), num(zc.scan_contrast[i])});
  write_text_file(ctx.out_dir / "calibrate_zhalf.csv", render_csv(zt));

  const XHalfCalibration xc =
      calibrate_x_half(gctx, alpha, zc.gate, cfg.calibrate.x_duration_ns, 0.0, 61, integ);
  Table xt;
  xt.columns = {"amp_mhz", "signal"};
  for (std::size_t i = 0; i < xc.amps_mhz.size(); ++i)
    xt.add_row({num(xc.amps_mhz[i]), num(xc.signals[i])});
  write_text_file(ctx.out_dir / "calibrate_xfringe.csv", render_csv(xt));

  // Frame azimuth of the up-ramp for each requested strategy (noiseless).
  json theta = json::object();
  for (CompensationStrategy s : expand_strategies(cfg.strategy)) {
    const PumpSchedule sched(ramp_spec_for(p, pt, s, 0.0));
    const Drive drv = schedule_drive(sched, k);
    const double t_up = sched.t_up_ns();
    const ProtocolRunner run = [&space, &drv, t_up, &integ](const VectorXc& in) {
      const SchrodingerResult r = evolve_schrodinger(space, drv, in, 0.0, t_up, {}, integ);
      return MatrixXc(r.states.back() * r.states.back().adjoint());
    };
    theta[strategy_name(s)] = calibrate_frame(space, run, alpha).theta2_rad;
  }

  // Single-photon rate against the closed form at a probe amplitude.
  const double wx_an =
      omega_x_analytic(Complex(cfg.calibrate.omega_x_probe_mhz, 0.0), alpha);
  const double t_span = 3.0e3 / wx_an;  // about three periods, ns
  const double wx_fit = omega_x_fitted(space, k, cfg.calibrate.omega_x_probe_mhz,
                                       pt.eps2_kc_mhz, t_span, 201, integ);

  // Shift-gain scan: the plateau offset maximizing the stored-qubit lifetime.
  std::vector<double> cands = cfg.calibrate.delta_as_candidates_mhz;
  if (cands.empty()) {
    if (!(pt.delta_as_kc_mhz > 0.0))
      fail("calibrate: list delta_as_candidates_mhz or set gamma_per_mhz > 0 so a "
           "scan window can be derived");
    cands = linspace(0.6 * pt.delta_as_kc_mhz, 1.4 * pt.delta_as_kc_mhz, 9);
  }
  const LifetimeScanSpec ls{space,
                            k,
                            ramp_spec_for(p, pt, CompensationStrategy::Static, 0.0),
                            noise,
                            cfg.calibrate.theta2_rad,
                            cands,
                            cfg.calibrate.hold_ns,
                            integ};
  const LifetimeScanResult lr = lifetime_scan(ls, ctx.jobs);

  Table lt;
  lt.columns = {"theta2_rad", "delta_as_mhz", "lifetime_ns", "no_decay"};
  for (std::size_t h = 0; h < cfg.calibrate.hold_ns.size(); ++h)
    lt.columns.push_back("p_return_" + std::to_string(h));
  for (const LifetimePoint& q : lr.points) {
    std::vector<std::string> row{num(q.theta2_rad), num(q.delta_as_mhz),
                                 num(q.lifetime_ns), q.no_decay ? "1" : "0"};
    for (double pr : q.return_probability) row.push_back(num(pr));
    lt.add_row(std::move(row));
  }
  write_text_file(ctx.out_dir / "calibrate_lifetime.csv", render_csv(lt));

  const double gamma_hat = lr.best_delta_as_mhz / (pt.eps2_kc_mhz * pt.eps2_kc_mhz);
  json summary = summary_base(cfg, ctx, "calibrate");
  summary["calibrate"] = json{{"z_half_ns", zc.gate.duration_ns},
                              {"z_half_pole_sign", zc.gate.pole_sign},
                              {"z_contrast", zc.contrast},
                              {"x_half_amp_mhz", xc.gate.amp_mhz},
                              {"x_half_duration_ns", xc.gate.duration_ns},
                              {"x_half_chain_sign", xc.gate.chain_sign},
                              {"theta2_rad", theta},
                              {"omega_x_fitted_mhz", wx_fit},
                              {"omega_x_analytic_mhz", wx_an},
                              {"omega_x_ratio", wx_fit / wx_an},
                              {"best_delta_as_kc_mhz", lr.best_delta_as_mhz},
                              {"gamma_hat_per_mhz", gamma_hat},
                              {"delta_as_target_mhz", pt.delta_as_kc_mhz}};
  write_summary(ctx, summary);
}

}  // namespace kerrcat
