#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "kerrcat/circuit.hpp"
#include "kerrcat/schedule.hpp"

namespace kerrcat {

inline constexpr std::string_view kVersionString = "0.1.0";

// Strategy selector for experiment configs; Both expands to {Static, Dynamic}.
enum class StrategyChoice { None, Static, Dynamic, Both };

StrategyChoice parse_strategy(const std::string& name);
std::string strategy_choice_name(StrategyChoice choice);
std::string strategy_name(CompensationStrategy strategy);
std::vector<CompensationStrategy> expand_strategies(StrategyChoice choice);

// ---------------------------------------------------------------------------
// Experiment configuration. JSON layout mirrors the struct nesting:
// {"physical": {...}, "protocol": {...}, "io": {...}, "levels": {...}, ...}.
// Exactly one of eps2_kc_mhz / delta_as_kc_mhz parameterizes the sweep; the
// other axis follows from delta = gamma * eps2^2.

struct PhysicalConfig {
  double k_mhz = 6.9;
  std::vector<double> eps2_kc_mhz = {9.7};  // plateau pump amplitude(s)
  std::vector<double> delta_as_kc_mhz;      // alternative sweep axis
  double gamma_per_mhz = 0.0542;            // pump-induced shift gain
  double t_up_ns = 320.0;
  double sharpness = 3.0;
  double t1_us = 0.0;  // 0 disables photon loss
  double t2_us = 0.0;  // 0 disables extra dephasing
  int dim = 30;
  double rtol = 1.0e-9;
  double atol = 1.0e-12;
};

struct LevelsConfig {
  double delta_lo_k = -0.5;  // detuning sweep bounds in units of K
  double delta_hi_k = 4.0;
  int delta_points = 451;
  int eps2_points = 121;            // pump sweep at zero effective detuning
  double path_delta_pi_k = 1.5;     // static-path plateau shift in units of K
  int path_points = 201;
};

struct RampConfig {
  int samples = 33;
  bool emit_wigner = false;
  double wigner_half_width = 3.0;
  int wigner_points = 41;
};

struct QptConfig {
  std::string space = "fock";  // "fock" | "cat" (CLI --space overrides)
  bool run_noiseless = true;
  bool run_lindblad = true;  // only takes effect when T1/T2 are set
  bool with_spam = false;    // cat space only
  double spam_z_contrast = 1.0;
  double spam_x_contrast = 1.0;
  double x_duration_ns = 96.0;
  bool emit_r_matrices = true;
};

struct NemsConfig {
  JunctionConfig junction{69500.0, 226.0, 0.16, 0.16, 0.16, 3, 5};
  double delta_phi_rad = 0.08 * std::numbers::pi;
  std::vector<double> eps_p;  // default: 30 points on [0.01, 0.30]
};

struct CalibrateConfig {
  std::vector<double> delta_as_candidates_mhz;  // default: +-40% of gamma*eps2^2
  std::vector<double> hold_ns = {250.0, 500.0, 1000.0, 2000.0};
  std::vector<double> theta2_rad = {0.0};
  double x_duration_ns = 96.0;
  double omega_x_probe_mhz = 0.3;
};

struct IoConfig {
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  PhysicalConfig physical;
  StrategyChoice strategy = StrategyChoice::Dynamic;
  std::string experiment;  // optional; cross-checked against the subcommand
  double hold_ns = 0.0;
  LevelsConfig levels;
  RampConfig ramp;
  QptConfig qpt;
  NemsConfig nems;
  CalibrateConfig calibrate;
  IoConfig io;
};

// Parses and validates; throws ConfigError with an actionable message.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

// Canonical (sorted-key) JSON echo of the applied configuration and its
// FNV-1a hash; both are byte-stable for identical configs.
std::string canonical_config_json(const ExperimentConfig& config);
std::string config_hash_hex(const ExperimentConfig& config);

// One sweep point: plateau pump amplitude and the matching static offset.
struct SweepPoint {
  double eps2_kc_mhz = 0.0;
  double delta_as_kc_mhz = 0.0;
};
std::vector<SweepPoint> resolve_sweep(const PhysicalConfig& physical);

struct RunContext {
  std::filesystem::path out_dir;
  int jobs = 1;
  std::uint64_t seed = 0;
};

// Each command writes config.echo.json, its CSV artifacts, and summary.json
// into out_dir. Output bytes depend only on (config, seed).
void cmd_levels(const ExperimentConfig& config, const RunContext& ctx);
void cmd_ramp(const ExperimentConfig& config, const RunContext& ctx);
void cmd_qpt(const ExperimentConfig& config, const RunContext& ctx);
void cmd_nems(const ExperimentConfig& config, const RunContext& ctx);
void cmd_calibrate(const ExperimentConfig& config, const RunContext& ctx);

// ---------------------------------------------------------------------------
// Deterministic file output.

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> cells);
};

std::string format_cell(double value);  // %.12g, "-0" normalized
std::string render_csv(const Table& table);  // ',' delimiter, LF endings
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace kerrcat
