// Command line front end: levels | ramp | qpt | nems | calibrate.
// Exit codes: 0 success, 2 configuration rejected, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "kerrcat/errors.hpp"
#include "kerrcat/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pump-shift compensation laboratory for Kerr-cat initialization"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::string space;
  int jobs = 1;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "JSON experiment configuration");
  app.add_option("--out", out_dir, "output directory (overrides io.out_dir)");
  app.add_option("--jobs", jobs, "worker threads for sweep points")
      ->check(CLI::PositiveNumber);
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "master seed (overrides io.seed)");

  CLI::App* c_levels = app.add_subcommand("levels", "eigenlevel diagrams");
  CLI::App* c_ramp = app.add_subcommand("ramp", "pump-ramp initialization");
  CLI::App* c_qpt = app.add_subcommand("qpt", "process-tomography sweeps");
  c_qpt->add_option("--space", space, "qubit encoding: fock|cat")
      ->check(CLI::IsMember({"fock", "cat"}));
  CLI::App* c_nems = app.add_subcommand("nems", "circuit extraction and pump shift");
  app.add_subcommand("calibrate", "gate and shift-gain calibration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    kerrcat::ExperimentConfig cfg = config_path.empty()
                                        ? kerrcat::parse_config_text("{}")
                                        : kerrcat::load_config(config_path);
    if (seed_opt->count() > 0) cfg.io.seed = seed;
    if (!space.empty()) cfg.qpt.space = space;
    if (!out_dir.empty()) cfg.io.out_dir = out_dir;
    kerrcat::validate(cfg);

    kerrcat::RunContext ctx;
    ctx.out_dir = cfg.io.out_dir;
    ctx.jobs = jobs;
    ctx.seed = cfg.io.seed;

    if (c_levels->parsed())
      kerrcat::cmd_levels(cfg, ctx);
    else if (c_ramp->parsed())
      kerrcat::cmd_ramp(cfg, ctx);
    else if (c_qpt->parsed())
      kerrcat::cmd_qpt(cfg, ctx);
    else if (c_nems->parsed())
      kerrcat::cmd_nems(cfg, ctx);
    else
      kerrcat::cmd_calibrate(cfg, ctx);
    return 0;
  } catch (const kerrcat::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const kerrcat::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
