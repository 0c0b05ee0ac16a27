#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <kerrcat/errors.hpp>
#include <kerrcat/harness.hpp>

using namespace kerrcat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_root() {
  const fs::path p = fs::temp_directory_path() / "kerrcat_harness_scratch";
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_root() / name;
  write_text_file(p, text);
  return p;
}

int run_cli(const std::string& args, const fs::path& cwd = {}) {
  std::string cmd;
  if (!cwd.empty()) cmd = "cd " + cwd.string() + " && ";
  cmd += std::string(KERRCAT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_fields(const std::string& line) {
  int n = 1;
  for (char c : line) n += (c == ',');
  return n;
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, rejection") {
  const ExperimentConfig def = parse_config_text("{}");
  CHECK(def.physical.k_mhz == 6.9);
  CHECK(def.physical.eps2_kc_mhz == std::vector<double>{9.7});
  CHECK(def.physical.gamma_per_mhz == 0.0542);
  CHECK(def.physical.dim == 30);
  CHECK(def.strategy == StrategyChoice::Dynamic);
  CHECK(def.qpt.space == "fock");

  const ExperimentConfig c = parse_config_text(
      R"({"physical":{"k_mhz":6.5,"t1_us":60.0,"t2_us":30.0},
          "protocol":{"strategy":"both","hold_ns":100.0}})");
  CHECK(c.physical.k_mhz == 6.5);
  CHECK(c.hold_ns == 100.0);
  CHECK(expand_strategies(c.strategy).size() == 2);

  CHECK_THROWS_AS(parse_config_text(R"({"physical":{"bogus":1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(
                      R"({"physical":{"eps2_kc_mhz":[9.7],"delta_as_kc_mhz":[5.0]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"physical":{"t1_us":1.0,"t2_us":3.0}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"physical":{"dim":3}})"), ConfigError);
  // dim passes the floor but not the pump the sweep reaches
  CHECK_THROWS_AS(parse_config_text(R"({"physical":{"eps2_kc_mhz":[60.0],"dim":10}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"protocol":{"strategy":"off"}})"), ConfigError);
}

TEST_CASE("strategy names round trip") {
  for (const char* n : {"none", "static", "dynamic", "both"})
    CHECK(strategy_choice_name(parse_strategy(n)) == n);
  const auto both = expand_strategies(StrategyChoice::Both);
  REQUIRE(both.size() == 2);
  CHECK(strategy_name(both[0]) == "static");
  CHECK(strategy_name(both[1]) == "dynamic");
}

TEST_CASE("sweep axis resolution") {
  PhysicalConfig p;  // eps2 axis: 9.7 at gamma 0.0542
  auto pts = resolve_sweep(p);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].eps2_kc_mhz == 9.7);
  CHECK(pts[0].delta_as_kc_mhz == doctest::Approx(0.0542 * 9.7 * 9.7).epsilon(1e-12));

  p.eps2_kc_mhz.clear();
  p.delta_as_kc_mhz = {5.099678};  // inverse map lands on the same plateau
  pts = resolve_sweep(p);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].eps2_kc_mhz == doctest::Approx(9.7).epsilon(1e-6));
}

TEST_CASE("canonical config echo is byte-stable and order-independent") {
  const ExperimentConfig a = parse_config_text(
      R"({"physical":{"k_mhz":6.9,"dim":24},"protocol":{"strategy":"static"}})");
  const ExperimentConfig b = parse_config_text(
      R"({"protocol":{"strategy":"static"},"physical":{"dim":24,"k_mhz":6.9}})");
  CHECK(canonical_config_json(a) == canonical_config_json(b));
  CHECK(config_hash_hex(a) == config_hash_hex(b));
  CHECK(config_hash_hex(a).size() == 16);
  CHECK(canonical_config_json(a) == canonical_config_json(a));

  const ExperimentConfig c = parse_config_text(R"({"physical":{"dim":25}})");
  CHECK(config_hash_hex(a) != config_hash_hex(c));
}

TEST_CASE("cell formatting and csv rendering") {
  CHECK(format_cell(0.0) == "0");
  CHECK(format_cell(-0.0) == "0");
  CHECK(format_cell(1.5) == "1.5");
  CHECK(format_cell(2.0 / 3.0) == "0.666666666667");

  Table t;
  t.columns = {"a", "b"};
  t.add_row({"1", "2"});
  t.add_row({"3", "4"});
  const std::string csv = render_csv(t);
  CHECK(csv == "a,b\n1,2\n3,4\n");
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 12638187200555641996ULL);
  CHECK(fnv1a64("kerr") == 6358951657427832605ULL);
}

TEST_CASE("cli: exit codes") {
  const fs::path good = write_config("good_levels.json",
      R"({"physical":{"dim":24},
          "levels":{"delta_lo_k":-0.2,"delta_hi_k":3.5,"delta_points":36,
                    "eps2_points":7,"path_points":9}})");
  const fs::path out = scratch_root() / "out_levels";
  fs::remove_all(out);
  CHECK(run_cli("levels --config " + good.string() + " --out " + out.string()) == 0);

  const fs::path bad_key = write_config("bad_key.json", R"({"physical":{"bogus":1}})");
  CHECK(run_cli("levels --config " + bad_key.string() + " --out " +
                (scratch_root() / "x1").string()) == 2);

  const fs::path bad_axes = write_config("bad_axes.json",
      R"({"physical":{"eps2_kc_mhz":[9.7],"delta_as_kc_mhz":[5.0]}})");
  CHECK(run_cli("levels --config " + bad_axes.string() + " --out " +
                (scratch_root() / "x2").string()) == 2);

  const fs::path bad_t2 = write_config("bad_t2.json",
      R"({"physical":{"t1_us":1.0,"t2_us":3.0}})");
  CHECK(run_cli("levels --config " + bad_t2.string() + " --out " +
                (scratch_root() / "x3").string()) == 2);

  CHECK(run_cli("levels --config " + (scratch_root() / "missing.json").string() +
                " --out " + (scratch_root() / "x4").string()) == 2);
}

TEST_CASE("cli: unreachable integrator tolerance fails numerically") {
  const fs::path cfg = write_config("ramp_bad_rtol.json",
      R"({"physical":{"dim":16,"eps2_kc_mhz":[3.0],"t_up_ns":20.0,
                      "rtol":1e-30,"atol":1e-300},
          "protocol":{"strategy":"dynamic"},
          "ramp":{"samples":3}})");
  const fs::path out = scratch_root() / "out_bad_rtol";
  fs::remove_all(out);
  CHECK(run_cli("ramp --config " + cfg.string() + " --out " + out.string()) == 3);
}

TEST_CASE("cli: levels artifacts") {
  const fs::path out = scratch_root() / "out_levels";  // produced above
  REQUIRE(fs::exists(out / "levels_delta.csv"));
  REQUIRE(fs::exists(out / "levels_pump.csv"));
  REQUIRE(fs::exists(out / "levels_static_path.csv"));
  REQUIRE(fs::exists(out / "config.echo.json"));
  REQUIRE(fs::exists(out / "summary.json"));

  const std::string csv = slurp(out / "levels_delta.csv");
  CHECK(csv.find('\r') == std::string::npos);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("delta_mhz,e_f0,e_f1", 0) == 0);
  CHECK(count_fields(header) == 25);  // delta + dim columns
  int rows = 0;
  for (std::string line; std::getline(lines, line);)
    if (!line.empty()) {
      CHECK(count_fields(line) == 25);
      ++rows;
    }
  CHECK(rows == 36);

  const json echo = json::parse(slurp(out / "config.echo.json"));
  CHECK(echo.contains("physical"));
  CHECK(echo["physical"]["dim"] == 24);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary["experiment"] == "levels");
  CHECK(summary["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("cli: ramp artifacts are reproducible and job-count independent") {
  const fs::path cfg = write_config("ramp_repro.json",
      R"({"physical":{"dim":16,"eps2_kc_mhz":[4.0],"t_up_ns":60.0,
                      "rtol":1e-8,"atol":1e-11},
          "protocol":{"strategy":"dynamic","hold_ns":20.0},
          "ramp":{"samples":5,"emit_wigner":true,
                  "wigner_half_width":2.0,"wigner_points":11}})");
  // Same config + seed must give identical bytes, so the --out override (which
  // is part of the echoed config) has to match: run from per-run parent dirs.
  const fs::path a = scratch_root() / "repro_a";
  const fs::path b = scratch_root() / "repro_b";
  const fs::path c = scratch_root() / "repro_c";
  for (const fs::path& d : {a, b, c}) {
    fs::remove_all(d);
    fs::create_directories(d);
  }

  REQUIRE(run_cli("ramp --config " + cfg.string() + " --out out --seed 7 --jobs 1",
                  a) == 0);
  REQUIRE(run_cli("ramp --config " + cfg.string() + " --out out --seed 7 --jobs 1",
                  b) == 0);
  REQUIRE(run_cli("ramp --config " + cfg.string() + " --out out --seed 7 --jobs 2",
                  c) == 0);

  for (const char* name :
       {"ramp_dynamic.csv", "wigner_dynamic.csv", "summary.json", "config.echo.json"}) {
    CAPTURE(name);
    const std::string ref = slurp(a / "out" / name);
    CHECK(ref == slurp(b / "out" / name));
    CHECK(ref == slurp(c / "out" / name));
    CHECK(ref.find('\r') == std::string::npos);
  }

  const std::string csv = slurp(a / "out" / "ramp_dynamic.csv");
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t_ns,fid_cat,fid_plateau,fid_leak,weight");
}

TEST_CASE("cli: static compensation parked on a crossing loses the state") {
  const fs::path cfg = write_config("ramp_compare.json",
      R"({"physical":{"dim":22,"delta_as_kc_mhz":[6.9],"t_up_ns":160.0,
                      "rtol":1e-8,"atol":1e-11},
          "protocol":{"strategy":"both","hold_ns":20.0},
          "ramp":{"samples":5}})");
  const fs::path out = scratch_root() / "out_compare";
  fs::remove_all(out);
  REQUIRE(run_cli("ramp --config " + cfg.string() + " --out " + out.string()) == 0);
  REQUIRE(fs::exists(out / "ramp_static.csv"));
  REQUIRE(fs::exists(out / "ramp_dynamic.csv"));

  const json summary = json::parse(slurp(out / "summary.json"));
  const double f_dyn = summary["ramp"]["dynamic"]["fid_cat"].get<double>();
  const double f_sta = summary["ramp"]["static"]["fid_cat"].get<double>();
  CHECK(f_dyn > 0.98);
  CHECK(f_dyn - f_sta > 0.05);
  CHECK(f_sta >= 0.0);
  CHECK(f_sta <= 1.0);
}
