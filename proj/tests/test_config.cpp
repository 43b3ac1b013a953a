#include "qvdp/config.hpp"
#include "qvdp/errors.hpp"
#include "qvdp/output.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace qvdp;
using nlohmann::json;

namespace {

std::string error_field(const json& j) {
  try {
    apply_json(j, {}).validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "none";
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qvdp_test_config";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("defaults are valid") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.ensemble.master_seed == 1);
  CHECK(c.params().quantum_limit());
  CHECK(c.space() == FockSpace({2, 2}));
}

TEST_CASE("rates scale with gamma_up unless absolute") {
  RunConfig c = apply_json(json{{"gamma_up", 0.02}, {"V", 50}, {"detuning", 1}, {"theta", 0.3}}, {});
  VdpParams p = c.params();
  CHECK(p.coupling == doctest::Approx(1.0));
  CHECK(p.omega2 - p.omega1 == doctest::Approx(0.02));
  CHECK(p.gamma_up_2 == doctest::Approx(0.02));
  CHECK(p.theta == 0.3);

  c = apply_json(json{{"units", "absolute"}, {"V", 0.5}, {"gamma_up_2", 0.03}}, c);
  p = c.params();
  CHECK(p.coupling == doctest::Approx(0.5));
  CHECK(p.gamma_up_2 == doctest::Approx(0.03));
}

TEST_CASE("truncated mode") {
  const RunConfig c = apply_json(json{{"mode", "truncated"}, {"gamma_down", 10}, {"fock_dim", 5}}, {});
  CHECK_NOTHROW(c.validate());
  CHECK(c.space() == FockSpace({5, 5}));
  CHECK(c.params().gamma_down_1 == doctest::Approx(0.1));
  CHECK_FALSE(c.params().quantum_limit());
  CHECK(error_field(json{{"mode", "truncated"}}) == "gamma_down");
  CHECK(error_field(json{{"gamma_down", 3}}) == "gamma_down");
  CHECK(error_field(json{{"mode", "truncated"}, {"gamma_down", 3}, {"fock_dim", 1}}) == "fock_dim");
  CHECK(apply_json(json{{"gamma_down", "inf"}}, {}).gamma_down == kInfinity);
}

TEST_CASE("invalid values name the field") {
  CHECK(error_field(json{{"V", -1}}) != "none");
  CHECK(error_field(json{{"gamma_up", 0}}) == "gamma_up");
  CHECK(error_field(json{{"trajectories", 0}}) == "trajectories");
  CHECK(error_field(json{{"trajectories", -3}}) == "trajectories");
  CHECK(error_field(json{{"trajectories", "many"}}) == "trajectories");
  CHECK(error_field(json{{"burn_in", 10}, {"total_time", 5}}) == "burn_in");
  CHECK(error_field(json{{"dt", 0.1}, {"sample_interval", 0.01}}) == "sample_interval");
  CHECK(error_field(json{{"bins", 0}}) == "bins");
  CHECK(error_field(json{{"format", "xml"}}) == "format");
  CHECK(error_field(json{{"mode", "classical"}}) == "mode");
  CHECK(error_field(json{{"bogus", 1}}) == "bogus");
  CHECK(error_field(json{{"preset", "fig9"}}) == "preset");
  CHECK(error_field(json{{"sweep", {{"points", {{{"detuning", 1}, {"V", -5}}}}}}}) == "sweep.V");
  CHECK(error_field(json{{"sweep", {{"points", json::array()}, {"couplings", {1}}}}}) == "sweep");
  CHECK(error_field(json{{"sweep", {{"spacing", 1}}}}) == "sweep.spacing");
  CHECK(error_field(json::array()) == "config");
}

TEST_CASE("sweep lists expand in the config units") {
  const RunConfig c = apply_json(
      json{{"V", 7}, {"detuning", 2}, {"sweep", {{"detunings", {-1, 0, 1}}, {"couplings", {5, 10}}}}}, {});
  REQUIRE(c.sweep.size() == 6);
  CHECK(c.sweep[0].detuning == -1.0);
  CHECK(c.sweep[0].coupling == 5.0);
  CHECK(c.sweep[3].coupling == 10.0);
  const auto grid = c.grid();
  CHECK(grid[5].detuning == doctest::Approx(0.01));
  CHECK(grid[5].coupling == doctest::Approx(0.1));

  const RunConfig only_v = apply_json(json{{"detuning", 2}, {"sweep", {{"couplings", {5}}}}}, {});
  REQUIRE(only_v.sweep.size() == 1);
  CHECK(only_v.sweep[0].detuning == 2.0);

  const RunConfig th = apply_json(json{{"V", 100}, {"sweep", {{"thetas", {0, 1}}}}}, {});
  REQUIRE(th.sweep.size() == 2);
  CHECK(th.sweep[1].theta == 1.0);
  CHECK(th.sweep[1].coupling == 100.0);
}

TEST_CASE("every preset is valid") {
  CHECK(preset_names().size() == 8);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const RunConfig c = preset(name);
    CHECK_NOTHROW(c.validate());
    CHECK(c.gamma_up == doctest::Approx(0.01));
    CHECK(c.preset == name);
  }
  CHECK(preset("fig1").coupling == 10.0);
  CHECK(preset("fig1").detuning == doctest::Approx(0.1));
  CHECK(preset("fig1").omega1 == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(preset("fig2c").sweep.size() == 4);
  CHECK(preset("fig2b").analytic_only);
  CHECK(preset("fig2b").sweep.size() == 41 * 41);
  CHECK(preset("figS2a").sweep.size() == 11);
  CHECK(preset("figS2b").sweep[2].theta == doctest::Approx(std::numbers::pi / 2));
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("preset keys and overrides in JSON") {
  const RunConfig c = apply_json(json{{"seed", 9}, {"preset", "fig2c"}, {"trajectories", 10}}, {});
  CHECK(c.preset == "fig2c");
  CHECK(c.ensemble.master_seed == 9);
  CHECK(c.ensemble.n_trajectories == 10);
  CHECK(c.sweep.size() == 4);
}

TEST_CASE("to_json round trips") {
  RunConfig c = preset("figS2b");
  c.ensemble.total_time = 40.0;
  c.ensemble.dt = 1e-3;
  c.ensemble.theta_centered = true;
  c.format = Format::json;
  c.gamma_down_2 = 5.0;
  const json j = to_json(c);
  const RunConfig back = apply_json(j, {});
  CHECK(to_json(back) == j);
  CHECK(back.sweep.size() == c.sweep.size());
  CHECK(*back.ensemble.total_time == 40.0);
  CHECK_FALSE(back.ensemble.burn_in);
  CHECK(back.gamma_down == kInfinity);
  CHECK(*back.gamma_down_2 == 5.0);
}

TEST_CASE("load_config from plain JSON, JSON output and CSV output") {
  const auto plain = scratch("plain.json");
  std::ofstream(plain) << R"({"V": 20, "seed": 4, "trajectories": 3})";
  const RunConfig a = load_config(plain);
  CHECK(a.coupling == 20.0);
  CHECK(a.ensemble.master_seed == 4);

  RunConfig src = preset("fig1");
  src.ensemble.master_seed = 77;
  src.ensemble.total_time = 1.0;
  src.out_dir = scratch("out_csv").string();
  const auto csv_files = write_report(src, steady_report(src), src.out_dir);
  REQUIRE_FALSE(csv_files.empty());
  const RunConfig from_csv = load_config(std::filesystem::path(src.out_dir) / "steady_matrix.csv");
  CHECK(to_json(from_csv) == to_json(src));
  CHECK(to_json(load_config(std::filesystem::path(src.out_dir) / "summary.json")) == to_json(src));

  src.format = Format::json;
  src.out_dir = scratch("out_json").string();
  write_report(src, steady_report(src), src.out_dir);
  CHECK(to_json(load_config(std::filesystem::path(src.out_dir) / "results.json")) == to_json(src));

  CHECK_THROWS_AS(load_config(scratch("missing.json")), ConfigError);
  const auto broken = scratch("broken.json");
  std::ofstream(broken) << "{ not json";
  CHECK_THROWS_AS(load_config(broken), ConfigError);
  const auto headerless = scratch("headerless.csv");
  std::ofstream(headerless) << "a,b\n1,2\n";
  CHECK_THROWS_AS(load_config(headerless), ConfigError);
}

TEST_CASE("CSV text carries metadata and full precision") {
  RunConfig c;
  c.ensemble.master_seed = 12;
  Table t{{"x", "y"}, {{0.1, std::nan("")}, {1.0 / 3.0, 2.0}}};
  const std::string text = csv_text(c, json{{"note", "hello"}}, t);
  CHECK(text.rfind("# config {", 0) == 0);
  CHECK(text.find("# seed 12\n") != std::string::npos);
  CHECK(text.find("# note hello\n") != std::string::npos);
  CHECK(text.find("\nx,y\n") != std::string::npos);
  CHECK(text.find("0.33333333333333331,2") != std::string::npos);
  CHECK(text.find("0.10000000000000001,nan") != std::string::npos);
}

TEST_CASE("minimal absolute-unit config") {
  const RunConfig c = apply_json(
      json{{"units", "absolute"}, {"gamma_up", 0.01}, {"V", 0.5}, {"detuning", 0.01}, {"theta", 0},
           {"mode", "quantum-limit"}},
      {});
  CHECK_NOTHROW(c.validate());
  const VdpParams p = c.params();
  CHECK(p.coupling == 0.5);
  CHECK(p.detuning() == doctest::Approx(0.01));
  const EnsembleConfig e = c.ensemble.resolved(p, build_vdp_model(p));
  CHECK(e.total_time);
  CHECK(e.pearson_width);
}

TEST_CASE("fig1 preset parameters") {
  const RunConfig c = preset("fig1");
  const VdpParams p = c.params();
  CHECK(p.omega1 == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(p.detuning() == doctest::Approx(0.001));
  CHECK(p.coupling == doctest::Approx(0.1));
  CHECK(p.gamma_up_1 == doctest::Approx(0.01));
  CHECK(*c.ensemble.pearson_width == doctest::Approx(8.0 * std::numbers::pi / p.omega1));
}
