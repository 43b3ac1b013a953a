#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path root = fs::temp_directory_path() / "qvdp_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(QVDP_CLI_PATH) + " " + args + " > " + (root / "stdout.txt").string() +
                          " 2> " + (root / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string& name) {
  const fs::path d = root / name;
  fs::remove_all(d);
  return d;
}

fs::path write_config(const std::string& name, const json& j) {
  fs::create_directories(root);
  const fs::path p = root / name;
  std::ofstream(p) << j.dump();
  return p;
}

// Data rows of a CSV file (lines not starting with '#', minus the header).
std::vector<std::string> rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

const json quick{{"V", 50}, {"detuning", 1}, {"trajectories", 4}, {"burn_in", 2}, {"total_time", 6}};

}  // namespace

TEST_CASE("steady subcommand") {
  fs::create_directories(root);
  const fs::path out = fresh("steady");
  REQUIRE(run("steady --preset fig1 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "steady_matrix.csv"));
  const json s = json::parse(slurp(out / "summary.json"));
  CHECK(s["seed"] == 1);
  CHECK(s["config"]["preset"] == "fig1");
  CHECK(s["summary"]["c_pi"]["abs"].get<double>() == doctest::Approx(0.6508683177902411).epsilon(1e-9));
  CHECK(s["summary"]["p"].get<double>() == doctest::Approx(0.1540473781593794).epsilon(1e-9));
  CHECK(rows(out / "steady_matrix.csv").size() == 16);
  CHECK(slurp(out / "steady_matrix.csv").rfind("# config {", 0) == 0);
}

TEST_CASE("steady grid from the fig2b preset") {
  const fs::path out = fresh("fig2b");
  REQUIRE(run("steady --preset fig2b --out " + out.string()) == 0);
  CHECK(rows(out / "steady_grid.csv").size() == 41 * 41);
  CHECK(slurp(out / "steady_grid.csv").find("\ndetuning,V,theta,abs_c_pi,phase_pi,tongue_V\n") != std::string::npos);
}

TEST_CASE("steady outputs carry the closed-form values") {
  const fs::path out = fresh("steady_fig1");
  REQUIRE(run("steady --preset fig1 --out " + out.string()) == 0);
  const json s = json::parse(slurp(out / "summary.json"));
  CHECK(s["summary"]["phase_pi"].get<double>() == doctest::Approx(-0.0077).epsilon(0.01));

  const fs::path free = fresh("steady_free");
  REQUIRE(run("steady --config " + write_config("free.json", json{{"V", 0}}).string() + " --out " +
              free.string()) == 0);
  CHECK(json::parse(slurp(free / "summary.json"))["summary"]["p"].get<double>() ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("fig1 trajectory is reproducible and uses the 8 pi / omega1 window") {
  const fs::path a = fresh("fig1_a"), b = fresh("fig1_b");
  REQUIRE(run("trajectory --preset fig1 --seed 5 --out " + a.string()) == 0);
  REQUIRE(run("trajectory --preset fig1 --seed 5 --out " + b.string()) == 0);
  CHECK(rows(a / "trajectory_0000.csv") == rows(b / "trajectory_0000.csv"));
  CHECK(slurp(a / "trajectory_0000.csv").find("# pearson_width 4.0\n") != std::string::npos);
}

TEST_CASE("fig3 and figS2b presets through the sweep command") {
  const fs::path f3 = fresh("fig3");
  const json small{{"preset", "fig3"}, {"trajectories", 3}, {"burn_in", 1}, {"total_time", 3}};
  REQUIRE(run("sweep --config " + write_config("fig3.json", small).string() + " --out " + f3.string()) == 0);
  for (const char* pt : {"point_000", "point_001"}) {
    CHECK(rows(f3 / pt / "scatter.csv").size() == 3);
    CHECK(fs::exists(f3 / pt / "hist_entropy.csv"));
  }
  json s2 = small;
  s2["preset"] = "figS2b";
  const fs::path fs2 = fresh("figS2b");
  REQUIRE(run("sweep --config " + write_config("figS2b.json", s2).string() + " --out " + fs2.string()) == 0);
  for (const char* pt : {"point_000", "point_001", "point_002"}) CHECK(fs::exists(fs2 / pt / "hist_phase.csv"));
  CHECK_FALSE(fs::exists(fs2 / "point_003"));
}

TEST_CASE("trajectory subcommand") {
  const fs::path cfg = write_config("traj.json", quick);
  const fs::path out = fresh("traj");
  REQUIRE(run("trajectory --config " + cfg.string() + " --traj 2 --seed 3 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "trajectory_0000.csv"));
  CHECK(fs::exists(out / "trajectory_0001.csv"));
  CHECK_FALSE(fs::exists(out / "trajectory_0002.csv"));
  const std::string text = slurp(out / "trajectory_0000.csv");
  CHECK(text.find("# seed 3\n") != std::string::npos);
  CHECK(text.find("t,abs_c,delta_phi,pearson,x1,x2,entropy") != std::string::npos);
  CHECK(rows(out / "trajectory_0000.csv").size() > 100);

  // re-running from the output reproduces it exactly
  const fs::path again = fresh("traj_again");
  REQUIRE(run("trajectory --config " + (out / "trajectory_0000.csv").string() + " --traj 2 --out " +
              again.string()) == 0);
  CHECK(rows(again / "trajectory_0001.csv") == rows(out / "trajectory_0001.csv"));
}

TEST_CASE("ensemble subcommand, csv and json") {
  const fs::path cfg = write_config("ens.json", quick);
  const fs::path out = fresh("ens");
  REQUIRE(run("ensemble --config " + cfg.string() + " --out " + out.string() + " --threads 2") == 0);
  for (const char* f : {"hist_abs_c.csv", "hist_phase.csv", "hist_pearson.csv", "hist_entropy.csv", "scatter.csv"})
    CHECK(fs::exists(out / f));
  CHECK(rows(out / "hist_phase.csv").size() == 40);
  CHECK(rows(out / "scatter.csv").size() == 4);

  const fs::path js = fresh("ens_json");
  REQUIRE(run("ensemble --config " + cfg.string() + " --format json --out " + js.string()) == 0);
  const json r = json::parse(slurp(js / "results.json"));
  CHECK(r.contains("config"));
  CHECK(r.contains("summary"));
  CHECK(r["tables"].contains("hist_abs_c"));
  CHECK(r["config"]["trajectories"] == 4);

  // thread count does not change the numbers
  CHECK(rows(out / "hist_phase.csv") == [&] {
    const fs::path one = fresh("ens_one");
    run("ensemble --config " + cfg.string() + " --out " + one.string() + " --threads 1");
    return rows(one / "hist_phase.csv");
  }());
}

TEST_CASE("sweep subcommand") {
  json j = quick;
  j["trajectories"] = 2;
  j["sweep"] = {{"couplings", {5, 50}}};
  const fs::path cfg = write_config("sweep.json", j);
  const fs::path out = fresh("sweep");
  REQUIRE(run("sweep --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(rows(out / "sweep.csv").size() == 2);
  CHECK(fs::exists(out / "point_000" / "hist_phase.csv"));
  CHECK(fs::exists(out / "point_001" / "hist_phase.csv"));

  // no grid at all
  CHECK(run("sweep --config " + write_config("nogrid.json", quick).string() + " --out " +
            fresh("nogrid").string()) == 2);
}

TEST_CASE("exit codes") {
  CHECK(run("steady --preset nope") == 2);
  CHECK(run("steady --config " + (root / "does_not_exist.json").string()) == 2);
  CHECK(run("steady --config " + write_config("bad.json", json{{"V", -1}}).string()) == 2);
  CHECK(run("steady --config " + write_config("unknown.json", json{{"colour", 1}}).string()) == 2);
  CHECK(run("ensemble --format xml") == 2);
  CHECK(run("--seed 3") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--help") == 0);
  CHECK(slurp(root / "stdout.txt").find("trajectory") != std::string::npos);

  // a collapse tolerance above one aborts every trajectory
  json j = quick;
  j["collapse_tol"] = 2.0;
  CHECK(run("ensemble --config " + write_config("collapse.json", j).string() + " --out " +
            fresh("collapse").string()) == 3);
  CHECK(slurp(root / "stderr.txt").find("numerical failure") != std::string::npos);
}
