#include "qvdp/config.hpp"

#include "qvdp/errors.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qvdp {

using nlohmann::json;

namespace {

double number(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfinity;
  }
  throw ConfigError(field, "expected a number");
}

std::optional<double> optional_number(const json& v, const std::string& field) {
  if (v.is_null()) return std::nullopt;
  return number(v, field);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json rate_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

std::uint64_t unsigned_integer(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(field, "expected a non-negative integer");
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, field));
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return out;
}

void parse_sweep(const json& v, RunConfig& cfg) {
  if (!v.is_object()) throw ConfigError("sweep", "expected an object");
  std::optional<std::vector<SweepPoint>> points;
  std::optional<std::vector<double>> detunings, couplings, thetas;
  for (const auto& [key, val] : v.items()) {
    if (key == "points") {
      if (!val.is_array()) throw ConfigError("sweep.points", "expected a list");
      points.emplace();
      for (const auto& p : val) {
        SweepPoint pt{cfg.detuning, cfg.coupling, cfg.theta};
        if (!p.is_object()) throw ConfigError("sweep.points", "each point must be an object");
        for (const auto& [k, x] : p.items()) {
          if (k == "detuning") pt.detuning = number(x, "sweep.points.detuning");
          else if (k == "V") pt.coupling = number(x, "sweep.points.V");
          else if (k == "theta") pt.theta = number(x, "sweep.points.theta");
          else throw ConfigError("sweep.points." + k, "unknown key");
        }
        points->push_back(pt);
      }
    } else if (key == "detunings") {
      detunings = number_list(val, "sweep.detunings");
    } else if (key == "couplings") {
      couplings = number_list(val, "sweep.couplings");
    } else if (key == "thetas") {
      thetas = number_list(val, "sweep.thetas");
    } else if (key == "analytic_only") {
      cfg.analytic_only = boolean(val, "sweep.analytic_only");
    } else {
      throw ConfigError("sweep." + key, "unknown key");
    }
  }
  if (points && (detunings || couplings || thetas))
    throw ConfigError("sweep", "give either points or detunings/couplings/thetas, not both");
  if (points) {
    cfg.sweep = *points;
  } else if (detunings || couplings || thetas) {
    cfg.sweep.clear();
    for (double th : thetas.value_or(std::vector<double>{cfg.theta}))
      for (double v : couplings.value_or(std::vector<double>{cfg.coupling}))
        for (double dw : detunings.value_or(std::vector<double>{cfg.detuning})) cfg.sweep.push_back({dw, v, th});
  }
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"units",
       [](RunConfig& c, const json& v) {
         const auto s = string(v, "units");
         if (s == "gamma_up") c.units = Units::gamma_up;
         else if (s == "absolute") c.units = Units::absolute;
         else throw ConfigError("units", "expected gamma_up or absolute");
       }},
      {"omega1", [](RunConfig& c, const json& v) { c.omega1 = number(v, "omega1"); }},
      {"gamma_up", [](RunConfig& c, const json& v) { c.gamma_up = number(v, "gamma_up"); }},
      {"gamma_up_2", [](RunConfig& c, const json& v) { c.gamma_up_2 = optional_number(v, "gamma_up_2"); }},
      {"gamma_down", [](RunConfig& c, const json& v) { c.gamma_down = number(v, "gamma_down"); }},
      {"gamma_down_2", [](RunConfig& c, const json& v) { c.gamma_down_2 = optional_number(v, "gamma_down_2"); }},
      {"V", [](RunConfig& c, const json& v) { c.coupling = number(v, "V"); }},
      {"detuning", [](RunConfig& c, const json& v) { c.detuning = number(v, "detuning"); }},
      {"theta", [](RunConfig& c, const json& v) { c.theta = number(v, "theta"); }},
      {"mode",
       [](RunConfig& c, const json& v) {
         const auto s = string(v, "mode");
         if (s == "quantum-limit") c.mode = Mode::quantum_limit;
         else if (s == "truncated") c.mode = Mode::truncated;
         else throw ConfigError("mode", "expected quantum-limit or truncated");
       }},
      {"fock_dim", [](RunConfig& c, const json& v) { c.fock_dim = integer(v, "fock_dim"); }},
      {"trajectories",
       [](RunConfig& c, const json& v) { c.ensemble.n_trajectories = unsigned_integer(v, "trajectories"); }},
      {"seed", [](RunConfig& c, const json& v) { c.ensemble.master_seed = unsigned_integer(v, "seed"); }},
      {"total_time",
       [](RunConfig& c, const json& v) { c.ensemble.total_time = optional_number(v, "total_time"); }},
      {"burn_in", [](RunConfig& c, const json& v) { c.ensemble.burn_in = optional_number(v, "burn_in"); }},
      {"sample_interval",
       [](RunConfig& c, const json& v) { c.ensemble.sample_interval = optional_number(v, "sample_interval"); }},
      {"pearson_width",
       [](RunConfig& c, const json& v) { c.ensemble.pearson_width = optional_number(v, "pearson_width"); }},
      {"dt", [](RunConfig& c, const json& v) { c.ensemble.dt = optional_number(v, "dt"); }},
      {"threads", [](RunConfig& c, const json& v) { c.ensemble.threads = integer(v, "threads"); }},
      {"bins", [](RunConfig& c, const json& v) { c.ensemble.bins = integer(v, "bins"); }},
      {"theta_centered",
       [](RunConfig& c, const json& v) { c.ensemble.theta_centered = boolean(v, "theta_centered"); }},
      {"entropy_tail", [](RunConfig& c, const json& v) { c.ensemble.entropy_tail = number(v, "entropy_tail"); }},
      {"renormalize",
       [](RunConfig& c, const json& v) {
         c.ensemble.integrator.renormalize_every_step = boolean(v, "renormalize");
       }},
      {"leak_tol",
       [](RunConfig& c, const json& v) { c.ensemble.integrator.truncation_leak_tol = number(v, "leak_tol"); }},
      {"collapse_tol",
       [](RunConfig& c, const json& v) { c.ensemble.integrator.norm_collapse_tol = number(v, "collapse_tol"); }},
      {"sweep", [](RunConfig& c, const json& v) { parse_sweep(v, c); }},
      {"out", [](RunConfig& c, const json& v) { c.out_dir = string(v, "out"); }},
      {"format",
       [](RunConfig& c, const json& v) {
         const auto s = string(v, "format");
         if (s == "csv") c.format = Format::csv;
         else if (s == "json") c.format = Format::json;
         else throw ConfigError("format", "expected csv or json");
       }},
  };
  return table;
}

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

VdpParams RunConfig::params() const {
  const double s = rate_scale();
  VdpParams p;
  p.omega1 = omega1;
  p.omega2 = omega1 + detuning * s;
  p.gamma_up_1 = gamma_up;
  p.gamma_up_2 = gamma_up_2 ? *gamma_up_2 * s : gamma_up;
  p.gamma_down_1 = gamma_down * s;
  p.gamma_down_2 = gamma_down_2.value_or(gamma_down) * s;
  p.coupling = coupling * s;
  p.theta = theta;
  return p;
}

FockSpace RunConfig::space() const {
  if (mode == Mode::quantum_limit) return FockSpace({2, 2});
  return FockSpace({fock_dim, fock_dim});
}

std::vector<SweepPoint> RunConfig::grid() const {
  const double s = rate_scale();
  std::vector<SweepPoint> out;
  for (const auto& p : sweep) out.push_back({p.detuning * s, p.coupling * s, p.theta});
  return out;
}

void RunConfig::validate() const {
  require(std::isfinite(omega1), "omega1", "must be finite");
  require(std::isfinite(gamma_up) && gamma_up > 0.0, "gamma_up", "must be > 0 and finite");
  const VdpParams p = params();
  p.validate();
  if (mode == Mode::quantum_limit) {
    require(p.quantum_limit(), "gamma_down", "quantum-limit mode needs gamma_down = inf");
    require(fock_dim == 2, "fock_dim", "quantum-limit mode uses two levels per oscillator");
  } else {
    require(!std::isinf(p.gamma_down_1) && !std::isinf(p.gamma_down_2), "gamma_down",
            "truncated mode needs a finite gamma_down");
    require(fock_dim >= 2 && fock_dim <= 32, "fock_dim", "must be in [2, 32]");
  }
  const EnsembleConfig& e = ensemble;
  require(e.n_trajectories >= 1, "trajectories", "must be >= 1");
  const auto positive = [](const std::optional<double>& v) { return !v || (std::isfinite(*v) && *v > 0.0); };
  require(positive(e.total_time), "total_time", "must be > 0");
  require(!e.burn_in || (std::isfinite(*e.burn_in) && *e.burn_in >= 0.0), "burn_in", "must be >= 0");
  require(!(e.burn_in && e.total_time) || *e.burn_in < *e.total_time, "burn_in", "must be < total_time");
  require(positive(e.sample_interval), "sample_interval", "must be > 0");
  require(positive(e.pearson_width), "pearson_width", "must be > 0");
  require(positive(e.dt), "dt", "must be > 0");
  require(!(e.dt && e.sample_interval) || *e.sample_interval >= *e.dt * (1.0 - 1e-9), "sample_interval",
          "must be >= dt");
  require(e.threads >= 0, "threads", "must be >= 0");
  require(e.bins >= 1, "bins", "must be >= 1");
  require(std::isfinite(e.entropy_tail) && e.entropy_tail >= 0.0, "entropy_tail", "must be >= 0");
  require(e.integrator.truncation_leak_tol > 0.0, "leak_tol", "must be > 0");
  require(e.integrator.norm_collapse_tol > 0.0, "collapse_tol", "must be > 0");
  for (const auto& pt : sweep) {
    require(std::isfinite(pt.detuning), "sweep.detuning", "must be finite");
    require(std::isfinite(pt.coupling) && pt.coupling >= 0.0, "sweep.V", "must be >= 0 and finite");
    require(std::isfinite(pt.theta), "sweep.theta", "must be finite");
  }
  require(!out_dir.empty(), "out", "must not be empty");
}

std::vector<std::string> preset_names() {
  return {"fig1", "fig2a", "fig2b", "fig2c", "fig3", "figS1", "figS2a", "figS2b"};
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.gamma_up = 0.01;
  c.omega1 = 8.0 * std::numbers::pi;
  c.detuning = 1.0;
  c.ensemble.n_trajectories = 1000;
  const auto points = [&](std::initializer_list<SweepPoint> pts) { c.sweep.assign(pts); };
  if (name == "fig1") {
    c.omega1 = 2.0 * std::numbers::pi;
    c.detuning = 0.1;
    c.coupling = 10.0;
    c.ensemble.n_trajectories = 1;
    c.ensemble.pearson_width = 8.0 * std::numbers::pi / c.omega1;
  } else if (name == "fig2a" || name == "fig3") {
    c.coupling = 5.0;
    points({{1.0, 5.0, 0.0}, {1.0, 50.0, 0.0}});
  } else if (name == "fig2b") {
    c.coupling = 50.0;
    const auto dws = linspace(-50.0, 50.0, 41);
    const auto vs = linspace(0.0, 100.0, 41);
    c.sweep = rectangular_grid(dws, vs);
    c.analytic_only = true;
  } else if (name == "fig2c") {
    c.coupling = 5.0;
    points({{1.0, 5.0, 0.0}, {1.0, 20.0, 0.0}, {1.0, 50.0, 0.0}, {1.0, 100.0, 0.0}});
  } else if (name == "figS1") {
    c.coupling = 100.0;
    points({{1.0, 100.0, 0.0}, {1.0, 5.0, 0.0}, {20.0, 20.0, 0.0}});
  } else if (name == "figS2a") {
    c.coupling = 20.0;
    c.detuning = 0.0;
    for (double dw : linspace(-30.0, 30.0, 11)) c.sweep.push_back({dw, 20.0, 0.0});
  } else if (name == "figS2b") {
    c.coupling = 100.0;
    points({{1.0, 100.0, 0.0}, {1.0, 100.0, std::numbers::pi / 3.0}, {1.0, 100.0, std::numbers::pi / 2.0}});
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return c;
}

RunConfig apply_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  if (auto it = j.find("preset"); it != j.end() && !it->is_null()) base = preset(string(*it, "preset"));
  const auto& table = setters();
  // Scalars first so sweep lists default to the final base values.
  for (const auto& [key, val] : j.items()) {
    if (key == "preset" || key == "sweep") continue;
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown key");
    it->second(base, val);
  }
  if (auto it = j.find("sweep"); it != j.end()) {
    if (it->is_null()) {
      base.sweep.clear();
      base.analytic_only = false;
    } else {
      parse_sweep(*it, base);
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string marker = "# config ";
  if (text.rfind("#", 0) == 0) {
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind(marker, 0) != 0) continue;
      try {
        return apply_json(json::parse(line.substr(marker.size())), std::move(base));
      } catch (const json::exception& e) {
        throw ConfigError("config", e.what());
      }
    }
    throw ConfigError("config", "no '# config' metadata line in " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config", e.what());
  }
  if (j.is_object() && j.contains("config") && j["config"].is_object()) return apply_json(j["config"], std::move(base));
  return apply_json(j, std::move(base));
}

json to_json(const RunConfig& c) {
  const EnsembleConfig& e = c.ensemble;
  json sweep = nullptr;
  if (!c.sweep.empty()) {
    json pts = json::array();
    for (const auto& p : c.sweep) pts.push_back({{"detuning", p.detuning}, {"V", p.coupling}, {"theta", p.theta}});
    sweep = {{"points", pts}, {"analytic_only", c.analytic_only}};
  }
  return {
      {"preset", c.preset.empty() ? json(nullptr) : json(c.preset)},
      {"units", c.units == Units::gamma_up ? "gamma_up" : "absolute"},
      {"omega1", c.omega1},
      {"gamma_up", c.gamma_up},
      {"gamma_up_2", optional_json(c.gamma_up_2)},
      {"gamma_down", rate_json(c.gamma_down)},
      {"gamma_down_2", c.gamma_down_2 ? rate_json(*c.gamma_down_2) : json(nullptr)},
      {"V", c.coupling},
      {"detuning", c.detuning},
      {"theta", c.theta},
      {"mode", c.mode == Mode::quantum_limit ? "quantum-limit" : "truncated"},
      {"fock_dim", c.fock_dim},
      {"trajectories", e.n_trajectories},
      {"seed", e.master_seed},
      {"total_time", optional_json(e.total_time)},
      {"burn_in", optional_json(e.burn_in)},
      {"sample_interval", optional_json(e.sample_interval)},
      {"pearson_width", optional_json(e.pearson_width)},
      {"dt", optional_json(e.dt)},
      {"threads", e.threads},
      {"bins", e.bins},
      {"theta_centered", e.theta_centered},
      {"entropy_tail", e.entropy_tail},
      {"renormalize", e.integrator.renormalize_every_step},
      {"leak_tol", e.integrator.truncation_leak_tol},
      {"collapse_tol", e.integrator.norm_collapse_tol},
      {"sweep", sweep},
      {"out", c.out_dir},
      {"format", c.format == Format::csv ? "csv" : "json"},
  };
}

}  // namespace qvdp
