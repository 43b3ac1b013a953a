#pragma once

// Run configuration: JSON files, named presets and command-line overrides.

#include "qvdp/ensemble.hpp"

#include <json.hpp>

#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace qvdp {

enum class Units { gamma_up, absolute };
enum class Mode { quantum_limit, truncated };
enum class Format { csv, json };

/// Everything a run needs. Rates other than gamma_up (gamma_up_2, gamma_down,
/// V, detuning and sweep coordinates) are in units of gamma_up unless
/// units == absolute. Frequencies omega1 and times are always absolute.
struct RunConfig {
  std::string preset;
  Units units = Units::gamma_up;
  double omega1 = 2.0 * std::numbers::pi;
  double gamma_up = 0.01;
  std::optional<double> gamma_up_2;
  double gamma_down = kInfinity;
  std::optional<double> gamma_down_2;
  double coupling = 0.0;
  double detuning = 0.0;
  double theta = 0.0;
  Mode mode = Mode::quantum_limit;
  int fock_dim = 2;

  EnsembleConfig ensemble = [] {
    EnsembleConfig e;
    e.master_seed = 1;
    return e;
  }();
  std::vector<SweepPoint> sweep;  // in config units
  bool analytic_only = false;

  std::string out_dir = "out";
  Format format = Format::csv;

  double rate_scale() const { return units == Units::gamma_up ? gamma_up : 1.0; }
  /// Absolute-unit model parameters.
  VdpParams params() const;
  FockSpace space() const;
  /// Sweep points in absolute units.
  std::vector<SweepPoint> grid() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

std::vector<std::string> preset_names();

/// Throws ConfigError("preset", ...) for an unknown name.
RunConfig preset(const std::string& name);

/// Applies the keys of `j` on top of `base`. Unknown keys are rejected. A
/// "preset" key replaces `base` with that preset before the other keys apply.
RunConfig apply_json(const nlohmann::json& j, RunConfig base);

/// Reads a config file: a plain JSON config, a JSON output carrying the config
/// under "config", or a CSV output with a "# config " metadata line.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Complete config; apply_json(to_json(c), {}) reproduces c.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace qvdp
