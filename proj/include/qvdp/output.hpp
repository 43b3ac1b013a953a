#pragma once

// Plot-ready tables and summaries for each subcommand, written as CSV (plus a
// summary JSON) or as a single JSON document. Every file carries the full
// config and master seed so a run can be reproduced from its output.

#include "qvdp/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qvdp {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // NaN marks an undefined entry
};

struct Report {
  nlohmann::json meta = nlohmann::json::object();  // short scalar facts, repeated in every CSV header
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, Table>> tables;  // names may contain '/' for subdirectories
};

/// Steady state, C_pi, phase, marginal excitation and tongue boundary; with
/// sweep points, also the closed-form grid.
Report steady_report(const RunConfig& cfg);

Report trajectory_report(const RunConfig& cfg, std::span<const TrajectoryRecord> records);

Report ensemble_report(const RunConfig& cfg, const EnsembleResult& result);

Report sweep_report(const RunConfig& cfg, const SweepResult& result);

/// Writes the report below dir and returns the files written.
std::vector<std::filesystem::path> write_report(const RunConfig& cfg, const Report& report,
                                                const std::filesystem::path& dir);

/// CSV text of one table with "# " metadata lines ("# config" first).
std::string csv_text(const RunConfig& cfg, const nlohmann::json& meta, const Table& table);

}  // namespace qvdp
