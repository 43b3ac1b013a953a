#include "qvdp/output.hpp"

#include "qvdp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qvdp {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kPhaseVariance = "linear variance of samples re-wrapped into (theta-pi, theta+pi]";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json params_json(const VdpParams& p) {
  const auto rate = [](double r) { return std::isinf(r) ? json("inf") : json(r); };
  return {{"omega1", p.omega1},
          {"omega2", p.omega2},
          {"gamma_up_1", p.gamma_up_1},
          {"gamma_up_2", p.gamma_up_2},
          {"gamma_down_1", rate(p.gamma_down_1)},
          {"gamma_down_2", rate(p.gamma_down_2)},
          {"V", p.coupling},
          {"theta", p.theta}};
}

bool closed_form(const VdpParams& p) { return p.quantum_limit() && p.symmetric_rates(); }

json stat_json(const PooledStat& s) {
  return {{"samples", s.samples}, {"mean", num(s.mean)}, {"variance", num(s.variance)}, {"mean_se", num(s.mean_se)}};
}

json resolved_json(const EnsembleConfig& e) {
  return {{"total_time", *e.total_time},
          {"burn_in", *e.burn_in},
          {"sample_interval", *e.sample_interval},
          {"pearson_width", *e.pearson_width},
          {"dt", *e.dt}};
}

Table histogram_table(const Histogram& h) {
  Table t{{"bin_center", "density"}, {}};
  const auto d = h.density();
  for (int i = 0; i < h.bins(); ++i) t.rows.push_back({h.center(i), d[static_cast<std::size_t>(i)]});
  return t;
}

json trajectory_summary(const std::vector<double>& v) {
  if (v.size() < 2) return {{"n", v.size()}, {"mean", v.empty() ? json(nullptr) : json(v.front())}, {"variance", 0.0}};
  const Summary s = summarize(v);
  return {{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}, {"std_error", s.std_error}};
}

// Summary and tables of one ensemble, table names prefixed by `prefix`.
void add_ensemble(Report& rep, const std::string& prefix, const EnsembleResult& r, json& summary) {
  rep.tables.emplace_back(prefix + "hist_abs_c", histogram_table(r.abs_c));
  rep.tables.emplace_back(prefix + "hist_phase", histogram_table(r.phase));
  rep.tables.emplace_back(prefix + "hist_pearson", histogram_table(r.pearson));
  rep.tables.emplace_back(prefix + "hist_entropy", histogram_table(r.entropy));
  Table scatter{{"trajectory", "delta_phi", "entropy"}, {}};
  for (const auto& t : r.trajectories)
    if (!t.error)
      scatter.rows.push_back({static_cast<double>(t.index), t.average.mean_phase, t.average.mean_entropy});
  rep.tables.emplace_back(prefix + "scatter", std::move(scatter));

  json failed = json::array();
  for (auto i : r.failed) failed.push_back({{"trajectory", i}, {"error", *r.trajectories[i].error}});
  summary["params"] = params_json(r.params);
  summary["resolved"] = resolved_json(r.config);
  summary["trajectories"] = r.trajectories.size();
  summary["failed"] = failed;
  summary["statistics"] = {
      {"abs_c", stat_json(r.abs_c_stat)},
      {"phase", stat_json(r.phase_stat)},
      {"pearson", stat_json(r.pearson_stat)},
      {"entropy", stat_json(r.entropy_stat)},
  };
  summary["statistics"]["entropy"]["tail_threshold"] = r.config.entropy_tail;
  summary["statistics"]["entropy"]["tail_mass"] = r.entropy_tail_mass;
  summary["statistics"]["entropy"]["tail_se"] = r.entropy_tail_se;
  summary["mean_c"] = {{"re", r.mean_c.real()},
                       {"im", r.mean_c.imag()},
                       {"se_re", r.mean_c_se.real()},
                       {"se_im", r.mean_c_se.imag()}};
  summary["excluded"] = {{"c", r.excluded_c}, {"pearson", r.excluded_pearson},
                         {"phase_histogram", r.phase.excluded}};
  summary["trajectory_averages"] = {{"phase", trajectory_summary(r.trajectory_phase())},
                                    {"abs_c", trajectory_summary(r.trajectory_abs_c())},
                                    {"entropy", trajectory_summary(r.trajectory_entropy())}};
  if (closed_form(r.params)) {
    const Complex c = correlator_steady(r.params);
    summary["c_pi"] = {{"re", c.real()}, {"im", c.imag()}, {"abs", std::abs(c)}, {"phase", steady_phase(r.params)}};
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (double v : r) row.push_back(num(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

}  // namespace

std::string csv_text(const RunConfig& cfg, const json& meta, const Table& table) {
  std::ostringstream out;
  out << "# config " << to_json(cfg).dump() << '\n';
  out << "# seed " << cfg.ensemble.master_seed << '\n';
  for (const auto& [key, val] : meta.items()) out << "# " << key << ' ' << (val.is_string() ? val.get<std::string>() : val.dump()) << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
    out << '\n';
  }
  return out.str();
}

Report steady_report(const RunConfig& cfg) {
  Report rep;
  const VdpParams p = cfg.params();
  const LindbladModel model = build_vdp_model(p, cfg.space());
  rep.meta["units"] = cfg.units == Units::gamma_up ? "gamma_up" : "absolute";

  Density pi = closed_form(p) ? analytic_steady_state(p) : steady_state_numeric(model);
  Table matrix{{"row", "col", "re", "im"}, {}};
  for (Eigen::Index i = 0; i < pi.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < pi.matrix.cols(); ++j)
      matrix.rows.push_back({static_cast<double>(i), static_cast<double>(j), pi.matrix(i, j).real(),
                             pi.matrix(i, j).imag()});
  rep.tables.emplace_back("steady_matrix", std::move(matrix));

  json& s = rep.summary;
  s["params"] = params_json(p);
  s["source"] = closed_form(p) ? "closed form" : "Liouvillian null space";
  const auto c = correlator(pi);
  if (c) {
    s["c_pi"] = {{"re", c->real()}, {"im", c->imag()}, {"abs", std::abs(*c)}};
    s["phase_pi"] = phase_difference(*c);
  } else {
    s["c_pi"] = nullptr;
    s["phase_pi"] = nullptr;
  }
  if (closed_form(p)) {
    s["phase_pi"] = steady_phase(p);
    s["p"] = marginal_excitation(p);
  } else {
    s["p"] = expectation(number(cfg.space(), 1), pi).real();
  }
  s["tongue_V"] = classical_tongue(p.detuning()) / cfg.rate_scale();
  s["residual"] = apply_lindbladian(model, pi.matrix).norm();

  if (!cfg.sweep.empty()) {
    const SweepResult sw = sweep(p, cfg.space(), cfg.grid(), std::nullopt);
    Table grid{{"detuning", "V", "theta", "abs_c_pi", "phase_pi", "tongue_V"}, {}};
    const double k = cfg.rate_scale();
    for (const auto& e : sw.entries)
      grid.rows.push_back({e.point.detuning / k, e.point.coupling / k, e.point.theta, e.abs_c_pi.value_or(kNaN),
                           e.phase_pi.value_or(kNaN), e.tongue_coupling / k});
    rep.tables.emplace_back("steady_grid", std::move(grid));
  }
  return rep;
}

Report trajectory_report(const RunConfig& cfg, std::span<const TrajectoryRecord> records) {
  Report rep;
  const VdpParams p = cfg.params();
  const LindbladModel model = build_vdp_model(p, cfg.space());
  const EnsembleConfig e = cfg.ensemble.resolved(p, model);
  if (closed_form(p)) {
    rep.meta["abs_c_pi"] = std::abs(correlator_steady(p));
    rep.meta["phase_pi"] = steady_phase(p);
  }
  rep.meta["pearson_width"] = *e.pearson_width;
  rep.summary["params"] = params_json(p);
  rep.summary["resolved"] = resolved_json(e);
  json indices = json::array();
  for (const auto& rec : records) {
    Table t{{"t", "abs_c", "delta_phi", "pearson", "x1", "x2", "entropy"}, {}};
    const auto samples = indicator_samples(rec, *e.pearson_width);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      t.rows.push_back({s.t, s.c ? std::abs(*s.c) : kNaN, s.delta_phi.value_or(kNaN), s.pearson.value_or(kNaN),
                        rec.x1[i], rec.x2[i], s.entropy});
    }
    char name[32];
    std::snprintf(name, sizeof(name), "trajectory_%04llu", static_cast<unsigned long long>(rec.trajectory_index));
    rep.tables.emplace_back(name, std::move(t));
    indices.push_back(rec.trajectory_index);
  }
  rep.summary["trajectories"] = indices;
  return rep;
}

Report ensemble_report(const RunConfig&, const EnsembleResult& result) {
  Report rep;
  rep.meta["phase_variance"] = kPhaseVariance;
  add_ensemble(rep, "", result, rep.summary);
  return rep;
}

Report sweep_report(const RunConfig& cfg, const SweepResult& result) {
  Report rep;
  rep.meta["units"] = cfg.units == Units::gamma_up ? "gamma_up" : "absolute";
  rep.meta["phase_variance"] = kPhaseVariance;
  const double k = cfg.rate_scale();
  Table t{{"detuning", "V", "theta", "abs_c_pi", "phase_pi", "tongue_V", "var_phase", "var_abs_c", "var_entropy",
           "entropy_tail", "mean_c_re", "mean_c_im", "mean_c_se_re", "mean_c_se_im"},
          {}};
  json points = json::array();
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const SweepEntry& e = result.entries[i];
    std::vector<double> row = {e.point.detuning / k, e.point.coupling / k, e.point.theta,
                               e.abs_c_pi.value_or(kNaN), e.phase_pi.value_or(kNaN), e.tongue_coupling / k};
    json pj = {{"detuning", e.point.detuning / k}, {"V", e.point.coupling / k}, {"theta", e.point.theta}};
    if (e.error) pj["error"] = *e.error;
    if (e.ensemble) {
      const EnsembleResult& r = *e.ensemble;
      row.insert(row.end(), {r.phase_stat.variance, r.abs_c_stat.variance, r.entropy_stat.variance,
                             r.entropy_tail_mass, r.mean_c.real(), r.mean_c.imag(), r.mean_c_se.real(),
                             r.mean_c_se.imag()});
      char prefix[32];
      std::snprintf(prefix, sizeof(prefix), "point_%03zu/", i);
      json ps;
      add_ensemble(rep, prefix, r, ps);
      pj["ensemble"] = std::move(ps);
    } else {
      row.resize(t.columns.size(), kNaN);
    }
    t.rows.push_back(std::move(row));
    points.push_back(std::move(pj));
  }
  rep.tables.insert(rep.tables.begin(), {"sweep", std::move(t)});
  rep.summary["points"] = std::move(points);
  return rep;
}

std::vector<std::filesystem::path> write_report(const RunConfig& cfg, const Report& report,
                                                const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  json doc = {{"config", to_json(cfg)}, {"seed", cfg.ensemble.master_seed}, {"meta", report.meta}};
  if (cfg.format == Format::csv) {
    for (const auto& [name, table] : report.tables) {
      const auto path = dir / (name + ".csv");
      write_file(path, csv_text(cfg, report.meta, table));
      written.push_back(path);
    }
    doc["summary"] = report.summary;
    const auto path = dir / "summary.json";
    write_file(path, doc.dump(2) + "\n");
    written.push_back(path);
  } else {
    doc["summary"] = report.summary;
    json tables = json::object();
    for (const auto& [name, table] : report.tables) tables[name] = table_json(table);
    doc["tables"] = std::move(tables);
    const auto path = dir / "results.json";
    write_file(path, doc.dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace qvdp
