#include "qvdp/ensemble.hpp"

#include "qvdp/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace qvdp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Dynamic scheduling over [0, n); each index is handled exactly once and
// results go to caller-owned slots, so the merge order never depends on timing.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  if (workers <= 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
}

double entropy_ceiling(const FockSpace& space) {
  return std::log(static_cast<double>(std::min(space.dim(1), space.dim(2))));
}

// Phase re-wrapped into (theta - pi, theta + pi].
double around(double phi, double theta) { return theta + wrap_phase(phi - theta); }

TrajectoryResult run_one(const LindbladModel& model, const EnsembleConfig& cfg, const Density& pi, double theta,
                         std::uint64_t index) {
  TrajectoryResult tr;
  tr.index = index;
  const double phase_lo = cfg.theta_centered ? theta - std::numbers::pi : -std::numbers::pi;
  tr.h_abs_c = make_histogram(cfg.bins, 0.0, 1.0);
  tr.h_phase = make_histogram(cfg.bins, phase_lo, phase_lo + kTwoPi);
  tr.h_pearson = make_histogram(cfg.bins, -1.0, 1.0);
  tr.h_entropy = make_histogram(cfg.bins, 0.0, entropy_ceiling(model.space));
  try {
    const NoiseStream noise(cfg.master_seed, index);
    const State psi0 = sample_initial(pi, noise);
    const TrajectoryRecord rec =
        run_trajectory(model, psi0, *cfg.total_time, *cfg.sample_interval, cfg.integrator, noise);
    const std::vector<IndicatorSample> samples = indicator_samples(rec, *cfg.pearson_width);
    tr.average = time_average(samples, *cfg.burn_in);
    for (const auto& s : samples) {
      if (!(s.t > *cfg.burn_in)) continue;
      tr.entropy.add(s.entropy);
      tr.h_entropy.add(s.entropy);
      if (s.entropy > cfg.entropy_tail) ++tr.entropy_tail;
      if (s.c) {
        const double mag = std::abs(*s.c);
        tr.abs_c.add(mag);
        tr.h_abs_c.add(mag);
        tr.c_sum += *s.c;
      }
      if (s.delta_phi) {
        const double centered = around(*s.delta_phi, theta);
        tr.phase.add(centered);
        tr.h_phase.add(cfg.theta_centered ? centered : *s.delta_phi);
      }
      if (s.pearson) {
        tr.pearson.add(*s.pearson);
        tr.h_pearson.add(*s.pearson);
      }
    }
  } catch (const std::exception& e) {
    tr.error = e.what();
  }
  return tr;
}

// Cluster-robust standard error of a ratio estimator sum(y) / sum(n).
double cluster_se(std::span<const double> y, std::span<const double> n) {
  const std::size_t g = y.size();
  if (g < 2) return 0.0;
  double sy = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    sy += y[i];
    sn += n[i];
  }
  if (!(sn > 0.0)) return 0.0;
  const double ratio = sy / sn;
  double acc = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double r = y[i] - ratio * n[i];
    acc += r * r;
  }
  const double gd = static_cast<double>(g);
  return std::sqrt(gd / (gd - 1.0) * acc) / sn;
}

std::vector<std::size_t> succeeded(std::span<const TrajectoryResult> trajectories) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    if (!trajectories[i].error) ok.push_back(i);
  return ok;
}

}  // namespace

// ---- config ----

EnsembleConfig EnsembleConfig::resolved(const VdpParams& params, const LindbladModel& model) const {
  EnsembleConfig out = *this;
  const double g = params.gamma_up_1;
  if (!out.burn_in) {
    const double rate = 3.0 * g + params.coupling;
    if (!(rate > 0.0)) throw ConfigError("burn_in", "no default when 3 gamma_up + V = 0");
    out.burn_in = 10.0 / rate;
  }
  if (!out.total_time) {
    if (!(g > 0.0)) throw ConfigError("total_time", "no default when gamma_up = 0");
    out.total_time = *out.burn_in + 1.0 / g;
  }
  const double w = std::max(std::abs(params.omega1), std::abs(params.omega2));
  if (!out.sample_interval) {
    if (!(w > 0.0)) throw ConfigError("sample_interval", "no default without an oscillation frequency");
    out.sample_interval = kTwoPi / w / 20.0;
  }
  if (!out.pearson_width) {
    if (!(std::abs(params.omega1) > 0.0)) throw ConfigError("pearson_width", "no default when omega1 = 0");
    out.pearson_width = 4.0 * kTwoPi / std::abs(params.omega1);
  }
  if (!out.dt) out.dt = default_time_step(params, model);
  out.integrator.dt = *out.dt;
  return out;
}

void EnsembleConfig::validate() const {
  if (!total_time || !burn_in || !sample_interval || !pearson_width || !dt)
    throw std::logic_error("EnsembleConfig::validate: config not resolved");
  if (n_trajectories < 1) throw ConfigError("trajectories", "must be >= 1");
  if (!(*burn_in >= 0.0)) throw ConfigError("burn_in", "must be >= 0");
  if (!(*burn_in < *total_time)) throw ConfigError("burn_in", "must be < total_time");
  if (!(*dt > 0.0) || !std::isfinite(*dt)) throw ConfigError("dt", "must be > 0");
  if (!(*sample_interval >= *dt * (1.0 - 1e-9))) throw ConfigError("sample_interval", "must be >= dt");
  if (!(*pearson_width > 0.0)) throw ConfigError("pearson_width", "must be > 0");
  if (bins < 1) throw ConfigError("bins", "must be >= 1");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
  if (!(entropy_tail >= 0.0)) throw ConfigError("entropy_tail", "must be >= 0");
  integrator.validate();
}

// ---- histograms and summaries ----

Histogram make_histogram(int bins, double lo, double hi) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("histogram: empty range");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  return h;
}

int Histogram::locate(double x) const {
  // Values a rounding error outside the range (|C| = 1 + 1e-16, say) land in the edge bins.
  const double slack = 1e-12 * (hi - lo);
  if (!(x >= lo - slack && x <= hi + slack)) return -1;
  const auto bin = static_cast<int>(std::floor((x - lo) / width()));
  return std::clamp(bin, 0, bins() - 1);
}

void Histogram::add(double x) {
  const int bin = locate(x);
  if (bin < 0) {
    ++excluded;
    return;
  }
  ++counts[static_cast<std::size_t>(bin)];
  ++total;
}

void Histogram::merge(const Histogram& other) {
  if (other.counts.size() != counts.size() || other.lo != lo || other.hi != hi)
    throw std::invalid_argument("Histogram::merge: binning differs");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  total += other.total;
  excluded += other.excluded;
}

std::vector<double> Histogram::density() const {
  std::vector<double> d(counts.size(), 0.0);
  if (total == 0) return d;
  const double scale = 1.0 / (static_cast<double>(total) * width());
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = static_cast<double>(counts[i]) * scale;
  return d;
}

int Histogram::mode() const {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram histogram(std::span<const double> samples, int bins, double lo, double hi) {
  if (samples.empty()) throw std::invalid_argument("histogram: no samples");
  Histogram h = make_histogram(bins, lo, hi);
  for (double x : samples) h.add(x);
  return h;
}

Summary summarize(std::span<const double> samples, double tail_threshold) {
  if (samples.size() < 2) throw std::invalid_argument("summarize: need at least two samples");
  Summary s;
  s.n = samples.size();
  const double n = static_cast<double>(s.n);
  for (double x : samples) s.mean += x;
  s.mean /= n;
  double ss = 0.0;
  std::size_t above = 0;
  for (double x : samples) {
    ss += (x - s.mean) * (x - s.mean);
    if (x > tail_threshold) ++above;
  }
  s.variance = ss / (n - 1.0);
  s.std_error = std::sqrt(s.variance / n);
  s.tail_mass = static_cast<double>(above) / n;
  return s;
}

// ---- pooled statistics ----

PooledStat pooled(std::span<const TrajectoryResult> trajectories, Moments TrajectoryResult::*field,
                  std::span<const std::size_t> which) {
  std::vector<std::size_t> all;
  if (which.empty()) {
    all = succeeded(trajectories);
    which = all;
  }
  PooledStat st;
  double sum = 0.0, sum_sq = 0.0;
  std::vector<double> y, n;
  y.reserve(which.size());
  n.reserve(which.size());
  for (std::size_t i : which) {
    const Moments& m = trajectories[i].*field;
    st.samples += m.count;
    sum += m.sum;
    sum_sq += m.sum_sq;
    y.push_back(m.sum);
    n.push_back(static_cast<double>(m.count));
  }
  if (st.samples == 0) return st;
  const double total = static_cast<double>(st.samples);
  st.mean = sum / total;
  st.variance = st.samples > 1 ? std::max(0.0, (sum_sq - sum * st.mean) / (total - 1.0)) : 0.0;
  st.mean_se = cluster_se(y, n);
  return st;
}

std::vector<double> EnsembleResult::trajectory_phase() const {
  std::vector<double> out;
  for (const auto& t : trajectories)
    if (!t.error) out.push_back(t.average.mean_phase);
  return out;
}

std::vector<double> EnsembleResult::trajectory_entropy() const {
  std::vector<double> out;
  for (const auto& t : trajectories)
    if (!t.error) out.push_back(t.average.mean_entropy);
  return out;
}

std::vector<double> EnsembleResult::trajectory_abs_c() const {
  std::vector<double> out;
  for (const auto& t : trajectories)
    if (!t.error) out.push_back(t.average.mean_abs_c);
  return out;
}

Density steady_state(const VdpParams& params, const LindbladModel& model) {
  if (model.quantum_limit && params.symmetric_rates()) return analytic_steady_state(params);
  return steady_state_numeric(model);
}

EnsembleResult run_ensemble(const LindbladModel& model, const VdpParams& params, const EnsembleConfig& cfg_in) {
  const EnsembleConfig cfg = cfg_in.resolved(params, model);
  cfg.validate();
  const Density pi = steady_state(params, model);

  EnsembleResult res;
  res.params = params;
  res.config = cfg;
  res.trajectories.resize(cfg.n_trajectories);
  parallel_for(cfg.n_trajectories, cfg.threads, [&](std::size_t i) {
    res.trajectories[i] = run_one(model, cfg, pi, params.theta, i);
  });

  for (const auto& t : res.trajectories)
    if (t.error) res.failed.push_back(t.index);
  if (static_cast<double>(res.failed.size()) > 0.01 * static_cast<double>(cfg.n_trajectories))
    throw NumericalError("run_ensemble: " + std::to_string(res.failed.size()) + " of " +
                         std::to_string(cfg.n_trajectories) + " trajectories aborted (first: index " +
                         std::to_string(res.failed.front()) + ": " +
                         *res.trajectories[res.failed.front()].error + ")");

  const double phase_lo = cfg.theta_centered ? params.theta - std::numbers::pi : -std::numbers::pi;
  res.abs_c = make_histogram(cfg.bins, 0.0, 1.0);
  res.phase = make_histogram(cfg.bins, phase_lo, phase_lo + kTwoPi);
  res.pearson = make_histogram(cfg.bins, -1.0, 1.0);
  res.entropy = make_histogram(cfg.bins, 0.0, entropy_ceiling(model.space));

  std::vector<double> tail, re, im, cn, sn;
  std::size_t c_count = 0;
  for (const auto& t : res.trajectories) {
    if (t.error) continue;
    res.abs_c.merge(t.h_abs_c);
    res.phase.merge(t.h_phase);
    res.pearson.merge(t.h_pearson);
    res.entropy.merge(t.h_entropy);
    res.mean_c += t.c_sum;
    c_count += t.abs_c.count;
    res.excluded_c += t.average.excluded_c;
    res.excluded_pearson += t.average.excluded_pearson;
    tail.push_back(static_cast<double>(t.entropy_tail));
    sn.push_back(static_cast<double>(t.entropy.count));
    re.push_back(t.c_sum.real());
    im.push_back(t.c_sum.imag());
    cn.push_back(static_cast<double>(t.abs_c.count));
  }
  res.abs_c_stat = pooled(res.trajectories, &TrajectoryResult::abs_c);
  res.phase_stat = pooled(res.trajectories, &TrajectoryResult::phase);
  res.pearson_stat = pooled(res.trajectories, &TrajectoryResult::pearson);
  res.entropy_stat = pooled(res.trajectories, &TrajectoryResult::entropy);
  double tail_sum = 0.0, s_total = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    tail_sum += tail[i];
    s_total += sn[i];
  }
  if (s_total > 0.0) res.entropy_tail_mass = tail_sum / s_total;
  res.entropy_tail_se = cluster_se(tail, sn);
  if (c_count > 0) res.mean_c /= static_cast<double>(c_count);
  res.mean_c_se = Complex(cluster_se(re, cn), cluster_se(im, cn));
  return res;
}

// ---- tests on ensembles ----

Interval bootstrap_variance(const EnsembleResult& result, Moments TrajectoryResult::*field, int resamples,
                            double level, std::uint64_t seed) {
  if (resamples < 2) throw std::invalid_argument("bootstrap_variance: need at least two resamples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_variance: level must be in (0, 1)");
  const std::vector<std::size_t> ok = succeeded(result.trajectories);
  if (ok.empty()) throw std::invalid_argument("bootstrap_variance: no trajectories");
  std::mt19937_64 gen(seed);
  std::vector<std::size_t> pick(ok.size());
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& p : pick) {
      // Multiply-shift keeps the draw independent of the standard library's distributions.
      const auto u = static_cast<unsigned __int128>(gen()) * ok.size();
      p = ok[static_cast<std::size_t>(u >> 64)];
    }
    stats.push_back(pooled(result.trajectories, field, pick).variance);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 0.5 * (1.0 - level);
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < stats.size() ? stats[i] * (1.0 - frac) + stats[i + 1] * frac : stats[i];
  };
  return {at(alpha), at(1.0 - alpha)};
}

double tail_difference_z(const EnsembleResult& a, const EnsembleResult& b) {
  const double diff = b.entropy_tail_mass - a.entropy_tail_mass;
  const double se = std::hypot(a.entropy_tail_se, b.entropy_tail_se);
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::copysign(kInfinity, diff);
  return diff / se;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_threshold_95(std::size_t n, std::size_t m) {
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return 1.358 * std::sqrt((dn + dm) / (dn * dm));
}

// ---- ensemble-mean state ----

std::vector<Density> ensemble_mean_state(const LindbladModel& model, const Density& initial,
                                         const MeanStateConfig& cfg, std::span<const double> times) {
  if (cfg.n_trajectories < 1) throw ConfigError("trajectories", "must be >= 1");
  if (cfg.start && !(cfg.start->space() == model.space))
    throw std::invalid_argument("ensemble_mean_state: start state space mismatch");
  const int d = model.space.total_dim();
  std::vector<std::vector<State>> states(cfg.n_trajectories);
  std::vector<std::exception_ptr> errors(cfg.n_trajectories);
  parallel_for(cfg.n_trajectories, cfg.threads, [&](std::size_t i) {
    try {
      const NoiseStream noise(cfg.master_seed, i);
      const State psi0 = cfg.start ? *cfg.start : sample_initial(initial, noise);
      states[i] = evolve_to(model, psi0, times, cfg.integrator, noise, cfg.unraveling);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Density> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& traj : states) {
      const Vector& v = traj[k].amplitudes();
      acc.noalias() += v * v.adjoint();
    }
    acc /= static_cast<double>(cfg.n_trajectories);
    out.push_back({std::move(acc), model.space});
  }
  return out;
}

Density ensemble_mean_state(const LindbladModel& model, const Density& initial, const MeanStateConfig& cfg,
                            double t) {
  const double times[] = {t};
  return ensemble_mean_state(model, initial, cfg, times).front();
}

// ---- sweeps ----

std::vector<SweepPoint> rectangular_grid(std::span<const double> detunings, std::span<const double> couplings,
                                         double theta) {
  std::vector<SweepPoint> grid;
  for (double v : couplings)
    for (double dw : detunings) grid.push_back({dw, v, theta});
  return grid;
}

SweepResult sweep(const VdpParams& base, const FockSpace& space, std::span<const SweepPoint> grid,
                  const std::optional<EnsembleConfig>& cfg) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  SweepResult out;
  for (const auto& pt : grid) {
    SweepEntry e;
    e.point = pt;
    e.tongue_coupling = classical_tongue(pt.detuning);
    VdpParams p = base;
    p.omega2 = p.omega1 + pt.detuning;
    p.coupling = pt.coupling;
    p.theta = pt.theta;
    try {
      p.validate();
      if (p.quantum_limit() && p.symmetric_rates()) {
        e.abs_c_pi = std::abs(correlator_steady(p));
        e.phase_pi = steady_phase(p);
      }
      if (cfg) {
        const LindbladModel model = build_vdp_model(p, space);
        e.ensemble = run_ensemble(model, p, *cfg);
      }
    } catch (const ConfigError& err) {
      e.error = err.what();
    } catch (const NumericalError& err) {
      e.error = err.what();
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace qvdp
