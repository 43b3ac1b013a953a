#pragma once

// Monte Carlo over steady-state trajectories: time-averaged distributions of
// the indicators, summary statistics, ensemble-mean states and parameter
// sweeps.

#include "qvdp/lindblad.hpp"
#include "qvdp/metrics.hpp"
#include "qvdp/sse.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qvdp {

struct EnsembleConfig {
  std::size_t n_trajectories = 1000;
  std::uint64_t master_seed = 0;
  // Unset fields are filled by resolved():
  //   burn_in         10 / (3 gamma_up + V)
  //   total_time      burn_in + 1 / gamma_up
  //   sample_interval (2 pi / max omega) / 20
  //   pearson_width   8 pi / omega1
  //   dt              default_time_step()
  std::optional<double> total_time;
  std::optional<double> burn_in;
  std::optional<double> sample_interval;
  std::optional<double> pearson_width;
  std::optional<double> dt;
  IntegratorConfig integrator;
  int threads = 1;
  int bins = 40;
  bool theta_centered = false;  // phase histogram over (theta - pi, theta + pi]
  double entropy_tail = 0.5;

  /// Copy with every optional field set; integrator.dt takes the resolved dt.
  EnsembleConfig resolved(const VdpParams& params, const LindbladModel& model) const;
  /// Requires a resolved config.
  void validate() const;
};

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;     // samples inside [lo, hi]
  std::size_t excluded = 0;  // samples outside

  int bins() const { return static_cast<int>(counts.size()); }
  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(int bin) const { return lo + (bin + 0.5) * width(); }
  /// Probability density per bin (all zero when total == 0).
  std::vector<double> density() const;
  /// Index of the most populated bin (lowest index on ties).
  int mode() const;
  /// Bin of x; -1 outside [lo, hi]. Both ends are inclusive.
  int locate(double x) const;
  void add(double x);
  void merge(const Histogram& other);
};

Histogram make_histogram(int bins, double lo, double hi);

/// Uniform histogram; throws std::invalid_argument for empty input, bins < 1
/// or an empty range.
Histogram histogram(std::span<const double> samples, int bins, double lo, double hi);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
  double tail_mass = 0.0;  // fraction strictly above the threshold
};

/// Throws std::invalid_argument with fewer than two samples.
Summary summarize(std::span<const double> samples, double tail_threshold = 0.5);

/// Running sums of one indicator along one trajectory.
struct Moments {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
};

struct TrajectoryResult {
  std::uint64_t index = 0;
  std::optional<std::string> error;  // set when the trajectory aborted
  TimeAverage average;
  Moments abs_c, phase, pearson, entropy;  // phase wrapped around theta
  std::size_t entropy_tail = 0;
  Complex c_sum{};
  Histogram h_abs_c, h_phase, h_pearson, h_entropy;
};

/// Statistics of samples pooled over all trajectories. Standard errors treat
/// each trajectory as one cluster, since samples along a trajectory are
/// strongly correlated in time.
struct PooledStat {
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
};

struct EnsembleResult {
  VdpParams params;
  EnsembleConfig config;  // resolved
  std::vector<TrajectoryResult> trajectories;  // ordered by index, failed ones included
  std::vector<std::uint64_t> failed;

  Histogram abs_c, phase, pearson, entropy;
  PooledStat abs_c_stat, phase_stat, pearson_stat, entropy_stat;
  double entropy_tail_mass = 0.0;
  double entropy_tail_se = 0.0;
  Complex mean_c{};
  Complex mean_c_se{};  // componentwise cluster standard errors
  std::size_t excluded_c = 0, excluded_pearson = 0;

  /// Per-trajectory time averages of the successful trajectories.
  std::vector<double> trajectory_phase() const;
  std::vector<double> trajectory_entropy() const;
  std::vector<double> trajectory_abs_c() const;
};

/// Runs cfg.n_trajectories trajectories started from states sampled from the
/// steady state. Fails with NumericalError when more than 1% abort.
/// Results are independent of cfg.threads.
EnsembleResult run_ensemble(const LindbladModel& model, const VdpParams& params, const EnsembleConfig& cfg);

/// Steady state used for initial conditions: the closed form when available,
/// otherwise the Liouvillian null space.
Density steady_state(const VdpParams& params, const LindbladModel& model);

/// Pooled statistics of the trajectory subset `which` (indices may repeat).
PooledStat pooled(std::span<const TrajectoryResult> trajectories, Moments TrajectoryResult::*field,
                  std::span<const std::size_t> which = {});

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool overlaps(const Interval& other) const { return lo <= other.hi && other.lo <= hi; }
};

/// Percentile bootstrap over trajectories for the pooled variance of `field`.
Interval bootstrap_variance(const EnsembleResult& result, Moments TrajectoryResult::*field, int resamples = 2000,
                            double level = 0.95, std::uint64_t seed = 1);

/// z statistic of (tail mass of b) - (tail mass of a) with cluster standard errors.
double tail_difference_z(const EnsembleResult& a, const EnsembleResult& b);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample critical value at 95% confidence.
double ks_threshold_95(std::size_t n, std::size_t m);

// ---- ensemble-mean state ----

struct MeanStateConfig {
  std::size_t n_trajectories = 1000;
  std::uint64_t master_seed = 0;
  IntegratorConfig integrator;
  Unraveling unraveling = Unraveling::diffusive;
  int threads = 1;
  std::optional<State> start;  // fixed pure start; otherwise sampled from `initial`
};

/// Average of |psi(t)><psi(t)| over trajectories at each requested time.
std::vector<Density> ensemble_mean_state(const LindbladModel& model, const Density& initial,
                                         const MeanStateConfig& cfg, std::span<const double> times);
Density ensemble_mean_state(const LindbladModel& model, const Density& initial, const MeanStateConfig& cfg,
                            double t);

// ---- sweeps ----

struct SweepPoint {
  double detuning = 0.0;  // absolute units
  double coupling = 0.0;
  double theta = 0.0;
};

std::vector<SweepPoint> rectangular_grid(std::span<const double> detunings, std::span<const double> couplings,
                                         double theta = 0.0);

struct SweepEntry {
  SweepPoint point;
  std::optional<double> abs_c_pi, phase_pi;  // closed forms (quantum limit only)
  double tongue_coupling = 0.0;              // classical boundary V = 2|dw|
  std::optional<EnsembleResult> ensemble;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
};

/// Evaluates every point of `grid` on top of `base` (omega2 = omega1 + detuning).
/// Without an ensemble config only the closed forms are computed. Failures are
/// recorded per point. Throws std::invalid_argument for an empty grid.
SweepResult sweep(const VdpParams& base, const FockSpace& space, std::span<const SweepPoint> grid,
                  const std::optional<EnsembleConfig>& cfg);

}  // namespace qvdp
