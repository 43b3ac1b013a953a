#pragma once

// Quantum trajectories: diffusive (homodyne-type) unraveling with measurement
// currents, a quantum-jump unraveling for cross-checks, and steady-state
// initial-condition sampling.

#include "qvdp/lindblad.hpp"
#include "qvdp/metrics.hpp"
#include "qvdp/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qvdp {

struct IntegratorConfig {
  double dt = 1e-3;
  bool renormalize_every_step = true;
  double truncation_leak_tol = 1e-3;
  double norm_collapse_tol = 1e-6;

  void validate() const;
};

/// Largest step with dt * max(w1, w2, sum_k ||L_k^dag L_k||) <= 1e-2.
double default_time_step(const VdpParams& params, const LindbladModel& model);

struct DiffusiveStep {
  State state;
  std::vector<double> currents;  // J_k = <X_k> + dW_k / dt
  double raw_norm_squared = 1.0;  // before renormalization
};

/// Draws |pi_n> with probability pi_n from the spectral decomposition of rho.
State sample_initial(const Density& rho, const NoiseStream& noise);

/// One Euler-Maruyama step of the diffusive stochastic Schroedinger equation
/// at step index `step` of the noise stream.
DiffusiveStep step_diffusive(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                             const NoiseStream& noise, std::uint64_t step);

/// Same step with caller-supplied Wiener increments dW_k (one per channel).
DiffusiveStep step_diffusive(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                             std::span<const double> increments);

struct JumpStep {
  State state;
  int channel = -1;  // index of the channel that fired, -1 for no jump
};

/// One first-order step of the jump unraveling. Throws std::invalid_argument
/// when the total jump probability in the step exceeds 0.1.
JumpStep step_jump(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                   const NoiseStream& noise, std::uint64_t step);

enum class Unraveling { diffusive, jump };

struct RecordOptions {
  bool currents = false;
  Unraveling unraveling = Unraveling::diffusive;
};

/// Sampled observables along one trajectory.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> x1, x2;
  std::vector<std::optional<Complex>> c;
  std::vector<double> entropy;
  std::vector<std::vector<double>> currents;  // per sample, one entry per channel; empty if not recorded
  std::uint64_t seed = 0;
  std::uint64_t trajectory_index = 0;
  double sample_interval = 0.0;
  State final_state;

  std::size_t size() const { return times.size(); }
};

/// Integrates from psi0 for total_time, sampling every sample_interval
/// (rounded to a whole number of steps). Throws NumericalError on norm
/// collapse or when the top Fock level population exceeds the leak tolerance
/// outside the quantum limit.
TrajectoryRecord run_trajectory(const LindbladModel& model, const State& psi0, double total_time,
                                double sample_interval, const IntegratorConfig& cfg, const NoiseStream& noise,
                                const RecordOptions& options = {});

/// Evolves psi0 and returns the states at each requested time (sorted,
/// each rounded to a whole number of steps).
std::vector<State> evolve_to(const LindbladModel& model, const State& psi0, std::span<const double> times,
                             const IntegratorConfig& cfg, const NoiseStream& noise, Unraveling unraveling);

/// Indicator samples (with Pearson values over `window`) for a record.
std::vector<IndicatorSample> indicator_samples(const TrajectoryRecord& record, double pearson_width);

// ---- raw binary dump ----
//
// Layout (all little-endian):
//   char[8]  magic "QVDPTRJ1"
//   u32      version (1)
//   u32      column count C
//   u64      row count R
//   u64      master seed
//   u64      trajectory index
//   f64      sample interval
//   R rows of C f64: t, x1, x2, re C, im C, S, J_1..J_k
// Undefined correlators and unrecorded currents are stored as NaN.

void write_record_binary(std::ostream& out, const TrajectoryRecord& record, int channels);
TrajectoryRecord read_record_binary(std::istream& in);

}  // namespace qvdp
