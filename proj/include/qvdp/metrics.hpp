#pragma once

// Per-trajectory synchronization and entanglement indicators.

#include "qvdp/lindblad.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qvdp {

inline constexpr double kVacuumEpsilon = 1e-12;

/// Centered averaging window for the Pearson indicator.
struct WindowSpec {
  double width = 0.0;   // full window length
  double stride = 0.0;  // spacing of the sampled series

  void validate() const;
  /// Number of samples on either side of the center.
  std::ptrdiff_t half_span() const;
};

struct IndicatorSample {
  double t = 0.0;
  std::optional<Complex> c;
  std::optional<double> delta_phi;
  std::optional<double> pearson;
  double entropy = 0.0;
};

/// Precomputed observables of a two-oscillator space, evaluated on raw
/// amplitude vectors.
class Observables {
 public:
  explicit Observables(const FockSpace& space);

  std::optional<Complex> correlator(const Vector& psi, double eps = kVacuumEpsilon) const;
  double position(int which, const Vector& psi) const;
  double entropy(const Vector& psi) const;
  /// Population of the top Fock level of oscillator `which`.
  double top_level_population(int which, const Vector& psi) const;

 private:
  FockSpace space_;
  Matrix hop_;  // a1^dag a2
  Matrix n1_, n2_, x1_, x2_;
};

/// C = <a1^dag a2> / sqrt(<n1><n2>); empty when <n1><n2> <= eps.
std::optional<Complex> correlator(const State& psi, double eps = kVacuumEpsilon);
std::optional<Complex> correlator(const Density& rho, double eps = kVacuumEpsilon);

/// Principal argument in (-pi, pi].
double phase_difference(Complex c);
std::optional<double> phase_difference(const std::optional<Complex>& c);

/// Windowed Pearson coefficient of two series sampled at t0 + i * window.stride,
/// evaluated at time t. Window sums use trapezoidal weights. Empty when the
/// window leaves the series or either windowed variance is <= 1e-15.
std::optional<double> pearson(std::span<const double> x1, std::span<const double> x2, const WindowSpec& window,
                              double t, double t0 = 0.0);

/// pearson() at every sample of the series.
std::vector<std::optional<double>> pearson_series(std::span<const double> x1, std::span<const double> x2,
                                                  const WindowSpec& window);

/// -sum l ln l over the spectrum of a Hermitian matrix; l < 1e-14 contributes 0.
double von_neumann_entropy(const Matrix& rho);

/// Entropy (nats) of the reduced state of oscillator `keep`.
double entanglement_entropy(const State& psi, int keep = 1);

struct TimeAverage {
  Complex mean_c{};
  double mean_abs_c = 0.0;
  double mean_phase = 0.0;  // argument of the mean unit phasor
  std::optional<double> mean_pearson;
  double mean_entropy = 0.0;
  std::size_t samples = 0;
  std::size_t excluded_c = 0;
  std::size_t excluded_pearson = 0;
};

/// Averages of every defined indicator over samples with t > burn_in.
/// Throws std::invalid_argument if nothing remains or every correlator is undefined.
TimeAverage time_average(std::span<const IndicatorSample> samples, double burn_in);

}  // namespace qvdp
