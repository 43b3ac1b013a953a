#include "qvdp/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qvdp {

namespace {

void require_pair(const FockSpace& space) {
  if (space.factors() != 2) throw std::invalid_argument("indicator needs a two-oscillator space");
}

double real_expectation(const Matrix& op, const Vector& psi) { return psi.dot(op * psi).real(); }

std::optional<Complex> normalized(Complex hop, double n1, double n2, double eps) {
  const double denom = n1 * n2;
  if (!(denom > eps)) return std::nullopt;
  return hop / std::sqrt(denom);
}

}  // namespace

void WindowSpec::validate() const {
  if (!(width > 0.0)) throw std::invalid_argument("WindowSpec: width must be > 0");
  if (!(stride > 0.0) || stride > width) throw std::invalid_argument("WindowSpec: need 0 < stride <= width");
}

std::ptrdiff_t WindowSpec::half_span() const {
  return static_cast<std::ptrdiff_t>(std::llround(width / (2.0 * stride)));
}

Observables::Observables(const FockSpace& space) : space_(space) {
  require_pair(space);
  const Op a1 = annihilation(space, 1);
  const Op a2 = annihilation(space, 2);
  hop_ = a1.matrix.adjoint() * a2.matrix;
  n1_ = a1.matrix.adjoint() * a1.matrix;
  n2_ = a2.matrix.adjoint() * a2.matrix;
  x1_ = qvdp::position(space, 1).matrix;
  x2_ = qvdp::position(space, 2).matrix;
}

std::optional<Complex> Observables::correlator(const Vector& psi, double eps) const {
  return normalized(psi.dot(hop_ * psi), real_expectation(n1_, psi), real_expectation(n2_, psi), eps);
}

double Observables::position(int which, const Vector& psi) const {
  space_.check_factor(which);
  return real_expectation(which == 1 ? x1_ : x2_, psi);
}

double Observables::entropy(const Vector& psi) const {
  const int d1 = space_.dim(1);
  const int d2 = space_.dim(2);
  // Psi(i, k) = psi[i * d2 + k]; reduced state of oscillator 1 is Psi Psi^dag.
  const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
      psi.data(), d1, d2);
  if (d1 == 2) {
    const double a = block.row(0).squaredNorm();
    const double d = block.row(1).squaredNorm();
    const Complex b = block.row(0).dot(block.row(1));
    const double tr = a + d;
    const double gap = std::sqrt((a - d) * (a - d) + 4.0 * std::norm(b));
    double s = 0.0;
    for (double l : {0.5 * (tr + gap), 0.5 * (tr - gap)})
      if (l > 1e-14) s -= l * std::log(l);
    return s;
  }
  const Matrix rho = block * block.adjoint();
  return von_neumann_entropy(rho);
}

double Observables::top_level_population(int which, const Vector& psi) const {
  const int d = space_.dim(which);
  const int stride = space_.stride(which);
  double pop = 0.0;
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx)
    if ((idx / stride) % d == d - 1) pop += std::norm(psi(idx));
  return pop;
}

std::optional<Complex> correlator(const State& psi, double eps) {
  return Observables(psi.space()).correlator(psi.amplitudes(), eps);
}

std::optional<Complex> correlator(const Density& rho, double eps) {
  require_pair(rho.space);
  const Op a1 = annihilation(rho.space, 1);
  const Op a2 = annihilation(rho.space, 2);
  const Complex hop = expectation(a1.adjoint() * a2, rho);
  return normalized(hop, expectation(a1.adjoint() * a1, rho).real(), expectation(a2.adjoint() * a2, rho).real(),
                    eps);
}

double phase_difference(Complex c) {
  const double phi = std::arg(c);
  return phi == -std::numbers::pi ? std::numbers::pi : phi;
}

std::optional<double> phase_difference(const std::optional<Complex>& c) {
  if (!c || *c == Complex(0.0)) return std::nullopt;
  return phase_difference(*c);
}

std::optional<double> pearson(std::span<const double> x1, std::span<const double> x2, const WindowSpec& window,
                              double t, double t0) {
  window.validate();
  if (x1.size() != x2.size()) throw std::invalid_argument("pearson: series lengths differ");
  const auto n = static_cast<std::ptrdiff_t>(x1.size());
  const auto center = static_cast<std::ptrdiff_t>(std::llround((t - t0) / window.stride));
  const std::ptrdiff_t half = window.half_span();
  if (half < 1 || center - half < 0 || center + half >= n) return std::nullopt;

  const auto weight = [&](std::ptrdiff_t i) { return (i == center - half || i == center + half) ? 0.5 : 1.0; };
  double wsum = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::ptrdiff_t i = center - half; i <= center + half; ++i) {
    const double w = weight(i);
    wsum += w;
    m1 += w * x1[static_cast<std::size_t>(i)];
    m2 += w * x2[static_cast<std::size_t>(i)];
  }
  m1 /= wsum;
  m2 /= wsum;
  double s12 = 0.0, s11 = 0.0, s22 = 0.0;
  for (std::ptrdiff_t i = center - half; i <= center + half; ++i) {
    const double w = weight(i);
    const double d1 = x1[static_cast<std::size_t>(i)] - m1;
    const double d2 = x2[static_cast<std::size_t>(i)] - m2;
    s12 += w * d1 * d2;
    s11 += w * d1 * d1;
    s22 += w * d2 * d2;
  }
  if (!(s11 / wsum > 1e-15) || !(s22 / wsum > 1e-15)) return std::nullopt;
  return s12 / std::sqrt(s11 * s22);
}

std::vector<std::optional<double>> pearson_series(std::span<const double> x1, std::span<const double> x2,
                                                  const WindowSpec& window) {
  std::vector<std::optional<double>> out(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    out[i] = pearson(x1, x2, window, static_cast<double>(i) * window.stride, 0.0);
  return out;
}

double von_neumann_entropy(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double l : es.eigenvalues())
    if (l > 1e-14) s -= l * std::log(l);
  return s;
}

double entanglement_entropy(const State& psi, int keep) {
  return von_neumann_entropy(reduced_density(psi, keep).matrix);
}

TimeAverage time_average(std::span<const IndicatorSample> samples, double burn_in) {
  TimeAverage avg;
  Complex phasor{};
  double pearson_sum = 0.0;
  std::size_t pearson_count = 0;
  std::size_t c_count = 0;
  for (const auto& s : samples) {
    if (!(s.t > burn_in)) continue;
    ++avg.samples;
    avg.mean_entropy += s.entropy;
    if (s.c) {
      ++c_count;
      avg.mean_c += *s.c;
      avg.mean_abs_c += std::abs(*s.c);
      if (s.delta_phi) phasor += std::polar(1.0, *s.delta_phi);
    } else {
      ++avg.excluded_c;
    }
    if (s.pearson) {
      ++pearson_count;
      pearson_sum += *s.pearson;
    } else {
      ++avg.excluded_pearson;
    }
  }
  if (avg.samples == 0) throw std::invalid_argument("time_average: no samples after burn-in");
  if (c_count == 0) throw std::invalid_argument("time_average: every correlator sample is undefined");
  avg.mean_entropy /= static_cast<double>(avg.samples);
  avg.mean_c /= static_cast<double>(c_count);
  avg.mean_abs_c /= static_cast<double>(c_count);
  avg.mean_phase = phase_difference(phasor);
  if (pearson_count > 0) avg.mean_pearson = pearson_sum / static_cast<double>(pearson_count);
  return avg;
}

}  // namespace qvdp
