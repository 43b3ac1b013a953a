#include "qvdp/sse.hpp"

#include "qvdp/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace qvdp {

namespace {

// Step kernel on raw amplitude vectors; Dim is 4 in the spin limit so the
// inner loop runs on fixed-size Eigen types.
template <int Dim>
class Kernel {
 public:
  using Vec = Eigen::Matrix<Complex, Dim, 1>;
  using Mat = Eigen::Matrix<Complex, Dim, Dim>;

  Kernel(const LindbladModel& model, double dt) : dt_(dt) {
    const Matrix& h = model.hamiltonian.matrix;
    Matrix decay = Matrix::Zero(h.rows(), h.cols());
    for (const auto& l : model.channels) {
      channels_.push_back(l.matrix);
      decay += l.matrix.adjoint() * l.matrix;
    }
    // The coherent part of -i H_eff is applied exactly; a first-order update
    // of -i H psi would inflate excited amplitudes by |1 - i w dt| per step.
    const Matrix generator = Complex(0.0, -dt) * h;
    coherent_ = generator.exp();
    drift_ = -0.5 * decay;
    no_jump_ = Mat::Identity(h.rows(), h.cols()) + dt * drift_;
  }

  std::size_t channel_count() const { return channels_.size(); }

  /// Euler-Maruyama step; writes <X_k> into quadratures and returns the
  /// squared norm before any renormalization.
  double diffusive(Vec& psi, const double* dw, double* quadratures) const {
    Vec next = psi + dt_ * (drift_ * psi);
    Complex shift{};
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      const Vec lpsi = channels_[k] * psi;
      const double x = 2.0 * psi.dot(lpsi).real();
      quadratures[k] = x;
      next += Complex(0.5 * x * dt_ + dw[k]) * lpsi;
      shift += 0.125 * x * x * dt_ + 0.5 * x * dw[k];
    }
    next -= shift * psi;
    psi = coherent_ * next;
    return psi.squaredNorm();
  }

  /// First-order jump step; returns the channel that fired or -1.
  int jump(Vec& psi, double u) const {
    double total = 0.0;
    int fired = -1;
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      const double p = dt_ * (channels_[k] * psi).squaredNorm();
      if (fired < 0 && u < total + p) fired = static_cast<int>(k);
      total += p;
    }
    if (total > 0.1) throw std::invalid_argument("step_jump: total jump probability per step exceeds 0.1");
    if (fired >= 0) {
      psi = (channels_[static_cast<std::size_t>(fired)] * psi).eval();
    } else {
      psi = (coherent_ * (no_jump_ * psi)).eval();
    }
    psi.normalize();
    return fired;
  }

 private:
  double dt_;
  Mat coherent_;
  Mat drift_;
  Mat no_jump_;
  std::vector<Mat> channels_;
};

template <typename Fn>
decltype(auto) with_kernel(const LindbladModel& model, double dt, Fn&& fn) {
  if (model.space.total_dim() == 4) return fn(Kernel<4>(model, dt));
  return fn(Kernel<Eigen::Dynamic>(model, dt));
}

void check_collapse(double raw, const IntegratorConfig& cfg, std::uint64_t step) {
  if (!(raw >= cfg.norm_collapse_tol * cfg.norm_collapse_tol) || !std::isfinite(raw))
    throw NumericalError("norm collapse at step " + std::to_string(step) +
                         " (squared norm " + std::to_string(raw) + ")");
}

void check_unit(const State& psi) {
  if (std::abs(psi.amplitudes().squaredNorm() - 1.0) > 1e-10)
    throw std::invalid_argument("state is not normalized");
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be > 0");
  if (!(truncation_leak_tol > 0.0)) throw ConfigError("truncation_leak_tol", "must be > 0");
  if (!(norm_collapse_tol > 0.0)) throw ConfigError("norm_collapse_tol", "must be > 0");
}

double default_time_step(const VdpParams& params, const LindbladModel& model) {
  double decay = 0.0;
  for (const auto& l : model.channels) {
    const Matrix ldl = l.matrix.adjoint() * l.matrix;
    Eigen::SelfAdjointEigenSolver<Matrix> es(ldl, Eigen::EigenvaluesOnly);
    decay += es.eigenvalues().maxCoeff();
  }
  const double scale = std::max({std::abs(params.omega1), std::abs(params.omega2), decay});
  if (!(scale > 0.0)) throw ConfigError("dt", "cannot infer a time step for a static model");
  return 1e-2 / scale;
}

State sample_initial(const Density& rho, const NoiseStream& noise) {
  const Matrix herm = (rho.matrix + rho.matrix.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  Eigen::VectorXd weights = es.eigenvalues();
  if (weights.minCoeff() < -1e-10) throw NumericalError("sample_initial: density matrix is not PSD");
  weights = weights.cwiseMax(0.0);
  const double total = weights.sum();
  if (!(total > 0.0)) throw NumericalError("sample_initial: density matrix has zero trace");
  const double u = noise.initial_uniform() * total;
  double acc = 0.0;
  Eigen::Index chosen = weights.size() - 1;
  for (Eigen::Index n = 0; n < weights.size(); ++n) {
    acc += weights(n);
    if (u < acc && weights(n) > 0.0) {
      chosen = n;
      break;
    }
  }
  // Guard against landing on a clipped eigenvalue via rounding in the last bin.
  while (weights(chosen) <= 0.0 && chosen > 0) --chosen;
  return {es.eigenvectors().col(chosen), rho.space};
}

DiffusiveStep step_diffusive(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                             std::span<const double> increments) {
  cfg.validate();
  check_unit(psi);
  if (!(psi.space() == model.space)) throw std::invalid_argument("step_diffusive: space mismatch");
  if (increments.size() != model.channels.size())
    throw std::invalid_argument("step_diffusive: one increment per channel required");
  return with_kernel(model, cfg.dt, [&](const auto& kernel) {
    using Vec = typename std::decay_t<decltype(kernel)>::Vec;
    Vec v = psi.amplitudes();
    std::vector<double> x(model.channels.size());
    const double raw = kernel.diffusive(v, increments.data(), x.data());
    check_collapse(raw, cfg, 0);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += increments[k] / cfg.dt;
    return DiffusiveStep{State(Vector(v), model.space), std::move(x), raw};
  });
}

DiffusiveStep step_diffusive(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                             const NoiseStream& noise, std::uint64_t step) {
  std::vector<double> dw(model.channels.size());
  noise.normals(step, dw);
  const double scale = std::sqrt(cfg.dt);
  for (double& w : dw) w *= scale;
  return step_diffusive(psi, model, cfg, dw);
}

JumpStep step_jump(const State& psi, const LindbladModel& model, const IntegratorConfig& cfg,
                   const NoiseStream& noise, std::uint64_t step) {
  cfg.validate();
  check_unit(psi);
  if (!(psi.space() == model.space)) throw std::invalid_argument("step_jump: space mismatch");
  return with_kernel(model, cfg.dt, [&](const auto& kernel) {
    using Vec = typename std::decay_t<decltype(kernel)>::Vec;
    Vec v = psi.amplitudes();
    const int fired = kernel.jump(v, noise.uniform(step));
    return JumpStep{State(Vector(v), model.space), fired};
  });
}

TrajectoryRecord run_trajectory(const LindbladModel& model, const State& psi0, double total_time,
                                double sample_interval, const IntegratorConfig& cfg, const NoiseStream& noise,
                                const RecordOptions& options) {
  cfg.validate();
  check_unit(psi0);
  if (!(psi0.space() == model.space)) throw std::invalid_argument("run_trajectory: space mismatch");
  if (!(total_time >= 0.0)) throw std::invalid_argument("run_trajectory: total_time must be >= 0");
  if (!(sample_interval >= cfg.dt * (1.0 - 1e-9)))
    throw std::invalid_argument("run_trajectory: sample_interval must be >= dt");

  const auto n_steps = static_cast<std::uint64_t>(std::llround(total_time / cfg.dt));
  const auto every = static_cast<std::uint64_t>(std::max<long long>(1, std::llround(sample_interval / cfg.dt)));
  const std::size_t n_channels = model.channels.size();
  const Observables obs(model.space);
  const double sqrt_dt = std::sqrt(cfg.dt);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrajectoryRecord rec;
  rec.seed = noise.seed();
  rec.trajectory_index = noise.trajectory_index();
  rec.sample_interval = static_cast<double>(every) * cfg.dt;
  const std::size_t expected = static_cast<std::size_t>(n_steps / every) + 1;
  rec.times.reserve(expected);
  rec.x1.reserve(expected);
  rec.x2.reserve(expected);
  rec.c.reserve(expected);
  rec.entropy.reserve(expected);

  with_kernel(model, cfg.dt, [&](const auto& kernel) {
    using Vec = typename std::decay_t<decltype(kernel)>::Vec;
    Vec psi = psi0.amplitudes();
    std::vector<double> dw(n_channels), quad(n_channels);

    const auto sample = [&](std::uint64_t step, bool have_currents) {
      const Vector v = psi.normalized();
      rec.times.push_back(static_cast<double>(step) * cfg.dt);
      rec.x1.push_back(obs.position(1, v));
      rec.x2.push_back(obs.position(2, v));
      rec.c.push_back(obs.correlator(v));
      rec.entropy.push_back(obs.entropy(v));
      if (options.currents) {
        std::vector<double> j(n_channels, nan);
        if (have_currents)
          for (std::size_t k = 0; k < n_channels; ++k) j[k] = quad[k] + dw[k] / cfg.dt;
        rec.currents.push_back(std::move(j));
      }
      if (!model.quantum_limit) {
        for (int which = 1; which <= 2; ++which) {
          const double leak = obs.top_level_population(which, v);
          if (leak > cfg.truncation_leak_tol)
            throw NumericalError("truncation leak: top Fock level of oscillator " + std::to_string(which) +
                                 " holds population " + std::to_string(leak) + " at t = " +
                                 std::to_string(static_cast<double>(step) * cfg.dt));
        }
      }
    };

    sample(0, false);
    for (std::uint64_t s = 1; s <= n_steps; ++s) {
      if (options.unraveling == Unraveling::diffusive) {
        noise.normals(s, dw);
        for (double& w : dw) w *= sqrt_dt;
        const double raw = kernel.diffusive(psi, dw.data(), quad.data());
        check_collapse(raw, cfg, s);
        if (cfg.renormalize_every_step) psi /= std::sqrt(raw);
      } else {
        kernel.jump(psi, noise.uniform(s));
      }
      if (s % every == 0) sample(s, options.unraveling == Unraveling::diffusive);
    }
    rec.final_state = State(Vector(psi), model.space);
  });
  return rec;
}

std::vector<State> evolve_to(const LindbladModel& model, const State& psi0, std::span<const double> times,
                             const IntegratorConfig& cfg, const NoiseStream& noise, Unraveling unraveling) {
  cfg.validate();
  check_unit(psi0);
  std::vector<std::uint64_t> targets;
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("evolve_to: times must be >= 0");
    targets.push_back(static_cast<std::uint64_t>(std::llround(t / cfg.dt)));
  }
  if (!std::is_sorted(targets.begin(), targets.end())) throw std::invalid_argument("evolve_to: times must be sorted");

  std::vector<State> out;
  out.reserve(targets.size());
  with_kernel(model, cfg.dt, [&](const auto& kernel) {
    using Vec = typename std::decay_t<decltype(kernel)>::Vec;
    Vec psi = psi0.amplitudes();
    std::vector<double> dw(model.channels.size()), quad(model.channels.size());
    const double sqrt_dt = std::sqrt(cfg.dt);
    std::uint64_t s = 0;
    for (std::uint64_t target : targets) {
      while (s < target) {
        ++s;
        if (unraveling == Unraveling::diffusive) {
          noise.normals(s, dw);
          for (double& w : dw) w *= sqrt_dt;
          const double raw = kernel.diffusive(psi, dw.data(), quad.data());
          check_collapse(raw, cfg, s);
          psi /= std::sqrt(raw);
        } else {
          kernel.jump(psi, noise.uniform(s));
        }
      }
      out.emplace_back(Vector(psi), model.space);
    }
  });
  return out;
}

std::vector<IndicatorSample> indicator_samples(const TrajectoryRecord& record, double pearson_width) {
  std::vector<std::optional<double>> r(record.size());
  if (record.size() > 1 && pearson_width >= record.sample_interval) {
    r = pearson_series(record.x1, record.x2, WindowSpec{pearson_width, record.sample_interval});
  }
  std::vector<IndicatorSample> out(record.size());
  for (std::size_t i = 0; i < record.size(); ++i) {
    out[i].t = record.times[i];
    out[i].c = record.c[i];
    out[i].delta_phi = phase_difference(record.c[i]);
    out[i].pearson = r[i];
    out[i].entropy = record.entropy[i];
  }
  return out;
}

// ---- binary dump ----

namespace {

constexpr char kMagic[8] = {'Q', 'V', 'D', 'P', 'T', 'R', 'J', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("read_record_binary: truncated input");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_record_binary(std::ostream& out, const TrajectoryRecord& record, int channels) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto columns = static_cast<std::uint32_t>(6 + channels);
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, columns);
  put_le<std::uint64_t>(out, record.size());
  put_le<std::uint64_t>(out, record.seed);
  put_le<std::uint64_t>(out, record.trajectory_index);
  put_le<double>(out, record.sample_interval);
  for (std::size_t i = 0; i < record.size(); ++i) {
    put_le<double>(out, record.times[i]);
    put_le<double>(out, record.x1[i]);
    put_le<double>(out, record.x2[i]);
    put_le<double>(out, record.c[i] ? record.c[i]->real() : nan);
    put_le<double>(out, record.c[i] ? record.c[i]->imag() : nan);
    put_le<double>(out, record.entropy[i]);
    for (int k = 0; k < channels; ++k) {
      const bool have = i < record.currents.size() && static_cast<std::size_t>(k) < record.currents[i].size();
      put_le<double>(out, have ? record.currents[i][static_cast<std::size_t>(k)] : nan);
    }
  }
}

TrajectoryRecord read_record_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("read_record_binary: bad magic");
  if (get_le<std::uint32_t>(in) != 1) throw std::runtime_error("read_record_binary: unsupported version");
  const auto columns = get_le<std::uint32_t>(in);
  if (columns < 6) throw std::runtime_error("read_record_binary: too few columns");
  const auto rows = get_le<std::uint64_t>(in);
  TrajectoryRecord rec;
  rec.seed = get_le<std::uint64_t>(in);
  rec.trajectory_index = get_le<std::uint64_t>(in);
  rec.sample_interval = get_le<double>(in);
  const std::size_t channels = columns - 6;
  bool any_current = false;
  for (std::uint64_t i = 0; i < rows; ++i) {
    rec.times.push_back(get_le<double>(in));
    rec.x1.push_back(get_le<double>(in));
    rec.x2.push_back(get_le<double>(in));
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    rec.c.push_back(std::isnan(re) ? std::nullopt : std::optional<Complex>(Complex(re, im)));
    rec.entropy.push_back(get_le<double>(in));
    std::vector<double> j(channels);
    for (auto& v : j) {
      v = get_le<double>(in);
      any_current = any_current || !std::isnan(v);
    }
    rec.currents.push_back(std::move(j));
  }
  if (!any_current) rec.currents.clear();
  return rec;
}

}  // namespace qvdp
