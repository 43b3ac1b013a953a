#include "qvdp/lindblad.hpp"

#include "qvdp/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace qvdp {

namespace {

void require_nonnegative(double value, const char* field) {
  if (std::isnan(value) || value < 0.0) throw ConfigError(field, "rate must be >= 0");
}

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) throw ConfigError(field, "must be finite");
}

void require_spin_limit(const VdpParams& p) {
  p.validate();
  if (!p.quantum_limit()) throw ConfigError("gamma_down", "closed forms need the quantum limit");
  if (!p.symmetric_rates()) throw ConfigError("gamma_up", "closed forms need symmetric pumping rates");
}

}  // namespace

bool VdpParams::quantum_limit() const { return std::isinf(gamma_down_1) && std::isinf(gamma_down_2); }

bool VdpParams::symmetric_rates() const {
  return std::abs(gamma_up_1 - gamma_up_2) <= 1e-12 * std::max(gamma_up_1, gamma_up_2);
}

void VdpParams::validate() const {
  require_finite(omega1, "omega1");
  require_finite(omega2, "omega2");
  require_finite(theta, "theta");
  require_nonnegative(gamma_up_1, "gamma_up_1");
  require_nonnegative(gamma_up_2, "gamma_up_2");
  require_nonnegative(gamma_down_1, "gamma_down_1");
  require_nonnegative(gamma_down_2, "gamma_down_2");
  require_nonnegative(coupling, "V");
  require_finite(gamma_up_1, "gamma_up_1");
  require_finite(gamma_up_2, "gamma_up_2");
  require_finite(coupling, "V");
  if (std::isinf(gamma_down_1) != std::isinf(gamma_down_2))
    throw ConfigError("gamma_down", "both oscillators must be in the quantum limit or neither");
}

VdpParams VdpParams::quantum(double gamma_up, double coupling_in_gamma, double detuning_in_gamma,
                             double omega1, double theta) {
  VdpParams p;
  p.omega1 = omega1;
  p.omega2 = omega1 + detuning_in_gamma * gamma_up;
  p.gamma_up_1 = p.gamma_up_2 = gamma_up;
  p.coupling = coupling_in_gamma * gamma_up;
  p.theta = theta;
  return p;
}

LindbladModel make_model(Op hamiltonian, std::vector<Op> channels) {
  if (!hamiltonian.is_hermitian()) throw std::invalid_argument("make_model: Hamiltonian is not Hermitian");
  for (const auto& l : channels)
    if (!(l.space == hamiltonian.space)) throw std::invalid_argument("make_model: channel space mismatch");
  LindbladModel m;
  m.space = hamiltonian.space;
  m.hamiltonian = std::move(hamiltonian);
  m.channels = std::move(channels);
  return m;
}

LindbladModel build_vdp_model(const VdpParams& params, const FockSpace& space) {
  params.validate();
  if (space.factors() != 2) throw std::invalid_argument("build_vdp_model: two oscillators required");
  const bool spin = params.quantum_limit();
  if (spin && space.dims() != std::vector<int>{2, 2})
    throw ConfigError("fock_dim", "quantum limit requires dims [2,2]");

  const Op a1 = annihilation(space, 1);
  const Op a2 = annihilation(space, 2);
  const Op h = Complex(params.omega1) * (a1.adjoint() * a1) + Complex(params.omega2) * (a2.adjoint() * a2);

  const auto root = [](double rate) { return Complex(std::sqrt(rate)); };
  std::vector<Op> channels;
  channels.reserve(5);
  if (spin) {
    channels.push_back(root(2.0 * params.gamma_up_1) * a1);
  } else {
    channels.push_back(root(params.gamma_down_1) * (a1 * a1));
  }
  channels.push_back(root(params.gamma_up_1) * a1.adjoint());
  if (spin) {
    channels.push_back(root(2.0 * params.gamma_up_2) * a2);
  } else {
    channels.push_back(root(params.gamma_down_2) * (a2 * a2));
  }
  channels.push_back(root(params.gamma_up_2) * a2.adjoint());
  channels.push_back(root(params.coupling) * (a1 - std::polar(1.0, -params.theta) * a2));

  LindbladModel model = make_model(h, std::move(channels));
  model.quantum_limit = spin;
  return model;
}

LindbladModel build_vdp_model(const VdpParams& params) { return build_vdp_model(params, FockSpace({2, 2})); }

Superoperator liouvillian(const LindbladModel& model) {
  const int d = model.space.total_dim();
  if (static_cast<std::size_t>(d) * static_cast<std::size_t>(d) > 65536)
    throw std::length_error("liouvillian: superoperator dimension too large");
  const Matrix id = Matrix::Identity(d, d);
  const Matrix& h = model.hamiltonian.matrix;
  Matrix m = Complex(0.0, -1.0) * (Eigen::kroneckerProduct(id, h).eval() -
                                   Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const auto& op : model.channels) {
    const Matrix& l = op.matrix;
    const Matrix ldl = l.adjoint() * l;
    m += Eigen::kroneckerProduct(l.conjugate(), l).eval();
    m -= 0.5 * Eigen::kroneckerProduct(id, ldl).eval();
    m -= 0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval();
  }
  return {std::move(m), model.space};
}

Matrix apply_lindbladian(const LindbladModel& model, const Matrix& rho) {
  const Matrix& h = model.hamiltonian.matrix;
  Matrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
  for (const auto& op : model.channels) {
    const Matrix& l = op.matrix;
    const Matrix ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

Density propagate(const Superoperator& generator, const Density& rho0, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("propagate: time must be >= 0");
  if (!(rho0.space == generator.space)) throw std::invalid_argument("propagate: space mismatch");
  if (t == 0.0) return rho0;
  const int d = generator.space.total_dim();
  const Matrix step = (generator.matrix * Complex(t)).exp();
  const Vector v = step * rho0.matrix.reshaped(d * d, 1);
  Matrix rho = v.reshaped(d, d);
  return {std::move(rho), rho0.space};
}

Density propagate(const LindbladModel& model, const Density& rho0, double t) {
  return propagate(liouvillian(model), rho0, t);
}

Density steady_state_numeric(const LindbladModel& model) {
  const Superoperator gen = liouvillian(model);
  const int d = model.space.total_dim();
  Eigen::BDCSVD<Matrix> svd(gen.matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index n = sv.size();
  if (n < 2 || !(sv(n - 2) > 1e-8 * sv(0)))
    throw NumericalError("steady_state_numeric: Liouvillian null space is not one-dimensional");
  const Vector null = svd.matrixV().col(n - 1);
  Matrix rho = null.reshaped(d, d);
  rho = (rho + rho.adjoint()).eval() / 2.0;
  rho /= rho.trace();
  return {std::move(rho), model.space};
}

Density analytic_steady_state(const VdpParams& params) {
  require_spin_limit(params);
  const double g = params.gamma_up_1;
  const double v = params.coupling;
  const double dw = params.detuning();
  const double lorentz = dw * dw + (3.0 * g + v) * (3.0 * g + v);
  const double norm = (3.0 * g + v) *
                      (3.0 * g * (dw * dw + 9.0 * g * g) + (dw * dw + 27.0 * g * g) * v + 8.0 * g * v * v);

  Matrix pi = Matrix::Zero(4, 4);
  const double single = g * (2.0 * g + v) * lorentz / norm;
  const double both = g * g * lorentz / norm;
  pi(1, 1) = single;
  pi(2, 2) = single;
  pi(3, 3) = both;
  // Written as 1 - (...) in closed form; identical to the trace complement.
  pi(0, 0) = 1.0 - g * (5.0 * g + 2.0 * v) * lorentz / norm;
  const Complex coherence =
      g * v * (g + v) * Complex(3.0 * g + v, -dw) * std::polar(1.0, params.theta) / norm;
  pi(1, 2) = coherence;
  pi(2, 1) = std::conj(coherence);
  return {std::move(pi), FockSpace({2, 2})};
}

double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(phi, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

double steady_phase(const VdpParams& params) {
  require_spin_limit(params);
  const double g = params.gamma_up_1;
  return wrap_phase(params.theta - std::atan(params.detuning() / (3.0 * g + params.coupling)));
}

Complex correlator_steady(const VdpParams& params) {
  require_spin_limit(params);
  const double g = params.gamma_up_1;
  const double v = params.coupling;
  const double dw = params.detuning();
  const double magnitude = v * (g + v) / ((3.0 * g + v) * std::sqrt(dw * dw + (3.0 * g + v) * (3.0 * g + v)));
  return std::polar(magnitude, steady_phase(params));
}

double marginal_excitation(const VdpParams& params) {
  require_spin_limit(params);
  const double g = params.gamma_up_1;
  const double v = params.coupling;
  const double dw = params.detuning();
  const double lorentz = dw * dw + (3.0 * g + v) * (3.0 * g + v);
  const double norm = (3.0 * g + v) *
                      (3.0 * g * (dw * dw + 9.0 * g * g) + (dw * dw + 27.0 * g * g) * v + 8.0 * g * v * v);
  return g * (3.0 * g + v) * lorentz / norm;
}

double classical_tongue(double detuning) { return 2.0 * std::abs(detuning); }

}  // namespace qvdp
