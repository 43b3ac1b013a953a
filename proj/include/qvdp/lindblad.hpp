#pragma once

// Two dissipatively coupled quantum Van der Pol oscillators: model
// construction, Liouvillian, exact propagation, steady states and the
// closed-form steady-state synchronization quantities of the spin limit.

#include "qvdp/hilbert.hpp"

#include <complex>
#include <limits>
#include <vector>

namespace qvdp {

using Complex = std::complex<double>;
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Op = Operator<double>;
using State = StateVector<double>;
using Density = DensityMatrix<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Physical parameters of the coupled model. A nonlinear damping rate of
/// +infinity selects the quantum (two-level) limit for that oscillator.
struct VdpParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double gamma_up_1 = 0.0;
  double gamma_up_2 = 0.0;
  double gamma_down_1 = kInfinity;
  double gamma_down_2 = kInfinity;
  double coupling = 0.0;  // V
  double theta = 0.0;

  double detuning() const { return omega2 - omega1; }
  bool quantum_limit() const;
  bool symmetric_rates() const;

  /// Throws ConfigError naming the first negative or non-finite field.
  void validate() const;

  /// Symmetric quantum-limit parameters with rates given in units of gamma_up.
  static VdpParams quantum(double gamma_up, double coupling_in_gamma, double detuning_in_gamma,
                           double omega1, double theta = 0.0);
};

/// H plus the ordered channels L1..L5 (rates absorbed into the operators).
struct LindbladModel {
  Op hamiltonian;
  std::vector<Op> channels;
  FockSpace space;
  bool quantum_limit = false;
};

/// Generator acting on column-stacked density matrices: vec(L(rho)) = M vec(rho).
struct Superoperator {
  Matrix matrix;
  FockSpace space;
};

/// Builds H = sum_i w_i n_i and channels
///   L1 = sqrt(gd1) a1^2,  L2 = sqrt(gu1) a1^dag,  L3 = sqrt(gd2) a2^2,
///   L4 = sqrt(gu2) a2^dag, L5 = sqrt(V) (a1 - e^{-i theta} a2).
/// In the quantum limit the space must be [2,2]; the nonlinear damping is
/// replaced by linear decay sqrt(2 gu_i) sigma_i^-.
///
/// The coupling phase is e^{-i theta} so that the correlator <a1^dag a2> of
/// the locked state carries phase +theta.
LindbladModel build_vdp_model(const VdpParams& params, const FockSpace& space);
LindbladModel build_vdp_model(const VdpParams& params);  // [2,2] quantum limit

/// Model from an explicit Hamiltonian and channel list.
LindbladModel make_model(Op hamiltonian, std::vector<Op> channels);

Superoperator liouvillian(const LindbladModel& model);

/// L(rho) evaluated directly from the operators.
Matrix apply_lindbladian(const LindbladModel& model, const Matrix& rho);

Density propagate(const LindbladModel& model, const Density& rho0, double t);
Density propagate(const Superoperator& generator, const Density& rho0, double t);

/// Unique stationary state. Throws NumericalError when the null space of the
/// Liouvillian is not one-dimensional.
Density steady_state_numeric(const LindbladModel& model);

/// Closed-form steady state of the symmetric spin-limit model.
Density analytic_steady_state(const VdpParams& params);

/// C_pi = V (g + V) e^{i dphi} / ((3g + V) sqrt(dw^2 + (3g + V)^2)).
Complex correlator_steady(const VdpParams& params);

/// dphi_pi = theta - atan(dw / (3g + V)), wrapped to (-pi, pi].
double steady_phase(const VdpParams& params);

/// Excited population p of either marginal steady state.
double marginal_excitation(const VdpParams& params);

/// Classical phase-locking boundary V = 2 |dw| for symmetric rates.
double classical_tongue(double detuning);

double wrap_phase(double phi);

}  // namespace qvdp
