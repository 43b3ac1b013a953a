#pragma once

// Dense linear algebra on truncated tensor-product Fock spaces.
//
// Composite indices are row-major over the factor list: oscillator 1 is the
// slowest-varying index, so |n1 n2> lives at n1 * d2 + n2.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvdp {

template <typename Real>
using MatrixX = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using VectorX = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

inline constexpr double kDefaultTolerance = 1e-10;

class FockSpace {
 public:
  static constexpr std::size_t kDefaultMaxDim = 1024;

  FockSpace() = default;
  explicit FockSpace(std::vector<int> dims, std::size_t max_total_dim = kDefaultMaxDim)
      : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("FockSpace: empty factor list");
    std::size_t total = 1;
    for (int d : dims_) {
      if (d < 2) throw std::invalid_argument("FockSpace: every truncation dimension must be >= 2");
      total *= static_cast<std::size_t>(d);
      if (total > max_total_dim)
        throw std::length_error("FockSpace: total dimension exceeds " + std::to_string(max_total_dim));
    }
    total_ = static_cast<int>(total);
  }

  const std::vector<int>& dims() const { return dims_; }
  int factors() const { return static_cast<int>(dims_.size()); }
  int total_dim() const { return total_; }

  /// Truncation of oscillator `which` (1-based).
  int dim(int which) const {
    check_factor(which);
    return dims_[static_cast<std::size_t>(which - 1)];
  }

  /// Distance in the composite index between neighbouring levels of `which`.
  int stride(int which) const {
    check_factor(which);
    int s = 1;
    for (int k = factors(); k > which; --k) s *= dims_[static_cast<std::size_t>(k - 1)];
    return s;
  }

  void check_factor(int which) const {
    if (which < 1 || which > factors())
      throw std::out_of_range("FockSpace: oscillator index " + std::to_string(which) +
                              " outside 1.." + std::to_string(factors()));
  }

  friend bool operator==(const FockSpace& a, const FockSpace& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<int> dims_{};
  int total_ = 0;
};

inline FockSpace concat(const FockSpace& a, const FockSpace& b,
                        std::size_t max_total_dim = FockSpace::kDefaultMaxDim) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return FockSpace(std::move(dims), max_total_dim);
}

template <typename Real = double>
struct Operator {
  MatrixX<Real> matrix;
  FockSpace space;

  Operator() = default;
  Operator(MatrixX<Real> m, FockSpace s) : matrix(std::move(m)), space(std::move(s)) {
    if (matrix.rows() != space.total_dim() || matrix.cols() != space.total_dim())
      throw std::invalid_argument("Operator: matrix shape does not match space");
  }

  Operator adjoint() const { return {matrix.adjoint(), space}; }

  bool is_hermitian(Real tol = Real(kDefaultTolerance)) const {
    return (matrix - matrix.adjoint()).norm() <= tol;
  }

  friend Operator operator+(const Operator& a, const Operator& b) {
    require_same(a, b);
    return {a.matrix + b.matrix, a.space};
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    require_same(a, b);
    return {a.matrix - b.matrix, a.space};
  }
  friend Operator operator*(const Operator& a, const Operator& b) {
    require_same(a, b);
    return {a.matrix * b.matrix, a.space};
  }
  friend Operator operator*(std::complex<Real> s, const Operator& a) { return {s * a.matrix, a.space}; }

 private:
  static void require_same(const Operator& a, const Operator& b) {
    if (!(a.space == b.space)) throw std::invalid_argument("Operator: space mismatch");
  }
};

/// Unit-norm pure state. Construction normalizes; a zero vector is rejected.
template <typename Real = double>
class StateVector {
 public:
  StateVector() = default;
  StateVector(VectorX<Real> amplitudes, FockSpace space)
      : amplitudes_(std::move(amplitudes)), space_(std::move(space)) {
    if (amplitudes_.size() != space_.total_dim())
      throw std::invalid_argument("StateVector: amplitude count does not match space");
    const Real n = amplitudes_.norm();
    if (!(n > Real(0)) || !std::isfinite(n)) throw std::invalid_argument("StateVector: cannot normalize");
    amplitudes_ /= n;
  }

  /// Product basis state |n1 n2 ...>.
  static StateVector basis(const FockSpace& space, const std::vector<int>& levels) {
    if (static_cast<int>(levels.size()) != space.factors())
      throw std::invalid_argument("StateVector::basis: one level per oscillator required");
    int index = 0;
    for (int k = 1; k <= space.factors(); ++k) {
      const int n = levels[static_cast<std::size_t>(k - 1)];
      if (n < 0 || n >= space.dim(k)) throw std::out_of_range("StateVector::basis: level outside truncation");
      index += n * space.stride(k);
    }
    VectorX<Real> v = VectorX<Real>::Zero(space.total_dim());
    v(index) = Real(1);
    return {std::move(v), space};
  }

  const VectorX<Real>& amplitudes() const { return amplitudes_; }
  const FockSpace& space() const { return space_; }
  int size() const { return static_cast<int>(amplitudes_.size()); }

 private:
  VectorX<Real> amplitudes_{};
  FockSpace space_{};
};

template <typename Real = double>
struct DensityMatrix {
  MatrixX<Real> matrix;
  FockSpace space;

  static DensityMatrix pure(const StateVector<Real>& psi) {
    return {psi.amplitudes() * psi.amplitudes().adjoint(), psi.space()};
  }

  std::complex<Real> trace() const { return matrix.trace(); }

  /// Hermitian, unit trace and PSD to within `tol`; returns an empty string or the first violation.
  std::string violation(Real tol = Real(kDefaultTolerance)) const {
    if (matrix.rows() != matrix.cols() || matrix.rows() != space.total_dim()) return "shape";
    if ((matrix - matrix.adjoint()).norm() > tol) return "not Hermitian";
    if (std::abs(matrix.trace() - std::complex<Real>(1)) > tol) return "trace != 1";
    Eigen::SelfAdjointEigenSolver<MatrixX<Real>> es(matrix, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) return "negative eigenvalue";
    return {};
  }
  bool valid(Real tol = Real(kDefaultTolerance)) const { return violation(tol).empty(); }
};

// ---- single-mode ladders and their embeddings ----

/// Truncated lowering operator on one mode: <n-1|a|n> = sqrt(n).
template <typename Real = double>
MatrixX<Real> lowering(int dim) {
  if (dim < 2) throw std::invalid_argument("lowering: dimension must be >= 2");
  MatrixX<Real> a = MatrixX<Real>::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(Real(n));
  return a;
}

/// Embeds a single-mode matrix on factor `which`, identity elsewhere.
template <typename Real = double>
Operator<Real> embed(const FockSpace& space, int which, const MatrixX<Real>& local) {
  space.check_factor(which);
  if (local.rows() != space.dim(which) || local.cols() != space.dim(which))
    throw std::invalid_argument("embed: local operator does not match factor dimension");
  MatrixX<Real> full = MatrixX<Real>::Identity(1, 1);
  for (int k = 1; k <= space.factors(); ++k) {
    const MatrixX<Real> factor =
        k == which ? local : MatrixX<Real>(MatrixX<Real>::Identity(space.dim(k), space.dim(k)));
    full = Eigen::kroneckerProduct(full, factor).eval();
  }
  return {std::move(full), space};
}

template <typename Real = double>
Operator<Real> annihilation(const FockSpace& space, int which) {
  space.check_factor(which);
  return embed<Real>(space, which, lowering<Real>(space.dim(which)));
}

template <typename Real = double>
Operator<Real> creation(const FockSpace& space, int which) {
  return annihilation<Real>(space, which).adjoint();
}

template <typename Real = double>
Operator<Real> number(const FockSpace& space, int which) {
  const auto a = annihilation<Real>(space, which);
  return a.adjoint() * a;
}

/// Position quadrature x = (a + a^dagger) / sqrt(2).
template <typename Real = double>
Operator<Real> position(const FockSpace& space, int which) {
  const auto a = annihilation<Real>(space, which);
  return std::complex<Real>(Real(1) / std::sqrt(Real(2))) * (a + a.adjoint());
}

template <typename Real = double>
Operator<Real> identity(const FockSpace& space) {
  return {MatrixX<Real>::Identity(space.total_dim(), space.total_dim()), space};
}

template <typename Real = double>
Operator<Real> zero(const FockSpace& space) {
  return {MatrixX<Real>::Zero(space.total_dim(), space.total_dim()), space};
}

// ---- tensor products ----

template <typename Real>
Operator<Real> tensor(const Operator<Real>& a, const Operator<Real>& b,
                      std::size_t max_total_dim = FockSpace::kDefaultMaxDim) {
  return {Eigen::kroneckerProduct(a.matrix, b.matrix).eval(), concat(a.space, b.space, max_total_dim)};
}

template <typename Real>
StateVector<Real> tensor(const StateVector<Real>& a, const StateVector<Real>& b,
                         std::size_t max_total_dim = FockSpace::kDefaultMaxDim) {
  FockSpace space = concat(a.space(), b.space(), max_total_dim);
  VectorX<Real> v = Eigen::kroneckerProduct(a.amplitudes(), b.amplitudes()).eval();
  return {std::move(v), std::move(space)};
}

// ---- expectations and partial traces ----

template <typename Real>
std::complex<Real> expectation(const Operator<Real>& op, const StateVector<Real>& psi) {
  if (!(op.space == psi.space())) throw std::invalid_argument("expectation: dimension mismatch");
  return psi.amplitudes().dot(op.matrix * psi.amplitudes());
}

template <typename Real>
std::complex<Real> expectation(const Operator<Real>& op, const DensityMatrix<Real>& rho) {
  if (!(op.space == rho.space)) throw std::invalid_argument("expectation: dimension mismatch");
  return (op.matrix * rho.matrix).trace();
}

/// Reduced state of oscillator `keep`, tracing out every other factor.
template <typename Real>
DensityMatrix<Real> reduced_density(const StateVector<Real>& psi, int keep) {
  const FockSpace& space = psi.space();
  if (space.factors() < 2) throw std::invalid_argument("reduced_density: need at least two factors");
  space.check_factor(keep);
  const int dk = space.dim(keep);
  const int stride = space.stride(keep);
  const int rest = space.total_dim() / dk;
  // Psi(a, r): a = level of the kept factor, r = composite index of the rest.
  MatrixX<Real> block(dk, rest);
  for (int idx = 0; idx < space.total_dim(); ++idx) {
    const int a = (idx / stride) % dk;
    const int hi = idx / (stride * dk);
    const int lo = idx % stride;
    block(a, hi * stride + lo) = psi.amplitudes()(idx);
  }
  MatrixX<Real> rho = block * block.adjoint();
  return {std::move(rho), FockSpace({dk})};
}

/// 0.5 * sum |eig(a - b)| for Hermitian arguments.
template <typename Real>
Real trace_distance(const MatrixX<Real>& a, const MatrixX<Real>& b) {
  const MatrixX<Real> diff = a - b;
  const MatrixX<Real> herm = (diff + diff.adjoint()) / Real(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Real>> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum() / Real(2);
}

template <typename Real>
Real trace_distance(const DensityMatrix<Real>& a, const DensityMatrix<Real>& b) {
  if (!(a.space == b.space)) throw std::invalid_argument("trace_distance: space mismatch");
  return trace_distance<Real>(a.matrix, b.matrix);
}

}  // namespace qvdp
