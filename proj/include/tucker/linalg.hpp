#pragma once

#include "tucker/tensor.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace tucker {

class RankDeficientError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative solve stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string &what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

private:
  double residual_;
  int iterations_;
};

Matrix sym(const Matrix &m);
Matrix skew(const Matrix &m);

/// A symmetric positive-definite r x r matrix with its eigendecomposition
/// m = Q diag(lambda) Q^T cached. Used for the Gram matrices G_d G_d^T.
class SpdGram {
public:
  SpdGram() = default;
  /// Symmetrizes `m` and throws RankDeficientError unless
  /// lambda_min > 1e-13 * lambda_max.
  explicit SpdGram(const Matrix &m);
  static SpdGram identity(Index r);
  /// Same eigenvectors, eigenvalues mapped through (1 + lambda)/2; this is
  /// the Gram of (I + m)/2 without another eigendecomposition.
  SpdGram averaged_with_identity() const;

  Index size() const { return m_.rows(); }
  const Matrix &matrix() const { return m_; }
  const Matrix &eigenvectors() const { return q_; }
  const Vector &eigenvalues() const { return lambda_; }

  /// a * m^{-1}
  Matrix solve_right(const Matrix &a) const;
  /// m^{-1} * a
  Matrix solve_left(const Matrix &a) const;

private:
  Matrix m_, q_;
  Vector lambda_;
};

/// Solves S*m + m*S = c through the eigendecomposition of m.
Matrix lyap_spd(const SpdGram &g, const Matrix &c);

/// Orthogonal factor a (a^T a)^{-1/2}, computed from the thin SVD as U V^T.
/// Throws RankDeficientError when sigma_min <= 1e-12 sigma_max.
Matrix polar_factor(const Matrix &a);

using LinearOperator = std::function<Vector(const Vector &)>;

struct PcgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for a self-adjoint positive-definite op.
/// Stops when ||b - op(x)|| <= tol * ||b||. Throws ConvergenceError on
/// non-positive curvature or when max_iter is reached.
PcgResult pcg_linear(const LinearOperator &op, const LinearOperator &precond, const Vector &b,
                     double tol, int max_iter);

/// (Omega_1, Omega_2, Omega_3), each skew-symmetric r_d x r_d.
struct SkewTriple {
  std::array<Matrix, 3> omega;

  static SkewTriple zeros(const std::array<Index, 3> &r);
  Matrix &operator[](int d) { return omega[static_cast<std::size_t>(d)]; }
  const Matrix &operator[](int d) const { return omega[static_cast<std::size_t>(d)]; }
  double inner(const SkewTriple &o) const;
  double norm() const { return std::sqrt(inner(*this)); }
};

/// Coefficients of the coupled Lyapunov system that defines the horizontal
/// projection. For each mode d:
///
///   Skew(Omega_d W_d) - Skew(G_d V_(d)^T) = R_d,  V = sum_e core x_e Omega_e,
///
/// where G_d is the mode-d unfolding of the core and W_d the metric weight of
/// the factor block (G_d G_d^T for the scaled metric, I for the Euclidean one).
/// With W_d = G_d G_d^T this is the system
///   G G^T O_1 + O_1 G G^T - G_1 (I kron O_2) G_1^T - G_1 (O_3 kron I) G_1^T = R_1.
struct CoupledLyapunovSystem {
  const DenseTensor3 *core = nullptr;
  std::array<Matrix, 3> core_unfoldings;
  std::array<const SpdGram *, 3> weight{};
  /// Block-diagonal preconditioner grams P_d: solves P_d X + X P_d = R_d.
  std::array<const SpdGram *, 3> precond{};

  SkewTriple apply(const SkewTriple &omega) const;
  SkewTriple apply_preconditioner(const SkewTriple &residual) const;
};

struct CoupledLyapunovOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// PCG on stacked skew unknowns under the trace inner product, preconditioned
/// by the decoupled per-block Lyapunov solves.
SkewTriple coupled_lyap_pcg(const CoupledLyapunovSystem &sys, const SkewTriple &rhs,
                            const CoupledLyapunovOptions &opts = {});

} // namespace tucker
