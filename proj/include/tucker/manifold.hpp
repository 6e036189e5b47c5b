#pragma once

#include "tucker/linalg.hpp"
#include "tucker/tensor.hpp"

#include <array>
#include <cstdint>

namespace tucker {

/// Which Riemannian metric the geometry uses on the factor blocks.
///
/// Preconditioned weights block d by G_d G_d^T; Euclidean drops the weights
/// and is the plain product metric (kept as a baseline).
enum class Metric { Preconditioned, Euclidean };

/// Tuple of four blocks (xi_U1, xi_U2, xi_U3, xi_G). The tag keeps tangent
/// and ambient vectors distinct types.
template <class Tag> struct FactorBlocks {
  std::array<Matrix, 3> u;
  DenseTensor3 core;

  static FactorBlocks zeros(const Dims &dims, const std::array<Index, 3> &r) {
    FactorBlocks z;
    for (int d = 0; d < 3; ++d) z.u[d] = Matrix::Zero(dims[d], r[d]);
    z.core = DenseTensor3(Dims{r[0], r[1], r[2]});
    return z;
  }

  FactorBlocks &operator+=(const FactorBlocks &o) {
    for (int d = 0; d < 3; ++d) u[d] += o.u[d];
    core += o.core;
    return *this;
  }
  FactorBlocks &operator-=(const FactorBlocks &o) {
    for (int d = 0; d < 3; ++d) u[d] -= o.u[d];
    core -= o.core;
    return *this;
  }
  FactorBlocks &operator*=(double s) {
    for (auto &m : u) m *= s;
    core *= s;
    return *this;
  }
  friend FactorBlocks operator+(FactorBlocks a, const FactorBlocks &b) { return a += b; }
  friend FactorBlocks operator-(FactorBlocks a, const FactorBlocks &b) { return a -= b; }
  friend FactorBlocks operator*(double s, FactorBlocks a) { return a *= s; }
  friend FactorBlocks operator-(FactorBlocks a) { return a *= -1.0; }

  /// Plain Euclidean inner product over all four blocks.
  double euclidean_inner(const FactorBlocks &o) const {
    double s = core.inner(o.core);
    for (int d = 0; d < 3; ++d) s += u[d].cwiseProduct(o.u[d]).sum();
    return s;
  }
  double euclidean_norm() const { return std::sqrt(euclidean_inner(*this)); }
};

struct TangentTag {};
struct AmbientTag {};
using TangentVector = FactorBlocks<TangentTag>;
using AmbientVector = FactorBlocks<AmbientTag>;

template <class To, class From> FactorBlocks<To> retag(const FactorBlocks<From> &v) {
  return FactorBlocks<To>{v.u, v.core};
}
inline AmbientVector as_ambient(const TangentVector &v) { return retag<AmbientTag>(v); }

/// A point (U1, U2, U3, G) of St(r1,n1) x St(r2,n2) x St(r3,n3) x R^{r1 x r2 x r3}.
///
/// Immutable. The constructor checks orthonormality (1e-10) and builds the
/// Gram caches G_d G_d^T, throwing RankDeficientError for a degenerate core.
class TuckerPoint {
public:
  TuckerPoint(std::array<Matrix, 3> u, DenseTensor3 core);

  const Matrix &u(int d) const { return u_[static_cast<std::size_t>(d)]; }
  const std::array<Matrix, 3> &factors() const { return u_; }
  const DenseTensor3 &core() const { return core_; }
  /// Mode-(d+1) unfolding G_{d+1} of the core.
  const Matrix &core_unfolding(int d) const { return unfoldings_[static_cast<std::size_t>(d)]; }
  const SpdGram &gram(int d) const { return grams_[static_cast<std::size_t>(d)]; }

  /// Metric weight of factor block d: G_d G_d^T or I.
  const SpdGram &weight(int d, Metric metric) const;
  /// Gram used by the block preconditioner of the horizontal projection.
  const SpdGram &preconditioner(int d, Metric metric) const;

  Dims dims() const { return {u_[0].rows(), u_[1].rows(), u_[2].rows()}; }
  MultilinearRank rank() const { return {{u_[0].cols(), u_[1].cols(), u_[2].cols()}}; }

  /// Largest ||U_d^T U_d - I||_F.
  double orthonormality_error() const;
  /// Largest relative deviation of the cached grams from G_d G_d^T.
  double gram_consistency_error() const;

private:
  std::array<Matrix, 3> u_;
  DenseTensor3 core_;
  std::array<Matrix, 3> unfoldings_;
  std::array<SpdGram, 3> grams_;
  std::array<SpdGram, 3> identity_;
  std::array<SpdGram, 3> averaged_;
};

/// (O1, O2, O3), orthogonal r_d x r_d.
struct RotationTuple {
  std::array<Matrix, 3> o;
  static RotationTuple identity(const std::array<Index, 3> &r);
  RotationTuple transposed() const;
};

RotationTuple random_rotation(const std::array<Index, 3> &r, std::uint64_t seed);

double metric(const TuckerPoint &x, const TangentVector &xi, const TangentVector &eta,
              Metric kind = Metric::Preconditioned);
inline double metric_norm(const TuckerPoint &x, const TangentVector &xi,
                          Metric kind = Metric::Preconditioned) {
  return std::sqrt(metric(x, xi, xi, kind));
}

/// (U_d O_d, G x_1 O1^T x_2 O2^T x_3 O3^T). Throws ShapeError if any O_d is
/// not orthogonal to 1e-10.
TuckerPoint rotate_point(const TuckerPoint &x, const RotationTuple &o);
TangentVector rotate_tangent(const TangentVector &xi, const RotationTuple &o);

/// Projection of an ambient vector onto T_x M (metric-orthogonal).
TangentVector project_tangent(const TuckerPoint &x, const AmbientVector &y,
                              Metric kind = Metric::Preconditioned);

/// The vertical vector (U_d Omega_d, -(G x_1 O1 + G x_2 O2 + G x_3 O3)).
TangentVector vertical_vector(const TuckerPoint &x, const SkewTriple &omega);

/// Right-hand side Skew(U_d^T eta_d W_d) + Skew(G_d eta_{G,d}^T) of the
/// coupled Lyapunov system; this is also the map eta -> g(eta, vertical(.)).
SkewTriple horizontal_rhs(const TuckerPoint &x, const TangentVector &eta,
                          Metric kind = Metric::Preconditioned);

CoupledLyapunovSystem coupled_system(const TuckerPoint &x, Metric kind = Metric::Preconditioned);

SkewTriple coupled_lyap_pcg(const TuckerPoint &x, const SkewTriple &rhs,
                            Metric kind = Metric::Preconditioned,
                            const CoupledLyapunovOptions &opts = {});

/// Projection of a tangent vector onto the horizontal space H_x.
TangentVector project_horizontal(const TuckerPoint &x, const TangentVector &eta,
                                 Metric kind = Metric::Preconditioned,
                                 const CoupledLyapunovOptions &opts = {});

/// Max over d of ||A_d - A_d^T||_F / (||W_d zeta_d^T U_d||_F + ||zeta_{G,d} G_d^T||_F)
/// with A_d = W_d zeta_d^T U_d + zeta_{G,d} G_d^T; zero iff zeta is horizontal.
double horizontality_defect(const TuckerPoint &x, const TangentVector &zeta,
                            Metric kind = Metric::Preconditioned);

/// Max over d of ||U_d^T xi_d + xi_d^T U_d||_F.
double tangency_defect(const TuckerPoint &x, const TangentVector &xi);

/// (uf(U_d + step xi_d), G + step xi_G).
TuckerPoint retract(const TuckerPoint &x, const TangentVector &xi, double step);

/// Pi_to(Psi_to(xi)). `to` must be the retraction of x along some direction;
/// x itself is not used beyond documenting where xi lives.
TangentVector transport(const TuckerPoint &x, const TangentVector &eta, const TuckerPoint &to,
                        const TangentVector &xi, Metric kind = Metric::Preconditioned,
                        const CoupledLyapunovOptions &opts = {});

/// U_d = uf(Gaussian n_d x r_d), core entries standard Gaussian.
TuckerPoint random_point(const Dims &dims, const MultilinearRank &rank, std::uint64_t seed);

/// Pi(Psi(Gaussian ambient)) scaled to unit metric norm.
TangentVector random_tangent(const TuckerPoint &x, std::uint64_t seed,
                             Metric kind = Metric::Preconditioned);

AmbientVector random_ambient(const TuckerPoint &x, std::uint64_t seed);

SparseTensor3 tucker_eval_sparse(const TuckerPoint &x, const SparseTensor3 &support);
DenseTensor3 tucker_dense(const TuckerPoint &x);

} // namespace tucker
