#include "tucker/manifold.hpp"

#include <random>

namespace tucker {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

DenseTensor3 gaussian_tensor(const Dims &dims, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  DenseTensor3 t(dims);
  for (double &v : t.values()) v = normal(rng);
  return t;
}

void check_rotation(const RotationTuple &o, const std::array<Index, 3> &r) {
  for (int d = 0; d < 3; ++d) {
    const Matrix &od = o.o[d];
    if (od.rows() != r[d] || od.cols() != r[d])
      throw ShapeError("rotation block " + std::to_string(d + 1) + " has the wrong size");
    if ((od.transpose() * od - Matrix::Identity(r[d], r[d])).norm() > 1e-10)
      throw ShapeError("rotation block " + std::to_string(d + 1) + " is not orthogonal");
  }
}

DenseTensor3 counter_rotate(const DenseTensor3 &core, const RotationTuple &o) {
  return mode_product(mode_product(mode_product(core, o.o[0].transpose(), 1),
                                   o.o[1].transpose(), 2),
                      o.o[2].transpose(), 3);
}

/// G x_1 O1 + G x_2 O2 + G x_3 O3
DenseTensor3 core_action(const DenseTensor3 &core, const SkewTriple &omega) {
  DenseTensor3 v = mode_product(core, omega[0], 1);
  v += mode_product(core, omega[1], 2);
  v += mode_product(core, omega[2], 3);
  return v;
}

} // namespace

// ---------------------------------------------------------------- TuckerPoint

TuckerPoint::TuckerPoint(std::array<Matrix, 3> u, DenseTensor3 core)
    : u_(std::move(u)), core_(std::move(core)) {
  for (int d = 0; d < 3; ++d) {
    if (u_[d].cols() != core_.dims()[d])
      throw ShapeError("factor " + std::to_string(d + 1) + " column count does not match core");
    if (u_[d].cols() > u_[d].rows())
      throw ShapeError("factor " + std::to_string(d + 1) + " has more columns than rows");
  }
  rank().validate(dims());
  if (orthonormality_error() > 1e-10) throw ShapeError("factor matrices are not orthonormal");
  for (int d = 0; d < 3; ++d) {
    unfoldings_[d] = unfold(core_, d + 1);
    grams_[d] = SpdGram(unfoldings_[d] * unfoldings_[d].transpose());
    identity_[d] = SpdGram::identity(core_.dims()[d]);
    averaged_[d] = grams_[d].averaged_with_identity();
  }
}

const SpdGram &TuckerPoint::weight(int d, Metric metric) const {
  return metric == Metric::Preconditioned ? grams_[d] : identity_[d];
}

// The diagonal block of the coupled operator is P X + X P with
// P = (W + G G^T)/2, which is G G^T itself for the scaled metric.
const SpdGram &TuckerPoint::preconditioner(int d, Metric metric) const {
  return metric == Metric::Preconditioned ? grams_[d] : averaged_[d];
}

double TuckerPoint::orthonormality_error() const {
  double err = 0.0;
  for (const auto &m : u_)
    err = std::max(err, (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm());
  return err;
}

double TuckerPoint::gram_consistency_error() const {
  double err = 0.0;
  for (int d = 0; d < 3; ++d) {
    const Matrix fresh = unfold(core_, d + 1) * unfold(core_, d + 1).transpose();
    const Matrix &q = grams_[d].eigenvectors();
    const Matrix rebuilt = q * grams_[d].eigenvalues().asDiagonal() * q.transpose();
    err = std::max(err, (rebuilt - fresh).norm() / fresh.norm());
    err = std::max(err, (grams_[d].matrix() - fresh).norm() / fresh.norm());
  }
  return err;
}

// ---------------------------------------------------------------- rotations

RotationTuple RotationTuple::identity(const std::array<Index, 3> &r) {
  RotationTuple t;
  for (int d = 0; d < 3; ++d) t.o[d] = Matrix::Identity(r[d], r[d]);
  return t;
}

RotationTuple RotationTuple::transposed() const {
  RotationTuple t;
  for (int d = 0; d < 3; ++d) t.o[d] = o[d].transpose();
  return t;
}

RotationTuple random_rotation(const std::array<Index, 3> &r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RotationTuple t;
  for (int d = 0; d < 3; ++d) t.o[d] = polar_factor(gaussian_matrix(r[d], r[d], rng));
  return t;
}

TuckerPoint rotate_point(const TuckerPoint &x, const RotationTuple &o) {
  check_rotation(o, x.rank().r);
  std::array<Matrix, 3> u;
  for (int d = 0; d < 3; ++d) u[d] = x.u(d) * o.o[d];
  return TuckerPoint(std::move(u), counter_rotate(x.core(), o));
}

TangentVector rotate_tangent(const TangentVector &xi, const RotationTuple &o) {
  check_rotation(o, xi.core.dims());
  TangentVector out;
  for (int d = 0; d < 3; ++d) out.u[d] = xi.u[d] * o.o[d];
  out.core = counter_rotate(xi.core, o);
  return out;
}

// ---------------------------------------------------------------- metric and projectors

double metric(const TuckerPoint &x, const TangentVector &xi, const TangentVector &eta,
              Metric kind) {
  double s = xi.core.inner(eta.core);
  for (int d = 0; d < 3; ++d) {
    if (xi.u[d].rows() != x.u(d).rows() || xi.u[d].cols() != x.u(d).cols() ||
        eta.u[d].rows() != x.u(d).rows() || eta.u[d].cols() != x.u(d).cols())
      throw ShapeError("metric: block " + std::to_string(d + 1) + " shape mismatch");
    s += xi.u[d].cwiseProduct(eta.u[d] * x.weight(d, kind).matrix()).sum();
  }
  return s;
}

TangentVector project_tangent(const TuckerPoint &x, const AmbientVector &y, Metric kind) {
  TangentVector out;
  for (int d = 0; d < 3; ++d) {
    const Matrix &u = x.u(d);
    if (y.u[d].rows() != u.rows() || y.u[d].cols() != u.cols())
      throw ShapeError("project_tangent: block " + std::to_string(d + 1) + " shape mismatch");
    const SpdGram &w = x.weight(d, kind);
    // S solves S W + W S = W (U^T Y + Y^T U) W; form S W^{-1} in the
    // eigenbasis of W, where its entries are l_i / (l_i + l_j) * a_ij.
    const Matrix uty = u.transpose() * y.u[d];
    const Matrix &q = w.eigenvectors();
    const Vector &l = w.eigenvalues();
    Matrix a = q.transpose() * (uty + uty.transpose()) * q;
    for (Index j = 0; j < a.cols(); ++j)
      for (Index i = 0; i < a.rows(); ++i) a(i, j) *= l(i) / (l(i) + l(j));
    out.u[d] = y.u[d] - u * (q * a * q.transpose());
  }
  if (y.core.dims() != x.core().dims()) throw ShapeError("project_tangent: core shape mismatch");
  out.core = y.core;
  return out;
}

TangentVector vertical_vector(const TuckerPoint &x, const SkewTriple &omega) {
  TangentVector v;
  for (int d = 0; d < 3; ++d) v.u[d] = x.u(d) * omega[d];
  v.core = core_action(x.core(), omega);
  v.core *= -1.0;
  return v;
}

SkewTriple horizontal_rhs(const TuckerPoint &x, const TangentVector &eta, Metric kind) {
  SkewTriple rhs;
  for (int d = 0; d < 3; ++d) {
    const Matrix eta_core = unfold(eta.core, d + 1);
    rhs[d] = skew(x.u(d).transpose() * eta.u[d] * x.weight(d, kind).matrix()) +
             skew(x.core_unfolding(d) * eta_core.transpose());
  }
  return rhs;
}

CoupledLyapunovSystem coupled_system(const TuckerPoint &x, Metric kind) {
  CoupledLyapunovSystem sys;
  sys.core = &x.core();
  for (int d = 0; d < 3; ++d) {
    sys.core_unfoldings[d] = x.core_unfolding(d);
    sys.weight[d] = &x.weight(d, kind);
    sys.precond[d] = &x.preconditioner(d, kind);
  }
  return sys;
}

SkewTriple coupled_lyap_pcg(const TuckerPoint &x, const SkewTriple &rhs, Metric kind,
                            const CoupledLyapunovOptions &opts) {
  return coupled_lyap_pcg(coupled_system(x, kind), rhs, opts);
}

TangentVector project_horizontal(const TuckerPoint &x, const TangentVector &eta, Metric kind,
                                 const CoupledLyapunovOptions &opts) {
  const SkewTriple omega = coupled_lyap_pcg(x, horizontal_rhs(x, eta, kind), kind, opts);
  TangentVector out;
  for (int d = 0; d < 3; ++d) out.u[d] = eta.u[d] - x.u(d) * omega[d];
  out.core = eta.core + core_action(x.core(), omega);
  return out;
}

double horizontality_defect(const TuckerPoint &x, const TangentVector &zeta, Metric kind) {
  double worst = 0.0;
  for (int d = 0; d < 3; ++d) {
    const Matrix left = x.weight(d, kind).matrix() * zeta.u[d].transpose() * x.u(d);
    const Matrix right = unfold(zeta.core, d + 1) * x.core_unfolding(d).transpose();
    const Matrix a = left + right;
    const double scale = left.norm() + right.norm();
    if (scale > 0.0) worst = std::max(worst, (a - a.transpose()).norm() / scale);
  }
  return worst;
}

double tangency_defect(const TuckerPoint &x, const TangentVector &xi) {
  double worst = 0.0;
  for (int d = 0; d < 3; ++d) {
    const Matrix m = x.u(d).transpose() * xi.u[d];
    worst = std::max(worst, (m + m.transpose()).norm());
  }
  return worst;
}

// ---------------------------------------------------------------- retraction, transport

TuckerPoint retract(const TuckerPoint &x, const TangentVector &xi, double step) {
  std::array<Matrix, 3> u;
  for (int d = 0; d < 3; ++d) u[d] = polar_factor(x.u(d) + step * xi.u[d]);
  return TuckerPoint(std::move(u), x.core() + step * xi.core);
}

TangentVector transport(const TuckerPoint & /*x*/, const TangentVector & /*eta*/,
                        const TuckerPoint &to, const TangentVector &xi, Metric kind,
                        const CoupledLyapunovOptions &opts) {
  return project_horizontal(to, project_tangent(to, as_ambient(xi), kind), kind, opts);
}

// ---------------------------------------------------------------- random generation

TuckerPoint random_point(const Dims &dims, const MultilinearRank &rank, std::uint64_t seed) {
  rank.validate(dims);
  std::mt19937_64 rng(seed);
  std::array<Matrix, 3> u;
  for (int d = 0; d < 3; ++d) u[d] = polar_factor(gaussian_matrix(dims[d], rank[d], rng));
  return TuckerPoint(std::move(u), gaussian_tensor(Dims{rank[0], rank[1], rank[2]}, rng));
}

AmbientVector random_ambient(const TuckerPoint &x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AmbientVector y;
  for (int d = 0; d < 3; ++d) y.u[d] = gaussian_matrix(x.u(d).rows(), x.u(d).cols(), rng);
  y.core = gaussian_tensor(x.core().dims(), rng);
  return y;
}

TangentVector random_tangent(const TuckerPoint &x, std::uint64_t seed, Metric kind) {
  TangentVector t = project_horizontal(x, project_tangent(x, random_ambient(x, seed), kind), kind);
  t *= 1.0 / metric_norm(x, t, kind);
  return t;
}

SparseTensor3 tucker_eval_sparse(const TuckerPoint &x, const SparseTensor3 &support) {
  return tucker_eval_sparse(x.core(), x.factors(), support);
}

DenseTensor3 tucker_dense(const TuckerPoint &x) { return tucker_dense(x.core(), x.factors()); }

} // namespace tucker
