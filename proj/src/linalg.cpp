#include "tucker/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tucker {

Matrix sym(const Matrix &m) {
  if (m.rows() != m.cols()) throw ShapeError("sym: matrix must be square");
  return 0.5 * (m + m.transpose());
}

Matrix skew(const Matrix &m) {
  if (m.rows() != m.cols()) throw ShapeError("skew: matrix must be square");
  return 0.5 * (m - m.transpose());
}

// ---------------------------------------------------------------- SpdGram

SpdGram::SpdGram(const Matrix &m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ShapeError("SpdGram: matrix must be square");
  m_ = sym(m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m_);
  if (eig.info() != Eigen::Success) throw RankDeficientError("SpdGram: eigendecomposition failed");
  q_ = eig.eigenvectors();
  lambda_ = eig.eigenvalues();
  const double lmax = lambda_.maxCoeff();
  const double lmin = lambda_.minCoeff();
  if (!(lmax > 0.0) || !(lmin > 1e-13 * lmax))
    throw RankDeficientError("Gram matrix is not positive definite (lambda_min = " +
                             std::to_string(lmin) + ", lambda_max = " + std::to_string(lmax) + ")");
}

SpdGram SpdGram::identity(Index r) {
  SpdGram g;
  g.m_ = Matrix::Identity(r, r);
  g.q_ = Matrix::Identity(r, r);
  g.lambda_ = Vector::Ones(r);
  return g;
}

SpdGram SpdGram::averaged_with_identity() const {
  SpdGram g;
  g.m_ = 0.5 * (Matrix::Identity(size(), size()) + m_);
  g.q_ = q_;
  g.lambda_ = 0.5 * (Vector::Ones(size()) + lambda_);
  return g;
}

Matrix SpdGram::solve_right(const Matrix &a) const {
  if (a.cols() != size()) throw ShapeError("SpdGram::solve_right: size mismatch");
  return ((a * q_) * lambda_.cwiseInverse().asDiagonal()) * q_.transpose();
}

Matrix SpdGram::solve_left(const Matrix &a) const {
  if (a.rows() != size()) throw ShapeError("SpdGram::solve_left: size mismatch");
  return q_ * (lambda_.cwiseInverse().asDiagonal() * (q_.transpose() * a));
}

Matrix lyap_spd(const SpdGram &g, const Matrix &c) {
  const Index r = g.size();
  if (c.rows() != r || c.cols() != r) throw ShapeError("lyap_spd: size mismatch");
  const Matrix &q = g.eigenvectors();
  const Vector &l = g.eigenvalues();
  Matrix ct = q.transpose() * c * q;
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < r; ++i) ct(i, j) /= (l(i) + l(j));
  return q * ct * q.transpose();
}

Matrix polar_factor(const Matrix &a) {
  if (a.cols() > a.rows() || a.cols() == 0)
    throw ShapeError("polar_factor: expected a tall n x r matrix with r <= n");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  const double smax = s.maxCoeff();
  const double smin = s.minCoeff();
  if (!std::isfinite(smax) || !(smin > 1e-12 * smax))
    throw RankDeficientError("polar_factor: matrix is numerically rank deficient");
  return svd.matrixU() * svd.matrixV().transpose();
}

// ---------------------------------------------------------------- PCG

PcgResult pcg_linear(const LinearOperator &op, const LinearOperator &precond, const Vector &b,
                     double tol, int max_iter) {
  PcgResult out;
  out.x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return out;

  Vector r = b;
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    const Vector ap = op(p);
    const double curv = p.dot(ap);
    if (!(curv > 0.0))
      throw ConvergenceError("pcg_linear: non-positive curvature at iteration " +
                                 std::to_string(it + 1),
                             r.norm() / bnorm, it + 1);
    const double alpha = rz / curv;
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it + 1;
    out.relative_residual = r.norm() / bnorm;
    if (out.relative_residual <= tol) return out;
    z = precond(r);
    const double rz_next = r.dot(z);
    if (!(rz_next > 0.0))
      throw ConvergenceError("pcg_linear: preconditioner not positive definite at iteration " +
                                 std::to_string(it + 1),
                             out.relative_residual, it + 1);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw ConvergenceError("pcg_linear: no convergence after " + std::to_string(max_iter) +
                             " iterations (relative residual " +
                             std::to_string(out.relative_residual) + ")",
                         out.relative_residual, max_iter);
}

// ---------------------------------------------------------------- coupled Lyapunov

SkewTriple SkewTriple::zeros(const std::array<Index, 3> &r) {
  SkewTriple t;
  for (int d = 0; d < 3; ++d) t[d] = Matrix::Zero(r[d], r[d]);
  return t;
}

double SkewTriple::inner(const SkewTriple &o) const {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (*this)[d].cwiseProduct(o[d]).sum();
  return s;
}

SkewTriple CoupledLyapunovSystem::apply(const SkewTriple &omega) const {
  DenseTensor3 v = mode_product(*core, omega[0], 1);
  v += mode_product(*core, omega[1], 2);
  v += mode_product(*core, omega[2], 3);
  SkewTriple out;
  for (int d = 0; d < 3; ++d) {
    const Matrix vd = unfold(v, d + 1);
    out[d] = skew(omega[d] * weight[d]->matrix()) -
             skew(core_unfoldings[d] * vd.transpose());
  }
  return out;
}

SkewTriple CoupledLyapunovSystem::apply_preconditioner(const SkewTriple &residual) const {
  SkewTriple out;
  for (int d = 0; d < 3; ++d) out[d] = skew(lyap_spd(*precond[d], residual[d]));
  return out;
}

namespace {

Vector pack(const SkewTriple &t) {
  Index n = 0;
  for (int d = 0; d < 3; ++d) n += t[d].size();
  Vector v(n);
  Index off = 0;
  for (int d = 0; d < 3; ++d) {
    v.segment(off, t[d].size()) = t[d].reshaped();
    off += t[d].size();
  }
  return v;
}

SkewTriple unpack(const Vector &v, const std::array<Index, 3> &r) {
  SkewTriple t;
  Index off = 0;
  for (int d = 0; d < 3; ++d) {
    t[d] = v.segment(off, r[d] * r[d]).reshaped(r[d], r[d]);
    off += r[d] * r[d];
  }
  return t;
}

} // namespace

SkewTriple coupled_lyap_pcg(const CoupledLyapunovSystem &sys, const SkewTriple &rhs,
                            const CoupledLyapunovOptions &opts) {
  const std::array<Index, 3> r{rhs[0].rows(), rhs[1].rows(), rhs[2].rows()};
  for (int d = 0; d < 3; ++d) {
    if (rhs[d].cols() != r[d] || sys.core->dims()[d] != r[d] || sys.weight[d]->size() != r[d] ||
        sys.precond[d]->size() != r[d])
      throw ShapeError("coupled_lyap_pcg: size mismatch in block " + std::to_string(d + 1));
  }
  const LinearOperator op = [&](const Vector &x) { return pack(sys.apply(unpack(x, r))); };
  const LinearOperator pre = [&](const Vector &x) {
    return pack(sys.apply_preconditioner(unpack(x, r)));
  };
  try {
    return unpack(pcg_linear(op, pre, pack(rhs), opts.tol, opts.max_iter).x, r);
  } catch (const ConvergenceError &err) {
    throw ConvergenceError(std::string("coupled Lyapunov solve failed: ") + err.what(),
                           err.residual(), err.iterations());
  }
}

} // namespace tucker
