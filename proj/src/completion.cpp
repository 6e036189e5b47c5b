#include "tucker/completion.hpp"

#include <cmath>

namespace tucker {

bool disjoint(const SparseTensor3 &a, const SparseTensor3 &b) {
  const auto ia = a.indices();
  const auto ib = b.indices();
  std::size_t p = 0, q = 0;
  while (p < ia.size() && q < ib.size()) {
    if (ia[p] == ib[q]) return false;
    if (ia[p] < ib[q])
      ++p;
    else
      ++q;
  }
  return true;
}

void CompletionInstance::validate() const {
  rank.validate(dims);
  if (train.empty()) throw ShapeError("instance has an empty train set");
  if (train.dims() != dims || test.dims() != dims ||
      (validation && validation->dims() != dims))
    throw ShapeError("instance sets disagree on dims");
  if (!disjoint(train, test)) throw ShapeError("train and test sets intersect");
  if (validation && (!disjoint(train, *validation) || !disjoint(test, *validation)))
    throw ShapeError("validation set intersects train or test");
}

double mse(const TuckerPoint &x, const SparseTensor3 &data) {
  if (data.empty()) throw EmptySetError("mse: empty entry set");
  const SparseTensor3 pred = tucker_eval_sparse(x, data);
  double s = 0.0;
  for (std::size_t k = 0; k < data.nnz(); ++k) {
    const double e = pred.value(k) - data.value(k);
    s += e * e;
  }
  return s / static_cast<double>(data.nnz());
}

double cost(const TuckerPoint &x, const CompletionInstance &inst) {
  if (inst.train.empty()) throw EmptySetError("cost: empty train set");
  return mse(x, inst.train);
}

ResidualTensor residual(const TuckerPoint &x, const SparseTensor3 &data) {
  if (data.empty()) throw EmptySetError("residual: empty train set");
  const SparseTensor3 pred = tucker_eval_sparse(x, data);
  const double scale = 2.0 / static_cast<double>(data.nnz());
  std::vector<double> s(data.nnz());
  for (std::size_t k = 0; k < data.nnz(); ++k) s[k] = scale * (pred.value(k) - data.value(k));
  return {data.with_values(std::move(s))};
}

AmbientVector partial_derivatives(const TuckerPoint &x, const ResidualTensor &res) {
  const SparseTensor3 &s = res.values;
  const Dims dims = x.dims();
  if (s.dims() != dims) throw ShapeError("residual dims do not match the point");
  const auto [r1, r2, r3] = x.rank().r;
  const Matrix u1t = x.u(0).transpose(), u2t = x.u(1).transpose(), u3t = x.u(2).transpose();

  // Column i of t1 is row i of S_1 (U3 kron U2); likewise for t2, t3.
  Matrix t1 = Matrix::Zero(r2 * r3, dims[0]);
  Matrix t2 = Matrix::Zero(r1 * r3, dims[1]);
  Matrix t3 = Matrix::Zero(r1 * r2, dims[2]);
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    const double v = s.value(e);
    if (v == 0.0) continue;
    const Coord &c = s.index(e);
    const double *a = u1t.col(c[0]).data();
    const double *b = u2t.col(c[1]).data();
    const double *g = u3t.col(c[2]).data();
    double *p1 = t1.col(c[0]).data();
    double *p2 = t2.col(c[1]).data();
    double *p3 = t3.col(c[2]).data();
    for (Index k = 0; k < r3; ++k) {
      const double vg = v * g[k];
      for (Index j = 0; j < r2; ++j) p1[j + r2 * k] += vg * b[j];
      for (Index i = 0; i < r1; ++i) p2[i + r1 * k] += vg * a[i];
    }
    for (Index j = 0; j < r2; ++j) {
      const double vb = v * b[j];
      for (Index i = 0; i < r1; ++i) p3[i + r1 * j] += vb * a[i];
    }
  }

  AmbientVector out;
  out.u[0] = t1.transpose() * x.core_unfolding(0).transpose();
  out.u[1] = t2.transpose() * x.core_unfolding(1).transpose();
  out.u[2] = t3.transpose() * x.core_unfolding(2).transpose();
  // Mode-1 unfolding of S x_1 U1^T x_2 U2^T x_3 U3^T is U1^T S_1 (U3 kron U2).
  out.core = fold(u1t * t1.transpose(), 1, Dims{r1, r2, r3});
  return out;
}

AmbientVector scaled_egrad(const TuckerPoint &x, const ResidualTensor &res, Metric kind) {
  AmbientVector g = partial_derivatives(x, res);
  if (kind == Metric::Preconditioned)
    for (int d = 0; d < 3; ++d) g.u[d] = x.gram(d).solve_right(g.u[d]);
  return g;
}

TangentVector riemannian_grad(const TuckerPoint &x, const SparseTensor3 &data, Metric kind) {
  return project_tangent(x, scaled_egrad(x, residual(x, data), kind), kind);
}

double step_size_guess(const TuckerPoint &x, const SparseTensor3 &data, const TangentVector &xi) {
  if (data.empty()) throw EmptySetError("step_size_guess: empty train set");
  const auto [r1, r2, r3] = x.rank().r;
  const Matrix u1t = x.u(0).transpose(), u2t = x.u(1).transpose(), u3t = x.u(2).transpose();
  const Matrix z1t = xi.u[0].transpose(), z2t = xi.u[1].transpose(), z3t = xi.u[2].transpose();
  const double *g = x.core().values().data();
  const double *gz = xi.core.values().data();
  const Index r23 = r2 * r3;

  double ab = 0.0, bb = 0.0;
  std::vector<double> w(static_cast<std::size_t>(r23)), wc(w.size());
  for (std::size_t e = 0; e < data.nnz(); ++e) {
    const Coord &c = data.index(e);
    const double *a = u1t.col(c[0]).data();
    const double *za = z1t.col(c[0]).data();
    const double *b = u2t.col(c[1]).data();
    const double *zb = z2t.col(c[1]).data();
    const double *cc = u3t.col(c[2]).data();
    const double *zc = z3t.col(c[2]).data();
    for (Index jk = 0; jk < r23; ++jk) {
      const double *gcol = g + jk * r1;
      const double *gzcol = gz + jk * r1;
      double s = 0.0, sz = 0.0, sc = 0.0;
      for (Index i = 0; i < r1; ++i) {
        s += a[i] * gcol[i];
        sz += za[i] * gcol[i];
        sc += a[i] * gzcol[i];
      }
      w[jk] = s;
      // First-order terms along xi_U1 and xi_G share the (U2, U3) contraction.
      wc[jk] = sz + sc;
    }
    double pred = 0.0, lin = 0.0;
    for (Index k = 0; k < r3; ++k) {
      double s = 0.0, s1 = 0.0, s2 = 0.0;
      for (Index j = 0; j < r2; ++j) {
        const double wjk = w[j + r2 * k];
        s += b[j] * wjk;
        s1 += b[j] * wc[j + r2 * k];
        s2 += zb[j] * wjk;
      }
      pred += cc[k] * s;
      lin += cc[k] * (s1 + s2) + zc[k] * s;
    }
    const double res = pred - data.value(e);
    ab += res * lin;
    bb += lin * lin;
  }
  if (!(bb > 0.0)) throw DegenerateDirectionError();
  return std::max(0.0, -ab / bb);
}

TangentVector slice_gradient(const TuckerPoint &x, const SparseTensor3 &slice, double weight,
                             Metric kind) {
  if (slice.empty()) throw EmptySetError("slice_gradient: empty slice");
  const auto k = slice.index(0)[2];
  for (const Coord &c : slice.indices())
    if (c[2] != k) throw ShapeError("slice_gradient: entries span more than one frontal slice");
  TangentVector g = riemannian_grad(x, slice, kind);
  if (weight != 1.0) g *= weight;
  return g;
}

} // namespace tucker
