#pragma once

#include "tucker/manifold.hpp"

#include <optional>
#include <stdexcept>

namespace tucker {

/// Observed train entries Omega, held-out test entries Gamma and an optional
/// validation set, all for the same dims.
struct CompletionInstance {
  Dims dims{1, 1, 1};
  MultilinearRank rank;
  SparseTensor3 train;
  SparseTensor3 test;
  std::optional<SparseTensor3> validation;

  /// Throws ShapeError when dims disagree, the rank is invalid, train is
  /// empty, or any two of the index sets intersect.
  void validate() const;
};

/// True iff the two sorted supports share no index.
bool disjoint(const SparseTensor3 &a, const SparseTensor3 &b);

class EmptySetError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateDirectionError : public std::runtime_error {
public:
  DegenerateDirectionError() : std::runtime_error("degenerate direction") {}
};

/// S = (2/|Omega|)(P_Omega(X) - P_Omega(X*)), supported exactly on Omega.
struct ResidualTensor {
  SparseTensor3 values;
};

/// (1/|data|) ||P(X) - data||^2 over the entries of `data`.
double mse(const TuckerPoint &x, const SparseTensor3 &data);

/// Training cost (1/|Omega|) ||P_Omega(X) - P_Omega(X*)||_F^2.
double cost(const TuckerPoint &x, const CompletionInstance &inst);

ResidualTensor residual(const TuckerPoint &x, const SparseTensor3 &data);
inline ResidualTensor residual(const TuckerPoint &x, const CompletionInstance &inst) {
  return residual(x, inst.train);
}

/// Partial derivatives of the cost with the factor blocks right-multiplied by
/// W_d^{-1} (the inverse metric weight):
///   (S_1 (U3 kron U2) G_1^T W_1^{-1}, ..., S x_1 U1^T x_2 U2^T x_3 U3^T).
/// The sparse contractions run over the support only, O(|Omega| r1 r2 r3).
AmbientVector scaled_egrad(const TuckerPoint &x, const ResidualTensor &res,
                           Metric kind = Metric::Preconditioned);

/// Euclidean partial derivatives without the metric scaling.
AmbientVector partial_derivatives(const TuckerPoint &x, const ResidualTensor &res);

/// Horizontal lift of the Riemannian gradient, Psi(scaled egrad).
TangentVector riemannian_grad(const TuckerPoint &x, const SparseTensor3 &data,
                              Metric kind = Metric::Preconditioned);
inline TangentVector riemannian_grad(const TuckerPoint &x, const CompletionInstance &inst,
                                     Metric kind = Metric::Preconditioned) {
  return riemannian_grad(x, inst.train, kind);
}

/// Minimizer over s >= 0 of ||a + s b||^2 where a = P_Omega(X) - P_Omega(X*)
/// and b = P_Omega of the first-order change of X along xi. Throws
/// DegenerateDirectionError when b vanishes.
double step_size_guess(const TuckerPoint &x, const SparseTensor3 &data, const TangentVector &xi);
inline double step_size_guess(const TuckerPoint &x, const CompletionInstance &inst,
                              const TangentVector &xi) {
  return step_size_guess(x, inst.train, xi);
}

/// weight * riemannian_grad restricted to one frontal slice, normalized by
/// the slice's own entry count.
TangentVector slice_gradient(const TuckerPoint &x, const SparseTensor3 &slice, double weight = 1.0,
                             Metric kind = Metric::Preconditioned);

} // namespace tucker
