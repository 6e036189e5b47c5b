#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tucker {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tensor dimensions (n1, n2, n3).
using Dims = std::array<Index, 3>;

/// A 0-based index triple into a 3-order tensor.
using Coord = std::array<std::int32_t, 3>;

class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by the text readers; the message carries the offending line number.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string &what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

Index total_size(const Dims &dims);

/// Multilinear rank (r1, r2, r3).
struct MultilinearRank {
  std::array<Index, 3> r{1, 1, 1};

  Index operator[](int d) const { return r[static_cast<std::size_t>(d)]; }
  bool operator==(const MultilinearRank &) const = default;

  /// Throws ShapeError unless r_d >= 1, r_d <= n_d and r_d <= r_e * r_f.
  void validate(const Dims &dims) const;
  void validate() const;
};

/// Dense 3-order tensor stored with the first index fastest.
///
/// The mode-d unfolding follows the Kolda-Bader convention: column index of
/// entry (i1, i2, i3) in X_1 is i2 + n2*i3, in X_2 is i1 + n1*i3 and in X_3 is
/// i1 + n1*i2. With this ordering X_1 = U1 G_1 (U3 kron U2)^T for a Tucker
/// tensor, and X_1 is the storage buffer itself.
class DenseTensor3 {
public:
  DenseTensor3() : DenseTensor3(Dims{1, 1, 1}) {}
  explicit DenseTensor3(const Dims &dims);
  DenseTensor3(const Dims &dims, std::vector<double> values);

  static DenseTensor3 zeros(const Dims &dims) { return DenseTensor3(dims); }

  const Dims &dims() const { return dims_; }
  Index dim(int mode) const { return dims_[static_cast<std::size_t>(mode - 1)]; }
  Index size() const { return static_cast<Index>(values_.size()); }

  double &operator()(Index i1, Index i2, Index i3) {
    return values_[static_cast<std::size_t>(i1 + dims_[0] * (i2 + dims_[1] * i3))];
  }
  double operator()(Index i1, Index i2, Index i3) const {
    return values_[static_cast<std::size_t>(i1 + dims_[0] * (i2 + dims_[1] * i3))];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Zero-copy view of the mode-1 unfolding.
  Eigen::Map<const Matrix> mode1_view() const {
    return {values_.data(), dims_[0], dims_[1] * dims_[2]};
  }

  double squared_norm() const;
  double norm() const;
  double inner(const DenseTensor3 &other) const;

  DenseTensor3 &operator+=(const DenseTensor3 &o);
  DenseTensor3 &operator-=(const DenseTensor3 &o);
  DenseTensor3 &operator*=(double s);
  friend DenseTensor3 operator+(DenseTensor3 a, const DenseTensor3 &b) { return a += b; }
  friend DenseTensor3 operator-(DenseTensor3 a, const DenseTensor3 &b) { return a -= b; }
  friend DenseTensor3 operator*(double s, DenseTensor3 a) { return a *= s; }
  friend DenseTensor3 operator*(DenseTensor3 a, double s) { return a *= s; }
  bool operator==(const DenseTensor3 &) const = default;

private:
  void require_same_dims(const DenseTensor3 &o) const;

  Dims dims_;
  std::vector<double> values_;
};

/// Mode-d unfolding (mode in {1,2,3}), n_d x (product of the other dims).
Matrix unfold(const DenseTensor3 &t, int mode);

/// Exact inverse of unfold.
DenseTensor3 fold(const Matrix &m, int mode, const Dims &dims);

/// t x_d v, i.e. fold(v * unfold(t, d)).
DenseTensor3 mode_product(const DenseTensor3 &t, const Matrix &v, int mode);

/// core x_1 u1 x_2 u2 x_3 u3 as a dense tensor.
DenseTensor3 tucker_dense(const DenseTensor3 &core, const std::array<Matrix, 3> &u);

struct SparseEntry {
  Coord index;
  double value;
};

/// Sorted coordinate-format sparse tensor (indices 0-based in memory).
///
/// The index list is shared between tensors with the same support, so
/// with_values() is cheap; residuals and predictions reuse the data support.
class SparseTensor3 {
public:
  SparseTensor3() : SparseTensor3(Dims{1, 1, 1}, {}) {}
  /// Sorts entries and rejects duplicates or out-of-range indices.
  SparseTensor3(const Dims &dims, std::vector<SparseEntry> entries);

  const Dims &dims() const { return dims_; }
  std::size_t nnz() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const Coord &index(std::size_t k) const { return (*index_)[k]; }
  std::span<const Coord> indices() const { return *index_; }
  std::span<const double> values() const { return values_; }
  double value(std::size_t k) const { return values_[k]; }

  /// Same support, new values (size must equal nnz()).
  SparseTensor3 with_values(std::vector<double> values) const;

  /// Entries whose third index equals slice (0-based).
  SparseTensor3 frontal_slice(Index slice) const;

  double squared_norm() const;
  std::vector<SparseEntry> entries() const;

  bool same_support(const SparseTensor3 &o) const;
  bool operator==(const SparseTensor3 &o) const;

private:
  SparseTensor3(const Dims &dims, std::shared_ptr<const std::vector<Coord>> index,
                std::vector<double> values)
      : dims_(dims), index_(std::move(index)), values_(std::move(values)) {}

  Dims dims_;
  std::shared_ptr<const std::vector<Coord>> index_;
  std::vector<double> values_;
};

/// Text format: "n1 n2 n3 nnz" then nnz lines "i1 i2 i3 value", 1-based.
SparseTensor3 read_sparse(std::istream &in);
SparseTensor3 read_sparse(const std::filesystem::path &path);
void write_sparse(std::ostream &out, const SparseTensor3 &t);
void write_sparse(const std::filesystem::path &path, const SparseTensor3 &t);

SparseTensor3 to_sparse(const DenseTensor3 &t);

/// P_Omega(core x_1 u1 x_2 u2 x_3 u3) on the support of `support` (its values
/// are ignored), without forming the dense tensor. O(nnz * r1 r2 r3).
SparseTensor3 tucker_eval_sparse(const DenseTensor3 &core, const std::array<Matrix, 3> &u,
                                 const SparseTensor3 &support);

} // namespace tucker
