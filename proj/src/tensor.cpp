#include "tucker/tensor.hpp"

#include "tucker/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tucker {

Index total_size(const Dims &dims) { return dims[0] * dims[1] * dims[2]; }

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw ShapeError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

void check_dims(const Dims &dims) {
  for (Index n : dims)
    if (n < 1) throw ShapeError("tensor dimensions must be positive");
}

std::string dims_string(const Dims &d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

} // namespace

void MultilinearRank::validate() const {
  for (int d = 0; d < 3; ++d)
    if (r[d] < 1) throw ShapeError("ranks must be positive");
  for (int d = 0; d < 3; ++d) {
    const Index other = r[(d + 1) % 3] * r[(d + 2) % 3];
    if (r[d] > other)
      throw ShapeError("rank r" + std::to_string(d + 1) + " exceeds the product of the other two");
  }
}

void MultilinearRank::validate(const Dims &dims) const {
  validate();
  for (int d = 0; d < 3; ++d)
    if (r[d] > dims[d])
      throw ShapeError("rank r" + std::to_string(d + 1) + " exceeds n" + std::to_string(d + 1));
}

// ---------------------------------------------------------------- dense

DenseTensor3::DenseTensor3(const Dims &dims) : dims_(dims) {
  check_dims(dims);
  values_.assign(static_cast<std::size_t>(total_size(dims)), 0.0);
}

DenseTensor3::DenseTensor3(const Dims &dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  check_dims(dims);
  if (static_cast<Index>(values_.size()) != total_size(dims))
    throw ShapeError("value count does not match dims " + dims_string(dims));
}

void DenseTensor3::require_same_dims(const DenseTensor3 &o) const {
  if (dims_ != o.dims_)
    throw ShapeError("dims mismatch: " + dims_string(dims_) + " vs " + dims_string(o.dims_));
}

double DenseTensor3::squared_norm() const {
  return std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0);
}

double DenseTensor3::norm() const { return std::sqrt(squared_norm()); }

double DenseTensor3::inner(const DenseTensor3 &other) const {
  require_same_dims(other);
  return std::inner_product(values_.begin(), values_.end(), other.values_.begin(), 0.0);
}

DenseTensor3 &DenseTensor3::operator+=(const DenseTensor3 &o) {
  require_same_dims(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

DenseTensor3 &DenseTensor3::operator-=(const DenseTensor3 &o) {
  require_same_dims(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

DenseTensor3 &DenseTensor3::operator*=(double s) {
  for (double &v : values_) v *= s;
  return *this;
}

Matrix unfold(const DenseTensor3 &t, int mode) {
  check_mode(mode);
  const auto [n1, n2, n3] = t.dims();
  if (mode == 1) return t.mode1_view();
  Matrix m(t.dim(mode), total_size(t.dims()) / t.dim(mode));
  for (Index k = 0; k < n3; ++k)
    for (Index j = 0; j < n2; ++j)
      for (Index i = 0; i < n1; ++i) {
        if (mode == 2)
          m(j, i + n1 * k) = t(i, j, k);
        else
          m(k, i + n1 * j) = t(i, j, k);
      }
  return m;
}

DenseTensor3 fold(const Matrix &m, int mode, const Dims &dims) {
  check_mode(mode);
  check_dims(dims);
  const auto [n1, n2, n3] = dims;
  const Index rows = dims[static_cast<std::size_t>(mode - 1)];
  if (m.rows() != rows || m.cols() != total_size(dims) / rows)
    throw ShapeError("fold: matrix shape does not match mode-" + std::to_string(mode) +
                     " unfolding of " + dims_string(dims));
  DenseTensor3 t(dims);
  for (Index k = 0; k < n3; ++k)
    for (Index j = 0; j < n2; ++j)
      for (Index i = 0; i < n1; ++i) {
        switch (mode) {
        case 1: t(i, j, k) = m(i, j + n2 * k); break;
        case 2: t(i, j, k) = m(j, i + n1 * k); break;
        default: t(i, j, k) = m(k, i + n1 * j); break;
        }
      }
  return t;
}

DenseTensor3 mode_product(const DenseTensor3 &t, const Matrix &v, int mode) {
  check_mode(mode);
  if (v.cols() != t.dim(mode))
    throw ShapeError("mode_product: matrix has " + std::to_string(v.cols()) +
                     " columns, tensor mode-" + std::to_string(mode) + " size is " +
                     std::to_string(t.dim(mode)));
  Dims out = t.dims();
  out[static_cast<std::size_t>(mode - 1)] = v.rows();
  if (mode == 1) {
    Matrix prod = v * t.mode1_view();
    return DenseTensor3(out, std::vector<double>(prod.data(), prod.data() + prod.size()));
  }
  return fold(v * unfold(t, mode), mode, out);
}

DenseTensor3 tucker_dense(const DenseTensor3 &core, const std::array<Matrix, 3> &u) {
  return mode_product(mode_product(mode_product(core, u[0], 1), u[1], 2), u[2], 3);
}

// ---------------------------------------------------------------- sparse

SparseTensor3::SparseTensor3(const Dims &dims, std::vector<SparseEntry> entries) : dims_(dims) {
  check_dims(dims);
  for (const auto &e : entries)
    for (int d = 0; d < 3; ++d)
      if (e.index[d] < 0 || e.index[d] >= dims[d])
        throw ShapeError("sparse index out of range for dims " + dims_string(dims));
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry &a, const SparseEntry &b) { return a.index < b.index; });
  for (std::size_t k = 1; k < entries.size(); ++k)
    if (entries[k].index == entries[k - 1].index)
      throw ShapeError("duplicate sparse index (" + std::to_string(entries[k].index[0] + 1) + "," +
                       std::to_string(entries[k].index[1] + 1) + "," +
                       std::to_string(entries[k].index[2] + 1) + ")");
  auto index = std::make_shared<std::vector<Coord>>();
  index->reserve(entries.size());
  values_.reserve(entries.size());
  for (const auto &e : entries) {
    index->push_back(e.index);
    values_.push_back(e.value);
  }
  index_ = std::move(index);
}

SparseTensor3 SparseTensor3::with_values(std::vector<double> values) const {
  if (values.size() != nnz()) throw ShapeError("with_values: size mismatch");
  return SparseTensor3(dims_, index_, std::move(values));
}

SparseTensor3 SparseTensor3::frontal_slice(Index slice) const {
  std::vector<SparseEntry> out;
  for (std::size_t k = 0; k < nnz(); ++k)
    if (index(k)[2] == slice) out.push_back({index(k), values_[k]});
  return SparseTensor3(dims_, std::move(out));
}

double SparseTensor3::squared_norm() const {
  return std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0);
}

std::vector<SparseEntry> SparseTensor3::entries() const {
  std::vector<SparseEntry> out;
  out.reserve(nnz());
  for (std::size_t k = 0; k < nnz(); ++k) out.push_back({index(k), values_[k]});
  return out;
}

bool SparseTensor3::same_support(const SparseTensor3 &o) const {
  if (dims_ != o.dims_ || nnz() != o.nnz()) return false;
  return index_ == o.index_ || *index_ == *o.index_;
}

bool SparseTensor3::operator==(const SparseTensor3 &o) const {
  return same_support(o) && values_ == o.values_;
}

SparseTensor3 to_sparse(const DenseTensor3 &t) {
  const auto [n1, n2, n3] = t.dims();
  std::vector<SparseEntry> entries;
  entries.reserve(static_cast<std::size_t>(t.size()));
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j)
      for (Index k = 0; k < n3; ++k)
        entries.push_back({Coord{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                                 static_cast<std::int32_t>(k)},
                           t(i, j, k)});
  return SparseTensor3(t.dims(), std::move(entries));
}

// ---------------------------------------------------------------- text io

namespace {

template <class T> bool parse_token(std::string_view &rest, T &out) {
  std::size_t p = 0;
  while (p < rest.size() && (rest[p] == ' ' || rest[p] == '\t' || rest[p] == '\r')) ++p;
  rest.remove_prefix(p);
  if (rest.empty()) return false;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), out);
  if (ec != std::errc{}) return false;
  rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
  return rest.empty() || rest.front() == ' ' || rest.front() == '\t' || rest.front() == '\r';
}

bool only_blank(std::string_view rest) {
  return rest.find_first_not_of(" \t\r") == std::string_view::npos;
}

} // namespace

SparseTensor3 read_sparse(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!only_blank(line)) return true;
    }
    return false;
  };
  if (!next_line()) throw FormatError("missing header 'n1 n2 n3 nnz'", lineno + 1);
  std::string_view rest(line);
  long long n[3];
  long long nnz;
  if (!parse_token(rest, n[0]) || !parse_token(rest, n[1]) || !parse_token(rest, n[2]) ||
      !parse_token(rest, nnz) || !only_blank(rest) || nnz < 0 || n[0] < 1 || n[1] < 1 || n[2] < 1)
    throw FormatError("malformed header, expected 'n1 n2 n3 nnz'", lineno);
  const Dims dims{n[0], n[1], n[2]};
  std::vector<SparseEntry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long long e = 0; e < nnz; ++e) {
    if (!next_line())
      throw FormatError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(e),
                        lineno + 1);
    rest = line;
    long long idx[3];
    double v;
    if (!parse_token(rest, idx[0]) || !parse_token(rest, idx[1]) || !parse_token(rest, idx[2]) ||
        !parse_token(rest, v) || !only_blank(rest))
      throw FormatError("malformed entry, expected 'i1 i2 i3 value'", lineno);
    Coord c{};
    for (int d = 0; d < 3; ++d) {
      if (idx[d] < 1 || idx[d] > dims[d])
        throw FormatError("index " + std::to_string(idx[d]) + " out of range 1.." +
                              std::to_string(dims[d]),
                          lineno);
      c[d] = static_cast<std::int32_t>(idx[d] - 1);
    }
    entries.push_back({c, v});
  }
  if (next_line()) throw FormatError("trailing data after declared entries", lineno);
  try {
    return SparseTensor3(dims, std::move(entries));
  } catch (const ShapeError &err) {
    throw FormatError(err.what(), lineno);
  }
}

SparseTensor3 read_sparse(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_sparse(in);
}

void write_sparse(std::ostream &out, const SparseTensor3 &t) {
  const auto &d = t.dims();
  out << d[0] << ' ' << d[1] << ' ' << d[2] << ' ' << t.nnz() << '\n';
  char buf[64];
  for (std::size_t k = 0; k < t.nnz(); ++k) {
    const Coord &c = t.index(k);
    std::snprintf(buf, sizeof buf, "%.17g", t.value(k));
    out << c[0] + 1 << ' ' << c[1] + 1 << ' ' << c[2] + 1 << ' ' << buf << '\n';
  }
}

void write_sparse(const std::filesystem::path &path, const SparseTensor3 &t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sparse(out, t);
}

// ---------------------------------------------------------------- kernels

SparseTensor3 tucker_eval_sparse(const DenseTensor3 &core, const std::array<Matrix, 3> &u,
                                 const SparseTensor3 &support) {
  const Dims &rd = core.dims();
  for (int d = 0; d < 3; ++d) {
    if (u[d].cols() != rd[d]) throw ShapeError("factor/core rank mismatch");
    if (u[d].rows() != support.dims()[d]) throw ShapeError("factor/support dims mismatch");
  }
  const Index r1 = rd[0], r2 = rd[1], r3 = rd[2];
  // Row-major copies so each factor row is contiguous.
  const Matrix u1t = u[0].transpose(), u2t = u[1].transpose(), u3t = u[2].transpose();
  const double *g = core.values().data();

  std::vector<double> out(support.nnz());
  detail::parallel_blocks(support.nnz(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> w(static_cast<std::size_t>(r2 * r3));
    for (std::size_t e = lo; e < hi; ++e) {
      const Coord &c = support.index(e);
      const double *a = u1t.col(c[0]).data();
      const double *b = u2t.col(c[1]).data();
      const double *cc = u3t.col(c[2]).data();
      // w(j,k) = sum_i a_i G(i,j,k)
      for (Index jk = 0; jk < r2 * r3; ++jk) {
        const double *gcol = g + jk * r1;
        double s = 0.0;
        for (Index i = 0; i < r1; ++i) s += a[i] * gcol[i];
        w[static_cast<std::size_t>(jk)] = s;
      }
      double val = 0.0;
      for (Index k = 0; k < r3; ++k) {
        double s = 0.0;
        for (Index j = 0; j < r2; ++j) s += b[j] * w[static_cast<std::size_t>(j + r2 * k)];
        val += cc[k] * s;
      }
      out[e] = val;
    }
  });
  return support.with_values(std::move(out));
}

} // namespace tucker
