#pragma once

#include "tucker/solvers.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tucker {

enum class CoreKind { Gaussian, DiagDecay };

struct SyntheticSpec {
  Dims dims{50, 50, 50};
  MultilinearRank rank{{5, 5, 5}};
  /// |Omega| = round(os_ratio * manifold_dim); ignored when observed_fraction is set.
  double os_ratio = 10.0;
  /// |Omega| = round(observed_fraction * n1 n2 n3).
  std::optional<double> observed_fraction;
  /// Defaults to |Omega|.
  std::optional<std::size_t> test_size;
  CoreKind core_kind = CoreKind::Gaussian;
  /// Largest over smallest superdiagonal core value for DiagDecay.
  double cn = 100.0;
  double noise_eps = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t train_size() const;
};

/// sum_d (n_d r_d - r_d^2) + r1 r2 r3
long long manifold_dim(const Dims &dims, const MultilinearRank &rank);

/// Superdiagonal r x r x r core, entries cn^(-i/(r-1)) for i = 0..r-1.
DenseTensor3 diag_decay_core(Index r, double cn);

struct GeneratedInstance {
  CompletionInstance instance;
  TuckerPoint truth;
  /// ||P_Omega(X*)||_F before noise.
  double clean_train_norm = 0.0;
  /// Frobenius norm of the noise added on Omega.
  double train_noise_norm = 0.0;
};

/// Samples Omega and Gamma uniformly without replacement and fills them from
/// a random ground truth; noise eps * (||P_Omega X*|| / ||P_Omega N||) * N is
/// added to both sets with the same scale.
GeneratedInstance generate_instance(const SyntheticSpec &spec);

/// Uniform random disjoint partition into (train, validation, test). An
/// empty validation part leaves instance.validation unset.
CompletionInstance split(const SparseTensor3 &data, const std::array<double, 3> &fractions,
                         std::uint64_t seed, const MultilinearRank &rank = {});

// ---------------------------------------------------------------- files

/// "rows cols" header then one row per line, 17 significant digits.
void write_matrix(const std::filesystem::path &path, const Matrix &m);
Matrix read_matrix(const std::filesystem::path &path);
Matrix read_matrix(std::istream &in);

/// u1.txt, u2.txt, u3.txt and core.txt (sparse format, every entry) in `dir`.
void write_point(const std::filesystem::path &dir, const TuckerPoint &x);
TuckerPoint read_point(const std::filesystem::path &dir);

/// train.txt, test.txt, validation.txt (when present) and instance.json; the
/// ground truth goes to dir/truth when given.
void write_instance(const std::filesystem::path &dir, const CompletionInstance &inst,
                    const TuckerPoint *truth = nullptr, const SyntheticSpec *spec = nullptr);
CompletionInstance read_instance(const std::filesystem::path &dir);

// ---------------------------------------------------------------- cases

struct CaseOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Traces land here as <case>_<label>_seed<k>.csv when set.
  std::optional<std::filesystem::path> trace_dir;
  std::ostream *log = nullptr;
};

struct CaseReport {
  std::string name;
  bool pass = false;
  std::string summary;
  int seeds_passed = 0;
  int seeds_run = 0;
  double seconds = 0.0;
};

/// Seeds needed out of n: 4 of 5, or all of them when n < 5.
int required_seeds(int n);

CaseReport case_s1(const CaseOptions &opts);
CaseReport case_s2(const CaseOptions &opts);
CaseReport case_s4(const CaseOptions &opts);
CaseReport case_s5(const CaseOptions &opts);
CaseReport case_s6(const CaseOptions &opts);
CaseReport case_o(const CaseOptions &opts);

/// Dispatches on "s1", "s2", "s4", "s5", "s6", "o"; throws std::invalid_argument otherwise.
CaseReport run_case(const std::string &name, const CaseOptions &opts);

/// True when the last half of `values` never increases.
bool tail_non_increasing(const std::vector<double> &values);

} // namespace tucker
