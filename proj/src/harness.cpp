#include "tucker/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace tucker {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Coord coord_of(std::uint64_t linear, const Dims &dims) {
  const auto n1 = static_cast<std::uint64_t>(dims[0]);
  const auto n2 = static_cast<std::uint64_t>(dims[1]);
  return {static_cast<std::int32_t>(linear % n1), static_cast<std::int32_t>((linear / n1) % n2),
          static_cast<std::int32_t>(linear / (n1 * n2))};
}

/// k distinct values from [0, n) in random order (Floyd's algorithm, then shuffled).
std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::size_t k, std::mt19937_64 &rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(k * 2);
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class CaseLog {
public:
  explicit CaseLog(std::ostream *out) : out_(out) {}
  template <class T> CaseLog &operator<<(const T &v) {
    if (out_) *out_ << v;
    return *this;
  }

private:
  std::ostream *out_;
};

void save_trace(const CaseOptions &opts, const std::string &name, const std::string &label,
                std::uint64_t seed, const SolverTrace &trace) {
  if (!opts.trace_dir) return;
  fs::create_directories(*opts.trace_dir);
  write_trace_csv(*opts.trace_dir / (name + "_" + label + "_seed" + std::to_string(seed) + ".csv"),
                  trace);
}

TuckerPoint start_point(const CompletionInstance &inst, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.seed = seed ^ 0xa5a5a5a5ULL;
  return initial_point(inst, cfg);
}

double final_test_mse(const SolverResult &r, const CompletionInstance &inst) {
  return mse(r.point, inst.test);
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CaseReport finish(CaseReport rep, Clock::time_point t0) {
  rep.seconds = since(t0);
  rep.pass = rep.seeds_run > 0 && rep.seeds_passed >= required_seeds(rep.seeds_run);
  return rep;
}

} // namespace

// ---------------------------------------------------------------- synthetic data

void SyntheticSpec::validate() const {
  rank.validate(dims);
  if (observed_fraction && !(*observed_fraction > 0.0 && *observed_fraction <= 1.0))
    throw std::invalid_argument("observed fraction must lie in (0,1]");
  if (!observed_fraction && !(os_ratio > 0.0))
    throw std::invalid_argument("os ratio must be positive");
  if (core_kind == CoreKind::DiagDecay) {
    if (!(cn > 1.0)) throw std::invalid_argument("diag_decay needs cn > 1");
    if (rank[0] != rank[1] || rank[1] != rank[2] || rank[0] < 2)
      throw std::invalid_argument("diag_decay needs equal ranks of at least 2");
  }
  if (!(noise_eps >= 0.0)) throw std::invalid_argument("noise eps must be non-negative");
  const auto n = static_cast<std::size_t>(total_size(dims));
  const std::size_t m = train_size();
  if (m == 0) throw std::invalid_argument("settings yield an empty train set");
  if (m > n)
    throw std::invalid_argument("os ratio " + std::to_string(os_ratio) + " needs " +
                                std::to_string(m) + " entries but the tensor has " +
                                std::to_string(n));
  if (m + test_size.value_or(m) > n)
    throw std::invalid_argument("train plus test size " +
                                std::to_string(m + test_size.value_or(m)) +
                                " exceeds the tensor size " + std::to_string(n));
}

std::size_t SyntheticSpec::train_size() const {
  if (observed_fraction)
    return static_cast<std::size_t>(
        std::llround(*observed_fraction * static_cast<double>(total_size(dims))));
  return static_cast<std::size_t>(
      std::llround(os_ratio * static_cast<double>(manifold_dim(dims, rank))));
}

long long manifold_dim(const Dims &dims, const MultilinearRank &rank) {
  rank.validate(dims);
  long long dim = rank[0] * rank[1] * rank[2];
  for (int d = 0; d < 3; ++d) dim += dims[d] * rank[d] - rank[d] * rank[d];
  return dim;
}

DenseTensor3 diag_decay_core(Index r, double cn) {
  if (r < 2 || !(cn > 1.0)) throw std::invalid_argument("diag_decay_core needs r >= 2 and cn > 1");
  DenseTensor3 core(Dims{r, r, r});
  for (Index i = 0; i < r; ++i)
    core(i, i, i) = std::pow(cn, -static_cast<double>(i) / static_cast<double>(r - 1));
  return core;
}

GeneratedInstance generate_instance(const SyntheticSpec &spec) {
  spec.validate();
  const std::size_t m = spec.train_size();
  const std::size_t t = spec.test_size.value_or(m);

  TuckerPoint truth = random_point(spec.dims, spec.rank, spec.seed);
  if (spec.core_kind == CoreKind::DiagDecay)
    truth = TuckerPoint(truth.factors(), diag_decay_core(spec.rank[0], spec.cn));

  std::mt19937_64 rng(spec.seed ^ 0x243f6a8885a308d3ULL);
  const auto picks = sample_distinct(static_cast<std::uint64_t>(total_size(spec.dims)), m + t, rng);
  std::vector<SparseEntry> train_e, test_e;
  train_e.reserve(m);
  test_e.reserve(t);
  for (std::size_t k = 0; k < picks.size(); ++k)
    (k < m ? train_e : test_e).push_back({coord_of(picks[k], spec.dims), 0.0});

  auto fill = [&](std::vector<SparseEntry> e) {
    const SparseTensor3 support(spec.dims, std::move(e));
    return tucker_eval_sparse(truth, support);
  };
  SparseTensor3 train = fill(std::move(train_e));
  SparseTensor3 test = fill(std::move(test_e));

  GeneratedInstance out{CompletionInstance{}, truth, std::sqrt(train.squared_norm()), 0.0};
  if (spec.noise_eps > 0.0) {
    std::mt19937_64 noise_rng(spec.seed ^ 0x13198a2e03707344ULL);
    std::normal_distribution<double> normal;
    std::vector<double> n_train(train.nnz()), n_test(test.nnz());
    for (double &v : n_train) v = normal(noise_rng);
    for (double &v : n_test) v = normal(noise_rng);
    const double raw = std::sqrt(std::inner_product(n_train.begin(), n_train.end(),
                                                    n_train.begin(), 0.0));
    const double scale = spec.noise_eps * out.clean_train_norm / raw;
    auto add = [scale](const SparseTensor3 &s, std::vector<double> &n) {
      for (std::size_t k = 0; k < n.size(); ++k) n[k] = s.value(k) + scale * n[k];
      return s.with_values(std::move(n));
    };
    train = add(train, n_train);
    test = add(test, n_test);
    out.train_noise_norm = spec.noise_eps * out.clean_train_norm;
  }
  out.instance = CompletionInstance{spec.dims, spec.rank, std::move(train), std::move(test), {}};
  return out;
}

CompletionInstance split(const SparseTensor3 &data, const std::array<double, 3> &fractions,
                         std::uint64_t seed, const MultilinearRank &rank) {
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("split fractions must lie in [0,1]");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  const std::size_t n = data.nnz();
  const auto n_train =
      static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  const std::size_t n_test = n - n_train - n_val;
  const std::array<std::size_t, 3> sizes{n_train, n_val, n_test};
  const char *names[] = {"train", "validation", "test"};
  for (int p = 0; p < 3; ++p)
    if (fractions[p] > 0.0 && sizes[p] == 0)
      throw EmptySetError(std::string("split leaves the ") + names[p] + " part empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::array<std::vector<SparseEntry>, 3> parts;
  for (std::size_t k = 0; k < n; ++k) {
    const int p = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);
    parts[p].push_back({data.index(order[k]), data.value(order[k])});
  }
  CompletionInstance inst;
  inst.dims = data.dims();
  inst.rank = rank;
  inst.train = SparseTensor3(data.dims(), std::move(parts[0]));
  if (n_val > 0) inst.validation = SparseTensor3(data.dims(), std::move(parts[1]));
  inst.test = SparseTensor3(data.dims(), std::move(parts[2]));
  return inst;
}

// ---------------------------------------------------------------- files

void write_matrix(const fs::path &path, const Matrix &m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw FormatError("missing matrix header", lineno + 1);
  std::istringstream head(line);
  long long rows = -1, cols = -1;
  std::string extra;
  if (!(head >> rows >> cols) || (head >> extra) || rows < 0 || cols < 0)
    throw FormatError("matrix header must be 'rows cols'", lineno);
  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    if (!next_line()) throw FormatError("expected " + std::to_string(rows) + " rows", lineno + 1);
    const char *p = line.data();
    const char *end = p + line.size();
    for (long long j = 0; j < cols; ++j) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc())
        throw FormatError("expected " + std::to_string(cols) + " numbers", lineno);
      m(i, j) = v;
      p = res.ptr;
    }
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p != end) throw FormatError("trailing data after " + std::to_string(cols) + " numbers",
                                    lineno);
  }
  if (next_line()) throw FormatError("trailing data after the last row", lineno);
  return m;
}

Matrix read_matrix(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return read_matrix(in);
  } catch (const FormatError &e) {
    throw FormatError(path.string() + ": " + e.what(), e.line());
  }
}

void write_point(const fs::path &dir, const TuckerPoint &x) {
  fs::create_directories(dir);
  for (int d = 0; d < 3; ++d) write_matrix(dir / ("u" + std::to_string(d + 1) + ".txt"), x.u(d));
  write_sparse(dir / "core.txt", to_sparse(x.core()));
}

TuckerPoint read_point(const fs::path &dir) {
  std::array<Matrix, 3> u;
  for (int d = 0; d < 3; ++d) u[d] = read_matrix(dir / ("u" + std::to_string(d + 1) + ".txt"));
  const SparseTensor3 c = read_sparse(dir / "core.txt");
  DenseTensor3 core(c.dims());
  for (std::size_t k = 0; k < c.nnz(); ++k) {
    const Coord &i = c.index(k);
    core(i[0], i[1], i[2]) = c.value(k);
  }
  return TuckerPoint(std::move(u), std::move(core));
}

void write_instance(const fs::path &dir, const CompletionInstance &inst, const TuckerPoint *truth,
                    const SyntheticSpec *spec) {
  fs::create_directories(dir);
  write_sparse(dir / "train.txt", inst.train);
  write_sparse(dir / "test.txt", inst.test);
  if (inst.validation) write_sparse(dir / "validation.txt", *inst.validation);
  json meta;
  meta["dims"] = {inst.dims[0], inst.dims[1], inst.dims[2]};
  meta["rank"] = {inst.rank[0], inst.rank[1], inst.rank[2]};
  meta["train_size"] = inst.train.nnz();
  meta["test_size"] = inst.test.nnz();
  if (inst.validation) meta["validation_size"] = inst.validation->nnz();
  if (spec) {
    if (spec->observed_fraction)
      meta["observed_fraction"] = *spec->observed_fraction;
    else
      meta["os_ratio"] = spec->os_ratio;
    meta["core"] = spec->core_kind == CoreKind::Gaussian ? "gaussian" : "diag_decay";
    if (spec->core_kind == CoreKind::DiagDecay) meta["cn"] = spec->cn;
    meta["noise_eps"] = spec->noise_eps;
    meta["seed"] = spec->seed;
  }
  if (truth) {
    write_point(dir / "truth", *truth);
    meta["truth"] = "truth";
  }
  std::ofstream(dir / "instance.json") << meta.dump(2) << '\n';
}

CompletionInstance read_instance(const fs::path &dir) {
  std::ifstream in(dir / "instance.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "instance.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::parse_error &e) {
    throw std::runtime_error((dir / "instance.json").string() + ": " + e.what());
  }
  CompletionInstance inst;
  for (int d = 0; d < 3; ++d) {
    inst.dims[d] = meta.at("dims").at(d).get<Index>();
    inst.rank.r[d] = meta.at("rank").at(d).get<Index>();
  }
  inst.train = read_sparse(dir / "train.txt");
  inst.test = fs::exists(dir / "test.txt") ? read_sparse(dir / "test.txt")
                                           : SparseTensor3(inst.dims, {});
  if (fs::exists(dir / "validation.txt")) inst.validation = read_sparse(dir / "validation.txt");
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------- cases

int required_seeds(int n) { return n >= 5 ? (4 * n + 4) / 5 : n; }

bool tail_non_increasing(const std::vector<double> &values) {
  const std::size_t start = values.size() / 2;
  for (std::size_t k = start + 1; k < values.size(); ++k)
    if (!(values[k] <= values[k - 1])) return false;
  return true;
}

CaseReport case_s1(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "s1";
  constexpr double target = 1e-8;
  for (const auto seed : opts.seeds) {
    SyntheticSpec spec;
    spec.dims = {30, 30, 30};
    spec.rank = {{3, 3, 3}};
    spec.os_ratio = 10.0;
    spec.seed = seed;
    const CompletionInstance inst = generate_instance(spec).instance;
    SolverConfig cfg;
    cfg.train_mse_tol = target;
    cfg.track_test = false;
    cfg.seed = seed;
    cfg.metric = Metric::Preconditioned;
    const SolverResult pre = gradient_descent(inst, cfg, start_point(inst, seed));
    cfg.metric = Metric::Euclidean;
    const SolverResult euc = gradient_descent(inst, cfg, start_point(inst, seed));
    save_trace(opts, "s1", "preconditioned", seed, pre.trace);
    save_trace(opts, "s1", "euclidean", seed, euc.trace);
    const auto ip = pre.trace.first_iter_below(target);
    const auto ie = euc.trace.first_iter_below(target);
    const bool ok = ip && (!ie || *ip < *ie);
    auto show = [](const std::optional<int> &i) { return i ? std::to_string(*i) : ">250"; };
    log << "s1 seed " << seed << ": iterations to 1e-8 preconditioned " << show(ip)
        << ", euclidean " << show(ie) << (ok ? "  PASS" : "  FAIL") << '\n';
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "preconditioned GD faster on " + std::to_string(rep.seeds_passed) + "/" +
                std::to_string(rep.seeds_run) + " seeds";
  return finish(rep, t0);
}

CaseReport case_s2(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "s2";
  for (const auto seed : opts.seeds) {
    SyntheticSpec spec;
    spec.dims = {100, 100, 100};
    spec.rank = {{5, 5, 5}};
    spec.os_ratio = 10.0;
    spec.seed = seed;
    const CompletionInstance inst = generate_instance(spec).instance;
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.track_test = opts.trace_dir.has_value();
    const SolverResult r = conjugate_gradient(inst, cfg, start_point(inst, seed));
    save_trace(opts, "s2", "cg", seed, r.trace);
    const double train = r.trace.records.back().train_mse;
    const double test = final_test_mse(r, inst);
    const bool ok = train <= 1e-12 && r.trace.iterations() <= 250 && test <= 1e-8;
    log << "s2 seed " << seed << ": " << r.trace.iterations() << " iterations, train "
        << fmt("%.3e", train) << ", test " << fmt("%.3e", test) << " ("
        << to_string(r.trace.termination) << ")" << (ok ? "  PASS" : "  FAIL") << '\n';
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "exact recovery on " + std::to_string(rep.seeds_passed) + "/" +
                std::to_string(rep.seeds_run) + " seeds";
  return finish(rep, t0);
}

CaseReport case_s4(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "s4";
  for (const auto seed : opts.seeds) {
    SyntheticSpec spec;
    spec.dims = {60, 60, 60};
    spec.rank = {{3, 3, 3}};
    spec.os_ratio = 5.0;
    spec.seed = seed;
    const CompletionInstance inst = generate_instance(spec).instance;
    SolverConfig cfg;
    cfg.seed = seed;
    const SolverResult r = conjugate_gradient(inst, cfg, start_point(inst, seed));
    save_trace(opts, "s4", "cg", seed, r.trace);
    std::vector<double> test;
    for (const auto &rec : r.trace.records) test.push_back(rec.test_mse);
    const bool ok = tail_non_increasing(test) && std::isfinite(test.back());
    log << "s4 seed " << seed << ": " << r.trace.iterations() << " iterations, final test "
        << fmt("%.3e", test.back()) << ", tail non-increasing " << (ok ? "yes  PASS" : "no  FAIL")
        << '\n';
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "test MSE tail non-increasing on " + std::to_string(rep.seeds_passed) + "/" +
                std::to_string(rep.seeds_run) + " seeds";
  return finish(rep, t0);
}

CaseReport case_s5(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "s5";
  for (const auto seed : opts.seeds) {
    bool ok = true;
    for (const double cn : {5.0, 50.0, 100.0}) {
      SyntheticSpec spec;
      spec.dims = {60, 60, 60};
      spec.rank = {{3, 3, 3}};
      spec.os_ratio = 5.0;
      spec.core_kind = CoreKind::DiagDecay;
      spec.cn = cn;
      spec.seed = seed;
      const CompletionInstance inst = generate_instance(spec).instance;
      SolverConfig cfg;
      cfg.seed = seed;
      cfg.track_test = opts.trace_dir.has_value();
      const SolverResult pre = conjugate_gradient(inst, cfg, start_point(inst, seed));
      cfg.metric = Metric::Euclidean;
      const SolverResult euc = conjugate_gradient(inst, cfg, start_point(inst, seed));
      save_trace(opts, "s5", "preconditioned_cn" + fmt("%g", cn), seed, pre.trace);
      save_trace(opts, "s5", "euclidean_cn" + fmt("%g", cn), seed, euc.trace);
      const double fp = pre.trace.records.back().train_mse;
      const double fe = euc.trace.records.back().train_mse;
      const bool this_ok = fp < fe || (fp <= cfg.train_mse_tol && fe <= cfg.train_mse_tol &&
                                       pre.trace.iterations() < euc.trace.iterations());
      ok = ok && this_ok;
      log << "s5 seed " << seed << " cn " << cn << ": final train MSE preconditioned "
          << fmt("%.3e", fp) << " (" << pre.trace.iterations() << " it), euclidean "
          << fmt("%.3e", fe) << " (" << euc.trace.iterations() << " it)"
          << (this_ok ? "  PASS" : "  FAIL") << '\n';
    }
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "preconditioned CG ahead for every cn on " + std::to_string(rep.seeds_passed) +
                "/" + std::to_string(rep.seeds_run) + " seeds";
  return finish(rep, t0);
}

CaseReport case_s6(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "s6";
  for (const auto seed : opts.seeds) {
    bool ok = true;
    for (const double eps : {1e-4, 1e-6}) {
      SyntheticSpec spec;
      spec.dims = {50, 50, 50};
      spec.rank = {{3, 3, 3}};
      spec.os_ratio = 10.0;
      spec.noise_eps = eps;
      spec.seed = seed;
      const GeneratedInstance g = generate_instance(spec);
      const CompletionInstance &inst = g.instance;
      SolverConfig cfg;
      cfg.seed = seed;
      cfg.train_mse_tol = 1e-24;
      cfg.track_test = opts.trace_dir.has_value();
      const SolverResult r = conjugate_gradient(inst, cfg, start_point(inst, seed));
      save_trace(opts, "s6", "eps" + fmt("%g", eps), seed, r.trace);
      const double test = final_test_mse(r, inst);
      const double floor = eps * eps * g.clean_train_norm * g.clean_train_norm;
      const double ratio = test * static_cast<double>(inst.test.nnz()) / floor;
      const bool this_ok = ratio >= 0.5 && ratio <= 2.0;
      ok = ok && this_ok;
      log << "s6 seed " << seed << " eps " << fmt("%g", eps) << ": test MSE "
          << fmt("%.3e", test) << ", |test| * MSE / (eps^2 ||P_Omega X*||^2) = "
          << fmt("%.3f", ratio) << (this_ok ? "  PASS" : "  FAIL") << '\n';
    }
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "noise floor matched on " + std::to_string(rep.seeds_passed) + "/" +
                std::to_string(rep.seeds_run) + " seeds";
  rep.seconds = since(t0);
  rep.pass = rep.seeds_run > 0 && rep.seeds_passed == rep.seeds_run;
  return rep;
}

CaseReport case_o(const CaseOptions &opts) {
  const auto t0 = Clock::now();
  CaseLog log(opts.log);
  CaseReport rep;
  rep.name = "o";
  constexpr int passes = 100;
  for (const auto seed : opts.seeds) {
    SyntheticSpec spec;
    spec.dims = {50, 50, 500};
    spec.rank = {{3, 3, 3}};
    spec.observed_fraction = 0.1;
    spec.seed = seed;
    const CompletionInstance inst = generate_instance(spec).instance;
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.max_iters = passes;
    cfg.sgd.epochs = passes;
    cfg.sgd.lambda = 1e-7;
    const TuckerPoint x0 = start_point(inst, seed);
    const double gamma0 = pretrain_gamma0(inst, cfg, x0);
    cfg.sgd.gamma0 = gamma0;
    const SolverResult s = sgd(inst, cfg, x0);
    const SolverResult b = gradient_descent(inst, cfg, x0);
    save_trace(opts, "o", "sgd", seed, s.trace);
    save_trace(opts, "o", "gd", seed, b.trace);
    const double ts = s.trace.records.back().test_mse;
    const double tb = b.trace.records.back().test_mse;
    const bool ok = std::isfinite(ts) && ts <= 2.0 * tb;
    log << "o seed " << seed << ": gamma0 " << gamma0 << ", sgd " << s.trace.iterations()
        << " epochs test " << fmt("%.3e", ts) << ", gd " << b.trace.iterations()
        << " iterations test " << fmt("%.3e", tb) << (ok ? "  PASS" : "  FAIL") << '\n';
    ++rep.seeds_run;
    rep.seeds_passed += ok;
  }
  rep.summary = "sgd within 2x of batch on " + std::to_string(rep.seeds_passed) + "/" +
                std::to_string(rep.seeds_run) + " seeds";
  return finish(rep, t0);
}

CaseReport run_case(const std::string &name, const CaseOptions &opts) {
  if (name == "s1") return case_s1(opts);
  if (name == "s2") return case_s2(opts);
  if (name == "s4") return case_s4(opts);
  if (name == "s5") return case_s5(opts);
  if (name == "s6") return case_s6(opts);
  if (name == "o") return case_o(opts);
  throw std::invalid_argument("unknown case '" + name + "' (expected s1, s2, s4, s5, s6, o)");
}

} // namespace tucker
