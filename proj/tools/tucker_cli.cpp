// Command-line front end: generate, complete, sgd, evaluate, case.

#include "tucker/harness.hpp"
#include "tucker/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace tucker;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kSolverFailure = 2;

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Dims parse_dims(const std::vector<Index> &v, const char *what) {
  if (v.size() != 3) throw CLI::ValidationError(what, "expects three comma-separated values");
  return {v[0], v[1], v[2]};
}

struct InputArgs {
  std::string dir;
  std::string train, test, validation;
  std::vector<Index> rank;

  void add(CLI::App *app) {
    app->add_option("-i,--input", dir, "instance directory written by generate");
    app->add_option("--train", train, "train entries (sparse text format)");
    app->add_option("--test", test, "test entries");
    app->add_option("--validation", validation, "validation entries");
    app->add_option("--rank", rank, "multilinear rank r1,r2,r3")->delimiter(',');
  }

  CompletionInstance load() const {
    CompletionInstance inst;
    if (!dir.empty()) {
      inst = read_instance(dir);
    } else {
      if (train.empty()) throw CLI::ValidationError("--train", "needs --input or --train");
      inst.train = read_sparse(fs::path(train));
      inst.dims = inst.train.dims();
      inst.test = SparseTensor3(inst.dims, {});
    }
    if (!test.empty()) inst.test = read_sparse(fs::path(test));
    if (!validation.empty()) inst.validation = read_sparse(fs::path(validation));
    if (!rank.empty()) inst.rank.r = parse_dims(rank, "--rank");
    else if (dir.empty()) throw CLI::ValidationError("--rank", "is required without --input");
    inst.validate();
    return inst;
  }
};

struct SolverArgs {
  std::string metric = "preconditioned";
  std::string beta = "hs";
  SolverConfig cfg;
  std::string init;

  void add(CLI::App *app) {
    app->add_option("--metric", metric, "preconditioned or euclidean")
        ->check(CLI::IsMember({"preconditioned", "euclidean"}));
    app->add_option("--max-iters", cfg.max_iters, "iteration cap");
    app->add_option("--tol", cfg.train_mse_tol, "stop when train MSE is at most this");
    app->add_option("--seed", cfg.seed, "seed for the random start");
    app->add_option("--init", init, "directory with starting factors");
    app->add_flag("--debug-checks", cfg.debug_checks, "re-check iterate invariants");
  }

  SolverConfig build() {
    cfg.metric = metric == "euclidean" ? Metric::Euclidean : Metric::Preconditioned;
    cfg.beta_rule = beta == "pr" ? BetaRule::PolakRibierePlus : BetaRule::HestenesStiefelPlus;
    cfg.validate();
    return cfg;
  }

  std::optional<TuckerPoint> start() const {
    if (init.empty()) return std::nullopt;
    return read_point(init);
  }
};

void write_outputs(const fs::path &out, const SolverResult &r) {
  fs::create_directories(out);
  write_trace_csv(out / "trace.csv", r.trace);
  write_point(out / "factors", r.point);
}

int report(const SolverResult &r, const CompletionInstance &inst) {
  const auto &last = r.trace.records.back();
  std::cout << "termination: " << to_string(r.trace.termination) << '\n'
            << "iterations: " << r.trace.iterations() << '\n'
            << "train_mse: " << last.train_mse << '\n';
  if (!inst.test.empty()) std::cout << "test_mse: " << mse(r.point, inst.test) << '\n';
  if (!r.trace.message.empty()) std::cout << "note: " << r.trace.message << '\n';
  switch (r.trace.termination) {
  case Termination::LinesearchFailure:
  case Termination::NumericalFailure:
  case Termination::Diverged: return kSolverFailure;
  default: return kOk;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Riemannian Tucker tensor completion"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "kernel threads (overrides TUCKER_THREADS)");

  // generate
  auto *gen = app.add_subcommand("generate", "write a synthetic instance and its ground truth");
  std::vector<Index> g_dims, g_rank;
  SyntheticSpec spec;
  double g_fraction = 0.0;
  std::size_t g_test = 0;
  std::string g_core = "gaussian", g_out;
  gen->add_option("--dims", g_dims, "n1,n2,n3")->required()->delimiter(',');
  gen->add_option("--rank", g_rank, "r1,r2,r3")->required()->delimiter(',');
  auto *os_opt = gen->add_option("--os", spec.os_ratio, "over-sampling ratio");
  gen->add_option("--fraction", g_fraction, "observed fraction of all entries")->excludes(os_opt);
  gen->add_option("--test-size", g_test, "test entries (default: train size)");
  gen->add_option("--core", g_core, "gaussian or diag_decay")
      ->check(CLI::IsMember({"gaussian", "diag_decay"}));
  gen->add_option("--cn", spec.cn, "condition number for diag_decay");
  gen->add_option("--noise", spec.noise_eps, "relative noise level eps");
  gen->add_option("--seed", spec.seed, "seed");
  gen->add_option("-o,--output", g_out, "output directory")->required();

  // complete
  auto *comp = app.add_subcommand("complete", "run a batch solver");
  InputArgs c_in;
  SolverArgs c_solver;
  std::string c_kind = "cg", c_out;
  c_in.add(comp);
  c_solver.add(comp);
  comp->add_option("--solver", c_kind, "gd or cg")->check(CLI::IsMember({"gd", "cg"}));
  comp->add_option("--beta", c_solver.beta, "hs or pr")->check(CLI::IsMember({"hs", "pr"}));
  comp->add_flag("--validation-early-stop", c_solver.cfg.validation_early_stop,
                 "stop once validation MSE increases");
  comp->add_option("-o,--output", c_out, "output directory")->required();

  // sgd
  auto *sg = app.add_subcommand("sgd", "stochastic updates over frontal slices");
  InputArgs s_in;
  SolverArgs s_solver;
  std::string s_out;
  std::vector<double> s_gammas;
  double s_gamma = 0.0;
  s_in.add(sg);
  s_solver.add(sg);
  auto *gamma_opt = sg->add_option("--gamma0", s_gamma, "fixed initial step (skips pre-training)");
  sg->add_option("--gamma0-candidates", s_gammas, "pre-training candidates")
      ->delimiter(',')
      ->excludes(gamma_opt);
  sg->add_option("--lambda", s_solver.cfg.sgd.lambda, "step decay");
  sg->add_option("--epochs", s_solver.cfg.sgd.epochs, "passes over the slices");
  sg->add_option("--pretrain-fraction", s_solver.cfg.sgd.pretrain_fraction,
                 "fraction of slices used to pick gamma0");
  sg->add_option("-o,--output", s_out, "output directory")->required();

  // evaluate
  auto *ev = app.add_subcommand("evaluate", "MSE of stored factors on a sparse set");
  std::string e_factors, e_test;
  ev->add_option("--factors", e_factors, "factor directory")->required();
  ev->add_option("--test", e_test, "entries to score")->required();

  // case
  auto *cs = app.add_subcommand("case", "named desk-scale reproductions");
  std::string case_name, case_out;
  std::vector<std::uint64_t> case_seeds;
  cs->add_option("name", case_name, "s1, s2, s4, s5, s6 or o")
      ->required()
      ->check(CLI::IsMember({"s1", "s2", "s4", "s5", "s6", "o"}));
  cs->add_option("--seed", case_seeds, "seeds (default 1..5)")->delimiter(',');
  cs->add_option("-o,--output", case_out, "directory for trace CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (threads > 0) set_thread_count(threads);

  try {
    if (*gen) {
      spec.dims = parse_dims(g_dims, "--dims");
      spec.rank.r = parse_dims(g_rank, "--rank");
      if (g_fraction > 0.0) spec.observed_fraction = g_fraction;
      if (g_test > 0) spec.test_size = g_test;
      spec.core_kind = g_core == "diag_decay" ? CoreKind::DiagDecay : CoreKind::Gaussian;
      const GeneratedInstance g = generate_instance(spec);
      write_instance(g_out, g.instance, &g.truth, &spec);
      std::cout << "train " << g.instance.train.nnz() << ", test " << g.instance.test.nnz()
                << ", manifold dim " << manifold_dim(spec.dims, spec.rank) << '\n';
      return kOk;
    }
    if (*comp) {
      const CompletionInstance inst = c_in.load();
      const SolverConfig cfg = c_solver.build();
      std::optional<TuckerPoint> x0 = c_solver.start();
      int code = kOk;
      try {
        const SolverResult r = c_kind == "gd" ? gradient_descent(inst, cfg, std::move(x0))
                                              : conjugate_gradient(inst, cfg, std::move(x0));
        write_outputs(c_out, r);
        code = report(r, inst);
      } catch (const ConvergenceError &e) {
        throw SolverFailure(e.what());
      } catch (const RankDeficientError &e) {
        throw SolverFailure(e.what());
      }
      return code;
    }
    if (*sg) {
      const CompletionInstance inst = s_in.load();
      if (s_gamma > 0.0) s_solver.cfg.sgd.gamma0 = s_gamma;
      if (!s_gammas.empty()) s_solver.cfg.sgd.gamma0_candidates = s_gammas;
      const SolverConfig cfg = s_solver.build();
      std::optional<TuckerPoint> x0 = s_solver.start();
      std::optional<SolverResult> r;
      try {
        r.emplace(sgd(inst, cfg, std::move(x0)));
      } catch (const std::runtime_error &e) {
        throw SolverFailure(e.what());
      }
      write_outputs(s_out, *r);
      return report(*r, inst);
    }
    if (*ev) {
      const TuckerPoint x = read_point(e_factors);
      const SparseTensor3 test = read_sparse(fs::path(e_test));
      if (test.dims() != x.dims()) throw ShapeError("test dims do not match the factors");
      std::cout << "mse " << mse(x, test) << '\n';
      return kOk;
    }
    if (*cs) {
      CaseOptions opts;
      if (!case_seeds.empty()) opts.seeds = case_seeds;
      if (!case_out.empty()) opts.trace_dir = case_out;
      opts.log = &std::cout;
      const CaseReport rep = run_case(case_name, opts);
      std::cout << (rep.pass ? "PASS " : "FAIL ") << rep.name << ": " << rep.summary << " ("
                << rep.seconds << " s)\n";
      return kOk;
    }
  } catch (const SolverFailure &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const CLI::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError &e) {
    std::cerr << "malformed file: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
