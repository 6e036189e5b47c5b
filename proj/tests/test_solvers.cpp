#include "test_util.hpp"
#include "tucker/harness.hpp"
#include "tucker/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace tucker;

namespace {

void expect_well_formed(const SolverTrace &trace, bool monotone) {
  ASSERT_FALSE(trace.records.empty());
  EXPECT_EQ(trace.records.front().iter, 0);
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const TraceRecord &r = trace.records[k];
    EXPECT_TRUE(std::isfinite(r.train_mse));
    EXPECT_GE(r.beta, 0.0);
    if (k == 0) continue;
    EXPECT_GT(r.iter, trace.records[k - 1].iter);
    if (monotone) EXPECT_LE(r.train_mse, trace.records[k - 1].train_mse) << "iteration " << r.iter;
  }
}

bool same_trace(const SolverTrace &a, const SolverTrace &b) {
  if (a.records.size() != b.records.size() || a.termination != b.termination) return false;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    const TraceRecord &x = a.records[k], &y = b.records[k];
    if (x.iter != y.iter || x.train_mse != y.train_mse || x.grad_norm != y.grad_norm ||
        x.step_size != y.step_size || x.beta != y.beta)
      return false;
  }
  return true;
}

GeneratedInstance synthetic(const Dims &dims, const MultilinearRank &rank, double os,
                            std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dims = dims;
  spec.rank = rank;
  spec.os_ratio = os;
  spec.seed = seed;
  return generate_instance(spec);
}

} // namespace

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rho = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.c1 = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.train_mse_tol = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(InitialPoint, ScaledToTrainNorm) {
  const GeneratedInstance g = synthetic({12, 11, 10}, {{2, 2, 2}}, 5.0, 1);
  SolverConfig cfg;
  cfg.seed = 4;
  const TuckerPoint x = initial_point(g.instance, cfg);
  const double pred = std::sqrt(tucker_eval_sparse(x, g.instance.train).squared_norm());
  const double data = std::sqrt(g.instance.train.squared_norm());
  EXPECT_NEAR(pred / data, cfg.init_relative_scale, 1e-12);
  cfg.init_relative_scale = 0.0;
  EXPECT_EQ(initial_point(g.instance, cfg).core(), random_point({12, 11, 10}, {{2, 2, 2}}, 4).core());
}

TEST(GradientDescent, AlreadyOptimalReturnsImmediately) {
  const GeneratedInstance g = synthetic({10, 9, 8}, {{2, 2, 2}}, 5.0, 2);
  const SolverResult r = gradient_descent(g.instance, SolverConfig{}, g.truth);
  EXPECT_EQ(r.trace.iterations(), 0);
  EXPECT_EQ(r.trace.termination, Termination::TrainTolerance);
  const SolverResult c = conjugate_gradient(g.instance, SolverConfig{}, g.truth);
  EXPECT_EQ(c.trace.iterations(), 0);
}

TEST(GradientDescent, FullyObservedExactRecovery) {
  const CompletionInstance inst = testing_util::fully_observed({20, 20, 20}, {{3, 3, 3}}, 3);
  SolverConfig cfg;
  cfg.seed = 1;
  cfg.debug_checks = true;
  const SolverResult r = gradient_descent(inst, cfg);
  EXPECT_EQ(r.trace.termination, Termination::TrainTolerance);
  EXPECT_LE(r.trace.records.back().train_mse, 1e-12);
  EXPECT_LE(r.trace.iterations(), 250);
  expect_well_formed(r.trace, true);
  EXPECT_LE(r.point.orthonormality_error(), 1e-10);
}

TEST(ConjugateGradient, NoSlowerThanGradientDescentWhenFullyObserved) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const CompletionInstance inst = testing_util::fully_observed({15, 14, 13}, {{3, 3, 3}}, seed);
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.train_mse_tol = 1e-10;
    const SolverResult gd = gradient_descent(inst, cfg);
    const SolverResult cg = conjugate_gradient(inst, cfg);
    ASSERT_EQ(gd.trace.termination, Termination::TrainTolerance);
    ASSERT_EQ(cg.trace.termination, Termination::TrainTolerance);
    EXPECT_LE(cg.trace.iterations(), gd.trace.iterations()) << "seed " << seed;
  }
}

TEST(ConjugateGradient, BothRulesAndMetricsAreMonotone) {
  const GeneratedInstance g = synthetic({20, 20, 20}, {{3, 3, 3}}, 8.0, 4);
  for (BetaRule rule : {BetaRule::HestenesStiefelPlus, BetaRule::PolakRibierePlus})
    for (Metric kind : {Metric::Preconditioned, Metric::Euclidean}) {
      SolverConfig cfg;
      cfg.beta_rule = rule;
      cfg.metric = kind;
      cfg.max_iters = 60;
      cfg.seed = 2;
      const SolverResult r = conjugate_gradient(g.instance, cfg);
      expect_well_formed(r.trace, true);
      EXPECT_LT(r.trace.records.back().train_mse, r.trace.records.front().train_mse);
      EXPECT_TRUE(std::isfinite(r.trace.records.back().test_mse));
    }
}

TEST(ConjugateGradient, Deterministic) {
  const GeneratedInstance g = synthetic({15, 15, 15}, {{3, 3, 3}}, 8.0, 5);
  SolverConfig cfg;
  cfg.seed = 7;
  cfg.max_iters = 40;
  EXPECT_TRUE(same_trace(conjugate_gradient(g.instance, cfg).trace,
                         conjugate_gradient(g.instance, cfg).trace));
  EXPECT_TRUE(same_trace(gradient_descent(g.instance, cfg).trace,
                         gradient_descent(g.instance, cfg).trace));
}

TEST(ConjugateGradient, ValidationTracking) {
  const GeneratedInstance g = synthetic({15, 15, 15}, {{2, 2, 2}}, 12.0, 6);
  CompletionInstance inst = split(g.instance.train, {0.8, 0.2, 0.0}, 3, g.instance.rank);
  inst.test = g.instance.test;
  SolverConfig cfg;
  cfg.validation_early_stop = true;
  cfg.max_iters = 50;
  const SolverResult r = conjugate_gradient(inst, cfg);
  for (const TraceRecord &rec : r.trace.records) EXPECT_TRUE(std::isfinite(rec.validation_mse));
  if (r.trace.termination == Termination::ValidationIncrease) {
    // The point that raised the validation MSE is not accepted.
    EXPECT_NEAR(mse(r.point, *inst.validation), r.trace.records.back().validation_mse, 1e-15);
  }
  const SolverResult plain = conjugate_gradient(g.instance, cfg);
  EXPECT_TRUE(std::isnan(plain.trace.records.back().validation_mse));
}

TEST(Trace, CsvHeaderAndRows) {
  const GeneratedInstance g = synthetic({10, 10, 10}, {{2, 2, 2}}, 8.0, 7);
  SolverConfig cfg;
  cfg.max_iters = 5;
  const SolverResult r = gradient_descent(g.instance, cfg);
  std::stringstream out;
  write_trace_csv(out, r.trace);
  std::string line;
  std::getline(out, line);
  EXPECT_EQ(line, "iter,wall_seconds,train_mse,test_mse,grad_norm,step_size,beta");
  std::size_t rows = 0;
  while (std::getline(out, line)) ++rows;
  EXPECT_EQ(rows, r.trace.records.size());
  EXPECT_EQ(r.trace.first_iter_below(-1.0), std::nullopt);
  EXPECT_EQ(r.trace.first_iter_below(1e300), 0);
}

TEST(Sgd, StepSchedule) {
  EXPECT_EQ(sgd_step_size(10.0, 1e-7, 0), 10.0);
  for (long long k : {0LL, 5LL, 1000000LL}) EXPECT_EQ(sgd_step_size(3.0, 0.0, k), 3.0);
  EXPECT_NEAR(sgd_step_size(10.0, 1e-7, 1000000), 10.0 / 2.0, 1e-12);
}

TEST(Sgd, PretrainSelection) {
  const GeneratedInstance g = synthetic({20, 20, 100}, {{2, 2, 2}}, 40.0, 8);
  SolverConfig cfg;
  cfg.sgd.gamma0_candidates = {7.5};
  EXPECT_EQ(pretrain_gamma0(g.instance, cfg), 7.5);

  cfg.sgd.gamma0_candidates = {8, 9, 10, 11, 12};
  const double a = pretrain_gamma0(g.instance, cfg);
  EXPECT_EQ(a, pretrain_gamma0(g.instance, cfg));
  EXPECT_NE(std::find(cfg.sgd.gamma0_candidates.begin(), cfg.sgd.gamma0_candidates.end(), a),
            cfg.sgd.gamma0_candidates.end());

  cfg.sgd.gamma0_candidates = {1e12, 1.0};
  EXPECT_EQ(pretrain_gamma0(g.instance, cfg), 1.0);
  cfg.sgd.gamma0_candidates = {1e12, 1e13};
  EXPECT_THROW(pretrain_gamma0(g.instance, cfg), std::runtime_error);
  cfg.sgd.gamma0_candidates.clear();
  EXPECT_THROW(pretrain_gamma0(g.instance, cfg), std::invalid_argument);
}

TEST(Sgd, EpochRecordsAndProgress) {
  const GeneratedInstance g = synthetic({20, 20, 100}, {{2, 2, 2}}, 40.0, 9);
  SolverConfig cfg;
  cfg.sgd.gamma0 = 10.0;
  cfg.sgd.epochs = 4;
  cfg.seed = 3;
  const SolverResult r = sgd(g.instance, cfg);
  EXPECT_EQ(r.trace.termination, Termination::EpochsCompleted);
  ASSERT_EQ(r.trace.records.size(), 5u);
  expect_well_formed(r.trace, false);
  EXPECT_LT(r.trace.records.back().train_mse, r.trace.records.front().train_mse);
  EXPECT_TRUE(same_trace(r.trace, sgd(g.instance, cfg).trace));
}

TEST(Sgd, EmptySlicesAreSkipped) {
  const GeneratedInstance g = synthetic({10, 10, 6}, {{2, 2, 2}}, 3.0, 10);
  std::vector<SparseEntry> kept;
  for (const SparseEntry &e : g.instance.train.entries())
    if (e.index[2] != 2) kept.push_back(e);
  CompletionInstance inst = g.instance;
  inst.train = SparseTensor3(inst.dims, kept);
  SolverConfig cfg;
  cfg.sgd.gamma0 = 5.0;
  cfg.sgd.epochs = 3;
  const SolverResult r = sgd(inst, cfg);
  EXPECT_NE(r.trace.message.find("skipped"), std::string::npos);
}

TEST(Sgd, DivergenceStopsTheRun) {
  const GeneratedInstance g = synthetic({10, 10, 20}, {{2, 2, 2}}, 10.0, 11);
  SolverConfig cfg;
  cfg.sgd.gamma0 = 1e12;
  cfg.sgd.epochs = 5;
  const SolverResult r = sgd(g.instance, cfg);
  EXPECT_EQ(r.trace.termination, Termination::Diverged);
  for (const TraceRecord &rec : r.trace.records) EXPECT_TRUE(std::isfinite(rec.train_mse));
}
