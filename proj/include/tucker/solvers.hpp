#pragma once

#include "tucker/completion.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tucker {

enum class BetaRule { HestenesStiefelPlus, PolakRibierePlus };

struct SgdConfig {
  std::vector<double> gamma0_candidates{8, 9, 10, 11, 12};
  /// If set, skips pre-training and uses this initial step.
  std::optional<double> gamma0;
  double lambda = 1e-7;
  int epochs = 100;
  double pretrain_fraction = 0.1;
  /// Per-update objective is weight * (slice MSE) with
  /// weight = slice_weight_scale * |Omega_slice|; 0.5 makes each update the
  /// gradient of half the slice's squared residual.
  double slice_weight_scale = 0.5;
};

struct SolverConfig {
  int max_iters = 250;
  double train_mse_tol = 1e-12;
  double rho = 0.5;
  double c1 = 1e-4;
  int max_backtracks = 50;
  /// Trial step used when the linearized guess is degenerate.
  double fallback_step = 1.0;
  BetaRule beta_rule = BetaRule::HestenesStiefelPlus;
  Metric metric = Metric::Preconditioned;
  std::uint64_t seed = 0;
  /// Random starts are random_point(seed) with the core rescaled so that
  /// ||P_Omega(X0)|| = init_relative_scale * ||P_Omega(data)||; <= 0 keeps
  /// the unit Gaussian core.
  double init_relative_scale = 1e-2;
  SgdConfig sgd;
  bool validation_early_stop = false;
  bool track_test = true;
  /// Re-checks the TuckerPoint invariants every 10 iterations.
  bool debug_checks = false;
  CoupledLyapunovOptions lyapunov;

  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  double wall_seconds = 0.0;
  double train_mse = 0.0;
  double test_mse = 0.0; // NaN when not tracked
  double grad_norm = 0.0;
  double step_size = 0.0;
  double beta = 0.0;
  double validation_mse = 0.0; // NaN when no validation set
};

enum class Termination {
  TrainTolerance,
  MaxIterations,
  ValidationIncrease,
  LinesearchFailure,
  Stationary,
  NumericalFailure,
  Diverged,
  EpochsCompleted,
};

std::string to_string(Termination t);

struct SolverTrace {
  std::vector<TraceRecord> records;
  Termination termination = Termination::MaxIterations;
  std::string message;

  /// Iterations performed (records[0] describes the starting point).
  int iterations() const { return records.empty() ? 0 : records.back().iter; }
  /// First iteration whose train MSE is <= threshold, if any.
  std::optional<int> first_iter_below(double threshold) const;
};

struct SolverResult {
  TuckerPoint point;
  SolverTrace trace;
};

/// Starting point used when a solver is called without x0.
TuckerPoint initial_point(const CompletionInstance &inst, const SolverConfig &cfg);

/// Riemannian steepest descent with linearized initial step and Armijo
/// backtracking. Starts from `x0`, or initial_point(inst, cfg) when absent.
SolverResult gradient_descent(const CompletionInstance &inst, const SolverConfig &cfg,
                              std::optional<TuckerPoint> x0 = std::nullopt);

/// Riemannian nonlinear conjugate gradients (HS+ or PR+), with vector
/// transport, restart on non-descent directions, and Armijo backtracking.
SolverResult conjugate_gradient(const CompletionInstance &inst, const SolverConfig &cfg,
                                std::optional<TuckerPoint> x0 = std::nullopt);

/// gamma_k = gamma0 / (1 + gamma0 * lambda * k)
double sgd_step_size(double gamma0, double lambda, long long k);

/// Stochastic gradient descent over frontal slices sampled uniformly with
/// replacement; one epoch is n3 updates. The trace has one record per epoch.
/// gamma0 comes from cfg.sgd.gamma0 or pretrain_gamma0.
SolverResult sgd(const CompletionInstance &inst, const SolverConfig &cfg,
                 std::optional<TuckerPoint> x0 = std::nullopt);

/// One SGD epoch over the first pretrain_fraction of slices for each
/// candidate; returns the candidate with the lowest train MSE on that subset.
double pretrain_gamma0(const CompletionInstance &inst, const SolverConfig &cfg,
                       std::optional<TuckerPoint> x0 = std::nullopt);

/// CSV with header iter,wall_seconds,train_mse,test_mse,grad_norm,step_size,beta.
void write_trace_csv(std::ostream &out, const SolverTrace &trace);
void write_trace_csv(const std::filesystem::path &path, const SolverTrace &trace);

} // namespace tucker
