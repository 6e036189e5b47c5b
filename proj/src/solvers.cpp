#include "tucker/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace tucker {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void check_invariants(const TuckerPoint &x, int iter) {
  if (x.orthonormality_error() > 1e-10 || x.gram_consistency_error() > 1e-12)
    throw std::logic_error("iterate " + std::to_string(iter) + " violates point invariants");
}

double optional_mse(const TuckerPoint &x, const SparseTensor3 &set, bool enabled) {
  return enabled && !set.empty() ? mse(x, set) : kNaN;
}

SolverResult run_batch(const CompletionInstance &inst, const SolverConfig &cfg,
                       std::optional<TuckerPoint> x0, bool conjugate) {
  cfg.validate();
  inst.validate();
  const Metric kind = cfg.metric;
  const Stopwatch clock;
  TuckerPoint x = x0 ? std::move(*x0) : initial_point(inst, cfg);

  SolverTrace trace;
  auto validation_mse = [&](const TuckerPoint &p) {
    return inst.validation ? mse(p, *inst.validation) : kNaN;
  };
  auto record = [&](int iter, const TuckerPoint &p, double f, double gnorm, double step,
                    double beta, double val) {
    trace.records.push_back({iter, clock.seconds(), f, optional_mse(p, inst.test, cfg.track_test),
                             gnorm, step, beta, val});
  };

  double f = cost(x, inst);
  TangentVector grad = riemannian_grad(x, inst, kind);
  double gnorm2 = metric(x, grad, grad, kind);
  double val = validation_mse(x);
  record(0, x, f, std::sqrt(gnorm2), 0.0, 0.0, val);
  if (f <= cfg.train_mse_tol) {
    trace.termination = Termination::TrainTolerance;
    return {std::move(x), std::move(trace)};
  }

  TangentVector dir = -grad;
  trace.termination = Termination::MaxIterations;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    if (!(gnorm2 > 0.0)) {
      trace.termination = Termination::Stationary;
      break;
    }
    double slope = metric(x, grad, dir, kind);
    if (!(slope < 0.0)) {
      dir = -grad;
      slope = -gnorm2;
    }

    double step = cfg.fallback_step;
    try {
      const double guess = step_size_guess(x, inst, dir);
      if (guess > 0.0 && std::isfinite(guess)) step = guess;
    } catch (const DegenerateDirectionError &) {
    }

    std::optional<TuckerPoint> next;
    double f_next = 0.0;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      try {
        TuckerPoint cand = retract(x, dir, step);
        const double fc = cost(cand, inst);
        if (std::isfinite(fc) && fc <= f + cfg.c1 * step * slope) {
          next.emplace(std::move(cand));
          f_next = fc;
          break;
        }
      } catch (const RankDeficientError &) {
        // a too-long step collapsed a factor or the core; shrink it
      }
      step *= cfg.rho;
    }
    if (!next) {
      trace.termination = Termination::LinesearchFailure;
      trace.message = "Armijo backtracking exhausted after " +
                      std::to_string(cfg.max_backtracks) + " contractions";
      break;
    }

    TangentVector grad_next = riemannian_grad(*next, inst, kind);
    const double gnorm2_next = metric(*next, grad_next, grad_next, kind);
    TangentVector dir_next = -grad_next;
    double beta = 0.0;
    if (conjugate) {
      try {
        const TangentVector moved = step * dir;
        const TangentVector tdir = transport(x, moved, *next, dir, kind, cfg.lyapunov);
        const TangentVector tgrad = transport(x, moved, *next, grad, kind, cfg.lyapunov);
        const TangentVector y = grad_next - tgrad;
        const double num = metric(*next, grad_next, y, kind);
        const double den = cfg.beta_rule == BetaRule::HestenesStiefelPlus
                               ? metric(*next, tdir, y, kind)
                               : gnorm2;
        beta = num / den;
        if (!std::isfinite(beta) || beta < 0.0) beta = 0.0;
        if (beta > 0.0) {
          dir_next = -grad_next + beta * tdir;
          if (metric(*next, grad_next, dir_next, kind) >= 0.0) {
            dir_next = -grad_next;
            beta = 0.0;
          }
        }
      } catch (const ConvergenceError &) {
        dir_next = -grad_next;
        beta = 0.0;
      }
    }

    const double val_next = validation_mse(*next);
    if (cfg.validation_early_stop && inst.validation && val_next > val) {
      trace.termination = Termination::ValidationIncrease;
      trace.message = "validation MSE increased at iteration " + std::to_string(iter);
      break;
    }

    x = std::move(*next);
    f = f_next;
    grad = std::move(grad_next);
    gnorm2 = gnorm2_next;
    dir = std::move(dir_next);
    val = val_next;
    record(iter, x, f, std::sqrt(gnorm2), step, beta, val);
    if (cfg.debug_checks && iter % 10 == 0) check_invariants(x, iter);
    if (f <= cfg.train_mse_tol) {
      trace.termination = Termination::TrainTolerance;
      break;
    }
  }
  return {std::move(x), std::move(trace)};
}

std::vector<SparseTensor3> frontal_slices(const SparseTensor3 &data) {
  const Index n3 = data.dims()[2];
  std::vector<std::vector<SparseEntry>> buckets(static_cast<std::size_t>(n3));
  for (std::size_t k = 0; k < data.nnz(); ++k)
    buckets[static_cast<std::size_t>(data.index(k)[2])].push_back({data.index(k), data.value(k)});
  std::vector<SparseTensor3> out;
  out.reserve(buckets.size());
  for (auto &b : buckets) out.emplace_back(data.dims(), std::move(b));
  return out;
}

struct SgdOutcome {
  bool diverged = false;
  long long updates = 0;
  long long skipped = 0;
  double last_grad_norm = 0.0;
};

/// `count` updates on slices drawn uniformly from [0, slice_limit).
SgdOutcome sgd_updates(TuckerPoint &x, const std::vector<SparseTensor3> &slices,
                       std::size_t slice_limit, long long count, long long k0, double gamma0,
                       const SolverConfig &cfg, std::mt19937_64 &rng) {
  SgdOutcome out;
  out.updates = k0;
  std::uniform_int_distribution<std::size_t> pick(0, slice_limit - 1);
  for (long long n = 0; n < count; ++n) {
    const SparseTensor3 &slice = slices[pick(rng)];
    if (slice.empty()) {
      ++out.skipped;
      continue;
    }
    const double gamma = sgd_step_size(gamma0, cfg.sgd.lambda, out.updates);
    const double weight = cfg.sgd.slice_weight_scale * static_cast<double>(slice.nnz());
    try {
      const TangentVector g = slice_gradient(x, slice, weight, cfg.metric);
      out.last_grad_norm = metric_norm(x, g, cfg.metric);
      if (!std::isfinite(out.last_grad_norm)) {
        out.diverged = true;
        return out;
      }
      x = retract(x, g, -gamma);
    } catch (const RankDeficientError &) {
      out.diverged = true;
      return out;
    }
    ++out.updates;
  }
  return out;
}

} // namespace

TuckerPoint initial_point(const CompletionInstance &inst, const SolverConfig &cfg) {
  TuckerPoint x = random_point(inst.dims, inst.rank, cfg.seed);
  if (!(cfg.init_relative_scale > 0.0)) return x;
  const double data = std::sqrt(inst.train.squared_norm());
  const double pred = std::sqrt(tucker_eval_sparse(x, inst.train).squared_norm());
  if (!(data > 0.0) || !(pred > 0.0)) return x;
  return TuckerPoint(x.factors(), (cfg.init_relative_scale * data / pred) * x.core());
}

void SolverConfig::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (!(train_mse_tol > 0.0)) throw std::invalid_argument("train_mse_tol must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("c1 must lie in (0,1)");
  if (!(fallback_step > 0.0)) throw std::invalid_argument("fallback_step must be positive");
  if (!(sgd.lambda >= 0.0)) throw std::invalid_argument("sgd lambda must be non-negative");
  if (!(sgd.pretrain_fraction > 0.0 && sgd.pretrain_fraction <= 1.0))
    throw std::invalid_argument("pretrain_fraction must lie in (0,1]");
}

std::string to_string(Termination t) {
  switch (t) {
  case Termination::TrainTolerance: return "train_mse_tol";
  case Termination::MaxIterations: return "max_iters";
  case Termination::ValidationIncrease: return "validation_increase";
  case Termination::LinesearchFailure: return "linesearch failure";
  case Termination::Stationary: return "stationary";
  case Termination::NumericalFailure: return "numerical failure";
  case Termination::Diverged: return "diverged";
  case Termination::EpochsCompleted: return "epochs";
  }
  return "unknown";
}

std::optional<int> SolverTrace::first_iter_below(double threshold) const {
  for (const auto &r : records)
    if (r.train_mse <= threshold) return r.iter;
  return std::nullopt;
}

SolverResult gradient_descent(const CompletionInstance &inst, const SolverConfig &cfg,
                              std::optional<TuckerPoint> x0) {
  return run_batch(inst, cfg, std::move(x0), false);
}

SolverResult conjugate_gradient(const CompletionInstance &inst, const SolverConfig &cfg,
                                std::optional<TuckerPoint> x0) {
  return run_batch(inst, cfg, std::move(x0), true);
}

double sgd_step_size(double gamma0, double lambda, long long k) {
  return gamma0 / (1.0 + gamma0 * lambda * static_cast<double>(k));
}

double pretrain_gamma0(const CompletionInstance &inst, const SolverConfig &cfg,
                       std::optional<TuckerPoint> x0) {
  cfg.validate();
  const auto &candidates = cfg.sgd.gamma0_candidates;
  if (candidates.empty()) throw std::invalid_argument("gamma0_candidates is empty");
  if (candidates.size() == 1) return candidates.front();

  const TuckerPoint start = x0 ? std::move(*x0) : initial_point(inst, cfg);
  const Index n3 = inst.dims[2];
  const auto limit = static_cast<std::size_t>(
      std::clamp<Index>(static_cast<Index>(std::ceil(cfg.sgd.pretrain_fraction * n3)), 1, n3));
  const std::vector<SparseTensor3> slices = frontal_slices(inst.train);
  std::vector<SparseEntry> subset_entries;
  for (std::size_t k = 0; k < limit; ++k) {
    const auto e = slices[k].entries();
    subset_entries.insert(subset_entries.end(), e.begin(), e.end());
  }
  if (subset_entries.empty()) throw EmptySetError("pre-training subset has no train entries");
  const SparseTensor3 subset(inst.dims, std::move(subset_entries));

  double best = 0.0;
  double best_mse = std::numeric_limits<double>::infinity();
  std::ostringstream tried;
  for (double gamma0 : candidates) {
    tried << (tried.tellp() > 0 ? ", " : "") << gamma0;
    TuckerPoint x = start;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const SgdOutcome o = sgd_updates(x, slices, limit, static_cast<long long>(limit), 0, gamma0,
                                     cfg, rng);
    if (o.diverged) continue;
    const double m = mse(x, subset);
    if (std::isfinite(m) && m < best_mse) {
      best_mse = m;
      best = gamma0;
    }
  }
  if (!std::isfinite(best_mse))
    throw std::runtime_error("pre-training diverged for every gamma0 candidate: " + tried.str());
  return best;
}

SolverResult sgd(const CompletionInstance &inst, const SolverConfig &cfg,
                 std::optional<TuckerPoint> x0) {
  cfg.validate();
  inst.validate();
  TuckerPoint x = x0 ? std::move(*x0) : initial_point(inst, cfg);
  const double gamma0 = cfg.sgd.gamma0 ? *cfg.sgd.gamma0 : pretrain_gamma0(inst, cfg, x);
  const std::vector<SparseTensor3> slices = frontal_slices(inst.train);
  const auto n3 = static_cast<std::size_t>(inst.dims[2]);

  const Stopwatch clock;
  SolverTrace trace;
  trace.message = "gamma0=" + std::to_string(gamma0);
  auto record = [&](int epoch, double step, double gnorm) {
    const double f = cost(x, inst);
    const double val = inst.validation ? mse(x, *inst.validation) : kNaN;
    trace.records.push_back(
        {epoch, clock.seconds(), f, optional_mse(x, inst.test, cfg.track_test), gnorm, step, 0.0,
         val});
    return f;
  };
  double f = record(0, gamma0, 0.0);
  trace.termination = Termination::EpochsCompleted;
  if (f <= cfg.train_mse_tol) {
    trace.termination = Termination::TrainTolerance;
    return {std::move(x), std::move(trace)};
  }

  std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  long long k = 0;
  long long skipped = 0;
  for (int epoch = 1; epoch <= cfg.sgd.epochs; ++epoch) {
    const SgdOutcome o =
        sgd_updates(x, slices, n3, static_cast<long long>(n3), k, gamma0, cfg, rng);
    k = o.updates;
    skipped += o.skipped;
    if (o.diverged) {
      trace.termination = Termination::Diverged;
      trace.message += "; diverged in epoch " + std::to_string(epoch);
      break;
    }
    f = record(epoch, sgd_step_size(gamma0, cfg.sgd.lambda, k), o.last_grad_norm);
    if (!std::isfinite(f)) {
      trace.termination = Termination::Diverged;
      trace.message += "; non-finite train MSE in epoch " + std::to_string(epoch);
      break;
    }
    if (f <= cfg.train_mse_tol) {
      trace.termination = Termination::TrainTolerance;
      break;
    }
  }
  if (skipped > 0) {
    std::cerr << "warning: sgd skipped " << skipped << " draws of empty frontal slices\n";
    trace.message += "; skipped " + std::to_string(skipped) + " empty slices";
  }
  return {std::move(x), std::move(trace)};
}

void write_trace_csv(std::ostream &out, const SolverTrace &trace) {
  out << "iter,wall_seconds,train_mse,test_mse,grad_norm,step_size,beta\n";
  char buf[256];
  for (const auto &r : trace.records) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.wall_seconds, r.train_mse, r.test_mse, r.grad_norm, r.step_size, r.beta);
    out << buf;
  }
}

void write_trace_csv(const std::filesystem::path &path, const SolverTrace &trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(out, trace);
}

} // namespace tucker
