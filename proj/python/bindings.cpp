#include "tucker/harness.hpp"
#include "tucker/parallel.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace tucker;

namespace {

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

DenseTensor3 to_dense(const FArray &a) {
  if (a.ndim() != 3) throw ShapeError("expected a 3-d array");
  const Dims dims{a.shape(0), a.shape(1), a.shape(2)};
  return DenseTensor3(dims, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const DenseTensor3 &t) {
  const auto &d = t.dims();
  const auto s = static_cast<py::ssize_t>(sizeof(double));
  py::array_t<double> out({d[0], d[1], d[2]}, {s, s * d[0], s * d[0] * d[1]});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

Dims to_dims(const std::array<Index, 3> &d) { return {d[0], d[1], d[2]}; }

SparseTensor3 make_sparse(const std::array<Index, 3> &dims,
                          const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> &idx,
                          const py::array_t<double, py::array::c_style | py::array::forcecast> &vals) {
  if (idx.ndim() != 2 || idx.shape(1) != 3) throw ShapeError("indices must have shape (nnz, 3)");
  if (vals.ndim() != 1 || vals.shape(0) != idx.shape(0))
    throw ShapeError("values must have shape (nnz,)");
  std::vector<SparseEntry> e(static_cast<std::size_t>(idx.shape(0)));
  const auto ix = idx.unchecked<2>();
  const auto v = vals.unchecked<1>();
  for (py::ssize_t k = 0; k < idx.shape(0); ++k)
    e[k] = {Coord{static_cast<std::int32_t>(ix(k, 0)), static_cast<std::int32_t>(ix(k, 1)),
                  static_cast<std::int32_t>(ix(k, 2))},
            v(k)};
  return SparseTensor3(to_dims(dims), std::move(e));
}

py::dict blocks_to_dict(const TangentVector &v) {
  py::dict d;
  d["u1"] = v.u[0];
  d["u2"] = v.u[1];
  d["u3"] = v.u[2];
  d["core"] = to_numpy(v.core);
  return d;
}

py::list trace_records(const SolverTrace &t) {
  py::list out;
  for (const auto &r : t.records) {
    py::dict d;
    d["iter"] = r.iter;
    d["wall_seconds"] = r.wall_seconds;
    d["train_mse"] = r.train_mse;
    d["test_mse"] = r.test_mse;
    d["grad_norm"] = r.grad_norm;
    d["step_size"] = r.step_size;
    d["beta"] = r.beta;
    d["validation_mse"] = r.validation_mse;
    out.append(d);
  }
  return out;
}

template <class F> auto solver_binding(F f) {
  return [f](const CompletionInstance &inst, const SolverConfig &cfg,
             std::optional<TuckerPoint> x0) {
    py::gil_scoped_release release;
    return f(inst, cfg, std::move(x0));
  };
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Riemannian Tucker tensor completion";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<EmptySetError>(m, "EmptySetError", PyExc_ValueError);
  py::register_exception<RankDeficientError>(m, "RankDeficientError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);

  py::enum_<Metric>(m, "Metric")
      .value("PRECONDITIONED", Metric::Preconditioned)
      .value("EUCLIDEAN", Metric::Euclidean);
  py::enum_<BetaRule>(m, "BetaRule")
      .value("HS_PLUS", BetaRule::HestenesStiefelPlus)
      .value("PR_PLUS", BetaRule::PolakRibierePlus);

  m.def("set_thread_count", &set_thread_count, py::arg("n"));
  m.def("thread_count", &thread_count);

  // tensors
  m.def("unfold", [](const FArray &t, int mode) { return unfold(to_dense(t), mode); },
        py::arg("tensor"), py::arg("mode"), "Mode-n unfolding, modes numbered 1..3.");
  m.def("fold",
        [](const Matrix &a, int mode, const std::array<Index, 3> &dims) {
          return to_numpy(fold(a, mode, to_dims(dims)));
        },
        py::arg("matrix"), py::arg("mode"), py::arg("dims"));
  m.def("mode_product",
        [](const FArray &t, const Matrix &v, int mode) {
          return to_numpy(mode_product(to_dense(t), v, mode));
        },
        py::arg("tensor"), py::arg("matrix"), py::arg("mode"));

  py::class_<SparseTensor3>(m, "SparseTensor3")
      .def(py::init(&make_sparse), py::arg("dims"), py::arg("indices"), py::arg("values"))
      .def_property_readonly("dims", [](const SparseTensor3 &s) { return s.dims(); })
      .def_property_readonly("nnz", &SparseTensor3::nnz)
      .def("indices",
           [](const SparseTensor3 &s) {
             py::array_t<std::int64_t> out({static_cast<py::ssize_t>(s.nnz()), py::ssize_t{3}});
             auto o = out.mutable_unchecked<2>();
             for (std::size_t k = 0; k < s.nnz(); ++k)
               for (int d = 0; d < 3; ++d) o(k, d) = s.index(k)[d];
             return out;
           })
      .def("values",
           [](const SparseTensor3 &s) {
             return py::array_t<double>(static_cast<py::ssize_t>(s.nnz()), s.values().data());
           })
      .def("__len__", &SparseTensor3::nnz)
      .def("__eq__", &SparseTensor3::operator==);
  m.def("read_sparse", py::overload_cast<const std::filesystem::path &>(&read_sparse),
        py::arg("path"));
  m.def("write_sparse",
        py::overload_cast<const std::filesystem::path &, const SparseTensor3 &>(&write_sparse),
        py::arg("path"), py::arg("tensor"));

  // points
  py::class_<TuckerPoint>(m, "TuckerPoint")
      .def(py::init([](const std::array<Matrix, 3> &u, const FArray &core) {
             return TuckerPoint(u, to_dense(core));
           }),
           py::arg("factors"), py::arg("core"))
      .def_property_readonly("factors", &TuckerPoint::factors)
      .def_property_readonly("core", [](const TuckerPoint &x) { return to_numpy(x.core()); })
      .def_property_readonly("dims", &TuckerPoint::dims)
      .def_property_readonly("rank", [](const TuckerPoint &x) { return x.rank().r; })
      .def("orthonormality_error", &TuckerPoint::orthonormality_error)
      .def("full", [](const TuckerPoint &x) { return to_numpy(tucker_dense(x)); })
      .def("evaluate",
           [](const TuckerPoint &x, const SparseTensor3 &s) { return tucker_eval_sparse(x, s); },
           py::arg("support"));
  m.def("random_point",
        [](const std::array<Index, 3> &dims, const std::array<Index, 3> &rank, std::uint64_t seed) {
          return random_point(to_dims(dims), MultilinearRank{rank}, seed);
        },
        py::arg("dims"), py::arg("rank"), py::arg("seed") = 0);

  // problem
  py::class_<CompletionInstance>(m, "CompletionInstance")
      .def(py::init([](const std::array<Index, 3> &rank, SparseTensor3 train,
                       std::optional<SparseTensor3> test, std::optional<SparseTensor3> val) {
             CompletionInstance inst;
             inst.dims = train.dims();
             inst.rank = MultilinearRank{rank};
             inst.test = test ? std::move(*test) : SparseTensor3(inst.dims, {});
             inst.train = std::move(train);
             inst.validation = std::move(val);
             inst.validate();
             return inst;
           }),
           py::arg("rank"), py::arg("train"), py::arg("test") = std::nullopt,
           py::arg("validation") = std::nullopt)
      .def_property_readonly("dims", [](const CompletionInstance &i) { return i.dims; })
      .def_property_readonly("rank", [](const CompletionInstance &i) { return i.rank.r; })
      .def_readonly("train", &CompletionInstance::train)
      .def_readonly("test", &CompletionInstance::test)
      .def_readonly("validation", &CompletionInstance::validation);

  m.def("mse", &mse, py::arg("point"), py::arg("data"));
  m.def("cost", &cost, py::arg("point"), py::arg("instance"));
  m.def("riemannian_grad",
        [](const TuckerPoint &x, const SparseTensor3 &data, Metric kind) {
          return blocks_to_dict(riemannian_grad(x, data, kind));
        },
        py::arg("point"), py::arg("data"), py::arg("metric") = Metric::Preconditioned,
        "Horizontal Riemannian gradient as a dict with u1, u2, u3, core.");
  m.def("manifold_dim",
        [](const std::array<Index, 3> &dims, const std::array<Index, 3> &rank) {
          return manifold_dim(to_dims(dims), MultilinearRank{rank});
        },
        py::arg("dims"), py::arg("rank"));
  m.def(
      "generate_instance",
      [](const std::array<Index, 3> &dims, const std::array<Index, 3> &rank, double os_ratio,
         std::optional<double> observed_fraction, std::optional<std::size_t> test_size,
         const std::string &core, double cn, double noise_eps, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.dims = to_dims(dims);
        spec.rank = MultilinearRank{rank};
        spec.os_ratio = os_ratio;
        spec.observed_fraction = observed_fraction;
        spec.test_size = test_size;
        if (core == "diag_decay")
          spec.core_kind = CoreKind::DiagDecay;
        else if (core != "gaussian")
          throw std::invalid_argument("core must be 'gaussian' or 'diag_decay'");
        spec.cn = cn;
        spec.noise_eps = noise_eps;
        spec.seed = seed;
        GeneratedInstance g = generate_instance(spec);
        return py::make_tuple(std::move(g.instance), std::move(g.truth));
      },
      py::arg("dims"), py::arg("rank"), py::arg("os_ratio") = 10.0,
      py::arg("observed_fraction") = std::nullopt, py::arg("test_size") = std::nullopt,
      py::arg("core") = "gaussian", py::arg("cn") = 100.0, py::arg("noise_eps") = 0.0,
      py::arg("seed") = 0, "Returns (instance, ground_truth_point).");
  m.def(
      "split",
      [](const SparseTensor3 &data, const std::array<double, 3> &fractions, std::uint64_t seed,
         const std::array<Index, 3> &rank) {
        return split(data, fractions, seed, MultilinearRank{rank});
      },
      py::arg("data"), py::arg("fractions"), py::arg("seed") = 0,
      py::arg("rank") = std::array<Index, 3>{1, 1, 1});

  // solvers
  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("train_mse_tol", &SolverConfig::train_mse_tol)
      .def_readwrite("rho", &SolverConfig::rho)
      .def_readwrite("c1", &SolverConfig::c1)
      .def_readwrite("beta_rule", &SolverConfig::beta_rule)
      .def_readwrite("metric", &SolverConfig::metric)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("validation_early_stop", &SolverConfig::validation_early_stop)
      .def_readwrite("track_test", &SolverConfig::track_test)
      .def_property(
          "sgd_gamma0", [](const SolverConfig &c) { return c.sgd.gamma0; },
          [](SolverConfig &c, std::optional<double> g) { c.sgd.gamma0 = g; })
      .def_property(
          "sgd_gamma0_candidates", [](const SolverConfig &c) { return c.sgd.gamma0_candidates; },
          [](SolverConfig &c, std::vector<double> v) { c.sgd.gamma0_candidates = std::move(v); })
      .def_property(
          "sgd_lambda", [](const SolverConfig &c) { return c.sgd.lambda; },
          [](SolverConfig &c, double v) { c.sgd.lambda = v; })
      .def_property(
          "sgd_epochs", [](const SolverConfig &c) { return c.sgd.epochs; },
          [](SolverConfig &c, int v) { c.sgd.epochs = v; });

  py::class_<SolverTrace>(m, "SolverTrace")
      .def_property_readonly("records", &trace_records)
      .def_property_readonly("termination",
                             [](const SolverTrace &t) { return to_string(t.termination); })
      .def_readonly("message", &SolverTrace::message)
      .def_property_readonly("iterations", &SolverTrace::iterations)
      .def("write_csv", [](const SolverTrace &t, const std::filesystem::path &p) {
        write_trace_csv(p, t);
      });

  auto as_tuple = [](SolverResult r) { return std::make_pair(std::move(r.point), std::move(r.trace)); };
  m.def("gradient_descent",
        [as_tuple](const CompletionInstance &inst, const SolverConfig &cfg,
                   std::optional<TuckerPoint> x0) {
          return as_tuple(solver_binding(&gradient_descent)(inst, cfg, std::move(x0)));
        },
        py::arg("instance"), py::arg("config") = SolverConfig{}, py::arg("x0") = std::nullopt);
  m.def("conjugate_gradient",
        [as_tuple](const CompletionInstance &inst, const SolverConfig &cfg,
                   std::optional<TuckerPoint> x0) {
          return as_tuple(solver_binding(&conjugate_gradient)(inst, cfg, std::move(x0)));
        },
        py::arg("instance"), py::arg("config") = SolverConfig{}, py::arg("x0") = std::nullopt);
  m.def("sgd",
        [as_tuple](const CompletionInstance &inst, const SolverConfig &cfg,
                   std::optional<TuckerPoint> x0) {
          return as_tuple(solver_binding(&sgd)(inst, cfg, std::move(x0)));
        },
        py::arg("instance"), py::arg("config") = SolverConfig{}, py::arg("x0") = std::nullopt);
  m.def("sgd_step_size", &sgd_step_size, py::arg("gamma0"), py::arg("lambda_"), py::arg("k"));
}
