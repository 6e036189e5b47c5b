#include "oracles.hpp"
#include "test_util.hpp"
#include "tucker/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace tucker;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("tucker_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::set<Coord> support_of(const SparseTensor3 &s) {
  return {s.indices().begin(), s.indices().end()};
}

} // namespace

TEST(ManifoldDim, ClosedForms) {
  EXPECT_EQ(manifold_dim({100, 100, 100}, {{10, 10, 10}}), 3700);
  for (Index n : {1, 2, 7, 40}) EXPECT_EQ(manifold_dim({n, n, n}, {{1, 1, 1}}), 3 * (n - 1) + 1);
  EXPECT_EQ(manifold_dim({6, 5, 4}, {{3, 2, 2}}), 31);
}

TEST(ManifoldDim, MatchesJacobianRank) {
  EXPECT_EQ(oracle::parametrization_rank({6, 5, 4}, {3, 2, 2}, 1), 31);
  EXPECT_EQ(oracle::parametrization_rank({5, 5, 4}, {2, 3, 2}, 2),
            manifold_dim({5, 5, 4}, {{2, 3, 2}}));
}

TEST(Generate, SizesDisjointnessAndDeterminism) {
  SyntheticSpec spec;
  spec.dims = {100, 100, 100};
  spec.rank = {{10, 10, 10}};
  spec.seed = 3;
  const GeneratedInstance g = generate_instance(spec);
  EXPECT_EQ(g.instance.train.nnz(), 37000u);
  EXPECT_EQ(g.instance.test.nnz(), 37000u);
  EXPECT_TRUE(disjoint(g.instance.train, g.instance.test));
  EXPECT_NO_THROW(g.instance.validate());

  const GeneratedInstance again = generate_instance(spec);
  EXPECT_EQ(again.instance.train, g.instance.train);
  EXPECT_EQ(again.instance.test, g.instance.test);

  spec.test_size = 500;
  EXPECT_EQ(generate_instance(spec).instance.test.nnz(), 500u);
}

TEST(Generate, NoiseFreeValuesAreExact) {
  SyntheticSpec spec;
  spec.dims = {12, 10, 8};
  spec.rank = {{3, 2, 2}};
  spec.os_ratio = 4.0;
  spec.seed = 5;
  const GeneratedInstance g = generate_instance(spec);
  const DenseTensor3 full = oracle::full(g.truth);
  for (const SparseTensor3 *s : {&g.instance.train, &g.instance.test})
    for (std::size_t k = 0; k < s->nnz(); ++k) {
      const auto &i = s->index(k);
      EXPECT_NEAR(s->value(k), full(i[0], i[1], i[2]), 1e-13);
    }
  EXPECT_EQ(mse(g.truth, g.instance.train), 0.0);
}

TEST(Generate, NoiseScale) {
  SyntheticSpec spec;
  spec.dims = {20, 20, 20};
  spec.rank = {{3, 3, 3}};
  spec.noise_eps = 1e-3;
  spec.seed = 6;
  const GeneratedInstance g = generate_instance(spec);
  const SparseTensor3 clean = tucker_eval_sparse(g.truth, g.instance.train);
  double noise = 0.0;
  for (std::size_t k = 0; k < clean.nnz(); ++k) {
    const double e = g.instance.train.value(k) - clean.value(k);
    noise += e * e;
  }
  EXPECT_NEAR(std::sqrt(noise), 1e-3 * std::sqrt(clean.squared_norm()), 1e-12);
  EXPECT_NEAR(g.train_noise_norm, std::sqrt(noise), 1e-12);
  EXPECT_NEAR(g.clean_train_norm, std::sqrt(clean.squared_norm()), 1e-12);
}

TEST(Generate, DiagDecayCore) {
  const DenseTensor3 c = diag_decay_core(5, 100.0);
  EXPECT_NEAR(c(0, 0, 0) / c(4, 4, 4), 100.0, 1e-10);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      for (Index k = 0; k < 5; ++k)
        if (i != j || j != k) EXPECT_EQ(c(i, j, k), 0.0);

  SyntheticSpec spec;
  spec.dims = {20, 20, 20};
  spec.rank = {{3, 3, 3}};
  spec.core_kind = CoreKind::DiagDecay;
  spec.cn = 50.0;
  const GeneratedInstance g = generate_instance(spec);
  EXPECT_NEAR(g.truth.core()(0, 0, 0) / g.truth.core()(2, 2, 2), 50.0, 1e-10);
}

TEST(Generate, RejectsInvalidSpecs) {
  SyntheticSpec spec;
  spec.dims = {5, 5, 5};
  spec.rank = {{2, 2, 2}};
  spec.os_ratio = 100.0;
  EXPECT_THROW(generate_instance(spec), std::invalid_argument);
  spec.os_ratio = 2.0;
  spec.core_kind = CoreKind::DiagDecay;
  spec.cn = 1.0;
  EXPECT_THROW(generate_instance(spec), std::invalid_argument);
}

TEST(Split, SizesDisjointnessAndUnion) {
  std::mt19937_64 rng(1);
  const SparseTensor3 data = testing_util::random_support({20, 10, 10}, 1000, rng);
  const CompletionInstance inst = split(data, {0.8, 0.1, 0.1}, 4);
  ASSERT_TRUE(inst.validation.has_value());
  EXPECT_EQ(inst.train.nnz(), 800u);
  EXPECT_EQ(inst.validation->nnz(), 100u);
  EXPECT_EQ(inst.test.nnz(), 100u);

  std::set<Coord> all;
  std::size_t total = 0;
  for (const SparseTensor3 *s : {&inst.train, &*inst.validation, &inst.test}) {
    for (std::size_t k = 0; k < s->nnz(); ++k) {
      EXPECT_TRUE(all.insert(s->index(k)).second);
      ++total;
    }
  }
  EXPECT_EQ(total, data.nnz());
  EXPECT_EQ(all, support_of(data));
  std::map<Coord, double> value;
  for (const SparseEntry &e : data.entries()) value[e.index] = e.value;
  for (const SparseTensor3 *s : {&inst.train, &*inst.validation, &inst.test})
    for (const SparseEntry &e : s->entries()) EXPECT_EQ(value.at(e.index), e.value);

  EXPECT_EQ(split(data, {0.8, 0.1, 0.1}, 4).train, inst.train);
  EXPECT_NE(split(data, {0.8, 0.1, 0.1}, 5).train, inst.train);
}

TEST(Split, AllTrainAndErrors) {
  std::mt19937_64 rng(2);
  const SparseTensor3 data = testing_util::random_support({5, 5, 5}, 20, rng);
  const CompletionInstance inst = split(data, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(inst.train, data);
  EXPECT_FALSE(inst.validation.has_value());
  EXPECT_TRUE(inst.test.empty());
  EXPECT_THROW(split(data, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  EXPECT_THROW(split(data, {0.98, 0.01, 0.01}, 1), EmptySetError);
}

TEST(Files, MatrixPointAndInstanceRoundTrip) {
  const fs::path dir = scratch_dir("files");
  std::mt19937_64 rng(3);
  const Matrix m = testing_util::gaussian(4, 3, rng);
  write_matrix(dir / "m.txt", m);
  EXPECT_EQ(read_matrix(dir / "m.txt"), m);

  const TuckerPoint x = random_point({6, 5, 4}, {{3, 2, 2}}, 4);
  write_point(dir / "point", x);
  const TuckerPoint y = read_point(dir / "point");
  EXPECT_EQ(y.core(), x.core());
  for (int d = 0; d < 3; ++d) EXPECT_EQ(y.u(d), x.u(d));

  SyntheticSpec spec;
  spec.dims = {10, 9, 8};
  spec.rank = {{2, 2, 2}};
  spec.os_ratio = 5.0;
  const GeneratedInstance g = generate_instance(spec);
  CompletionInstance inst = split(g.instance.train, {0.9, 0.1, 0.0}, 1, spec.rank);
  inst.test = g.instance.test;
  write_instance(dir / "inst", inst, &g.truth, &spec);
  const CompletionInstance back = read_instance(dir / "inst");
  EXPECT_EQ(back.train, inst.train);
  EXPECT_EQ(back.test, inst.test);
  ASSERT_TRUE(back.validation.has_value());
  EXPECT_EQ(*back.validation, *inst.validation);
  EXPECT_EQ(back.rank, inst.rank);
  EXPECT_EQ(read_point(dir / "inst" / "truth").core(), g.truth.core());
  fs::remove_all(dir);
}

TEST(Files, MatrixErrorsNameTheLine) {
  const auto line_of = [](const std::string &text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_matrix(in);
    } catch (const FormatError &e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("2 2\n1 2\n3\n"), 3u);
  EXPECT_EQ(line_of("2\n"), 1u);
  EXPECT_EQ(line_of("1 2\n1 2\n5 6\n"), 3u);
  EXPECT_EQ(line_of("1 2\n1 x\n"), 2u);
}

TEST(Cases, SeedRulesAndTailCheck) {
  EXPECT_EQ(required_seeds(5), 4);
  EXPECT_EQ(required_seeds(10), 8);
  EXPECT_EQ(required_seeds(3), 3);
  EXPECT_EQ(required_seeds(1), 1);
  EXPECT_TRUE(tail_non_increasing({5, 6, 7, 3, 2, 2, 1}));
  EXPECT_FALSE(tail_non_increasing({5, 4, 3, 2, 1, 1.5}));
  EXPECT_THROW(run_case("s3", CaseOptions{}), std::invalid_argument);
}
