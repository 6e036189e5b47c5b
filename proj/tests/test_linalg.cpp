#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace tucker;
using testing_util::gaussian;
using testing_util::random_spd;

TEST(SymSkew, Identities) {
  std::mt19937_64 rng(1);
  const Matrix m = gaussian(4, 4, rng);
  EXPECT_LE((sym(m) + skew(m) - m).norm(), 1e-15);
  const Matrix s = m + m.transpose();
  EXPECT_TRUE(skew(s).isZero(0.0));
  EXPECT_EQ(sym(Matrix::Identity(3, 3)), Matrix::Identity(3, 3));
  EXPECT_THROW(sym(Matrix::Zero(2, 3)), ShapeError);
  EXPECT_THROW(skew(Matrix::Zero(3, 2)), ShapeError);
}

TEST(SpdGram, DecompositionAndRejection) {
  std::mt19937_64 rng(2);
  const Matrix m = random_spd(5, rng);
  const SpdGram g(m);
  const Matrix q = g.eigenvectors();
  const Matrix back = q * g.eigenvalues().asDiagonal() * q.transpose();
  EXPECT_LE((back - m).norm(), 1e-12 * m.norm());
  EXPECT_GT(g.eigenvalues().minCoeff(), 0.0);
  EXPECT_LE((g.matrix() - g.matrix().transpose()).norm(), 1e-14 * m.norm());
  const Matrix a = gaussian(3, 5, rng);
  EXPECT_LE((g.solve_right(a) * m - a).norm(), 1e-10 * a.norm());
  EXPECT_LE((m * g.solve_left(a.transpose()) - a.transpose()).norm(), 1e-10 * a.norm());

  Matrix singular = Matrix::Zero(3, 3);
  singular(0, 0) = 1.0;
  singular(1, 1) = 1.0;
  EXPECT_THROW(SpdGram{singular}, RankDeficientError);

  const SpdGram avg = g.averaged_with_identity();
  EXPECT_LE((avg.matrix() - 0.5 * (Matrix::Identity(5, 5) + m)).norm(), 1e-12 * m.norm());
}

TEST(LyapSpd, TrivialCases) {
  std::mt19937_64 rng(3);
  const Matrix c = gaussian(4, 4, rng);
  EXPECT_LE((lyap_spd(SpdGram::identity(4), c) - 0.5 * c).norm(), 1e-15 * c.norm());
  EXPECT_TRUE(lyap_spd(SpdGram(random_spd(4, rng)), Matrix::Zero(4, 4)).isZero(0.0));
  EXPECT_THROW(lyap_spd(SpdGram::identity(3), c), ShapeError);
}

TEST(LyapSpd, MatchesKroneckerSolve) {
  std::mt19937_64 rng(4);
  const Matrix m = random_spd(5, rng);
  const Matrix a = gaussian(5, 5, rng);
  const Matrix c = a + a.transpose();
  const Matrix s = lyap_spd(SpdGram(m), c);
  const Matrix ref = oracle::lyap_kron(m, c);
  EXPECT_LE((s - ref).norm(), 1e-10 * ref.norm());
  EXPECT_LE((s * m + m * s - c).norm(), 1e-10 * c.norm());
  EXPECT_LE((s - s.transpose()).norm(), 1e-12 * s.norm());
}

TEST(LyapSpd, ResidualOverThousandPairs) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(1, 10);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index r = size(rng);
    const Matrix m = random_spd(r, rng);
    const Matrix a = gaussian(r, r, rng);
    const Matrix c = a + a.transpose();
    const Matrix s = lyap_spd(SpdGram(m), c);
    worst = std::max(worst, (s * m + m * s - c).norm() / c.norm());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(PolarFactor, Oracles) {
  std::mt19937_64 rng(6);
  const Matrix q = polar_factor(gaussian(7, 3, rng));
  EXPECT_LE((polar_factor(q) - q).norm(), 1e-13);

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 0.5, 3.0, 20.0;
  EXPECT_LE((polar_factor(q * d) - q).norm(), 1e-13);

  const Matrix a = gaussian(7, 3, rng);
  const Matrix p = polar_factor(a);
  EXPECT_LE((p - oracle::polar_eig(a)).norm(), 1e-12);
  EXPECT_LE((p.transpose() * p - Matrix::Identity(3, 3)).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
  EXPECT_LE((a - p * es.operatorSqrt()).norm(), 1e-10 * a.norm());

  const Matrix spd = random_spd(3, rng);
  EXPECT_LE((polar_factor(p * spd) - p).norm(), 1e-12);
}

TEST(PolarFactor, RejectsRankDeficient) {
  Matrix a = Matrix::Zero(5, 2);
  a(0, 0) = 1.0;
  a(1, 0) = 1.0;
  EXPECT_THROW(polar_factor(a), RankDeficientError);
  EXPECT_THROW(polar_factor(Matrix::Zero(2, 3)), ShapeError);
}

TEST(PcgLinear, IdentityZeroAndDenseSolve) {
  const LinearOperator id = [](const Vector &v) { return v; };
  Vector b = Vector::LinSpaced(6, 1.0, 6.0);
  const PcgResult one = pcg_linear(id, id, b, 1e-12, 10);
  EXPECT_EQ(one.iterations, 1);
  EXPECT_LE((one.x - b).norm(), 1e-14);

  const PcgResult zero = pcg_linear(id, id, Vector::Zero(6), 1e-12, 10);
  EXPECT_TRUE(zero.x.isZero(0.0));

  std::mt19937_64 rng(7);
  const Matrix a = random_spd(10, rng);
  b = gaussian(10, 1, rng);
  const Vector diag = a.diagonal();
  const PcgResult r = pcg_linear([&](const Vector &v) -> Vector { return a * v; },
                                 [&](const Vector &v) -> Vector { return v.cwiseQuotient(diag); }, b,
                                 1e-13, 200);
  const Vector ref = a.llt().solve(b);
  EXPECT_LE((r.x - ref).norm(), 1e-8 * ref.norm());
  EXPECT_LE(r.relative_residual, 1e-13);
}

TEST(PcgLinear, BreakdownAndNonConvergence) {
  const LinearOperator neg = [](const Vector &v) -> Vector { return -v; };
  const LinearOperator id = [](const Vector &v) { return v; };
  try {
    pcg_linear(neg, id, Vector::Ones(3), 1e-10, 10);
    FAIL() << "expected breakdown";
  } catch (const ConvergenceError &e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
  Matrix a = Matrix::Identity(20, 20);
  a.diagonal() = Vector::LinSpaced(20, 1.0, 1e6);
  const LinearOperator op = [&](const Vector &v) -> Vector { return a * v; };
  try {
    pcg_linear(op, id, Vector::Ones(20), 1e-14, 2);
    FAIL() << "expected non-convergence";
  } catch (const ConvergenceError &e) {
    EXPECT_EQ(e.iterations(), 2);
    EXPECT_GT(e.residual(), 1e-14);
  }
}

TEST(CoupledLyapunov, MatchesSkewBasisSolve) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TuckerPoint x = random_point({6, 5, 4}, {{3, 3, 3}}, seed);
    const TangentVector eta = project_tangent(x, random_ambient(x, seed + 10));
    const SkewTriple rhs = horizontal_rhs(x, eta);
    const SkewTriple om = coupled_lyap_pcg(x, rhs);
    const SkewTriple ref = oracle::vertical_component(x, eta);
    EXPECT_LE(testing_util::rel(om, ref), 1e-9);

    // Residual of each line of the system in its explicit Kronecker form.
    const SkewTriple lhs = oracle::coupled_lhs_kron(x, om);
    const SkewTriple orhs = oracle::coupled_rhs(x, eta);
    for (int d = 0; d < 3; ++d) {
      EXPECT_LE((lhs[d] - orhs[d]).norm(), 1e-9 * orhs.norm());
      EXPECT_EQ(om[d], -om[d].transpose());
    }
  }
}

TEST(CoupledLyapunov, TrivialRightHandSides) {
  const TuckerPoint x = random_point({5, 4, 4}, {{3, 3, 3}}, 3);
  const SkewTriple z = coupled_lyap_pcg(x, SkewTriple::zeros({3, 3, 3}));
  for (int d = 0; d < 3; ++d) EXPECT_TRUE(z[d].isZero(0.0));

  const TuckerPoint r1 = random_point({5, 4, 4}, {{1, 1, 1}}, 3);
  const SkewTriple o = coupled_lyap_pcg(r1, SkewTriple::zeros({1, 1, 1}));
  for (int d = 0; d < 3; ++d) EXPECT_EQ(o[d](0, 0), 0.0);
}

TEST(CoupledLyapunov, OperatorIsSelfAdjointAndPositive) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TuckerPoint x = random_point({7, 6, 5}, {{4, 3, 3}}, seed);
    for (Metric kind : {Metric::Preconditioned, Metric::Euclidean}) {
      const CoupledLyapunovSystem sys = coupled_system(x, kind);
      const SkewTriple a = testing_util::random_skew_triple({4, 3, 3}, rng);
      const SkewTriple b = testing_util::random_skew_triple({4, 3, 3}, rng);
      const double ab = sys.apply(a).inner(b), ba = a.inner(sys.apply(b));
      EXPECT_LE(std::abs(ab - ba), 1e-12 * std::max(std::abs(ab), 1.0));
      EXPECT_GT(sys.apply(a).inner(a), 0.0);
    }
  }
}

TEST(CoupledLyapunov, ReportsNonConvergence) {
  const TuckerPoint x = random_point({7, 6, 5}, {{4, 3, 3}}, 4);
  const TangentVector eta = project_tangent(x, random_ambient(x, 5));
  CoupledLyapunovOptions opts;
  opts.tol = 1e-16;
  opts.max_iter = 1;
  EXPECT_THROW(coupled_lyap_pcg(x, horizontal_rhs(x, eta), Metric::Preconditioned, opts),
               ConvergenceError);
}
