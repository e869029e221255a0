#include "dsmreg/operator_core.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsmreg/problems.hpp"

using namespace dsmreg;

namespace {

// Brute-force triple loop, independent of Eigen's product kernels.
Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

// Random matrix with prescribed singular values spread log-uniformly up to `cond`.
Matrix random_conditioned(std::mt19937_64& gen, int rows, int cols, double cond) {
  std::normal_distribution<double> normal;
  Matrix g1(rows, rows), g2(cols, cols);
  for (auto* g : {&g1, &g2})
    for (Eigen::Index i = 0; i < g->size(); ++i) g->data()[i] = normal(gen);
  Eigen::HouseholderQR<Matrix> q1(g1), q2(g2);
  Matrix u = q1.householderQ() * Matrix::Identity(rows, cols);
  Matrix v = q2.householderQ();
  Vector s(cols);
  for (int i = 0; i < cols; ++i) s(i) = std::pow(cond, -static_cast<double>(i) / std::max(1, cols - 1));
  return u * s.asDiagonal() * v.transpose();
}

}  // namespace

TEST(DenseOperator, NormBoundDefaultsToSquaredNorm) {
  Matrix a(2, 2);
  a << 2, 0, 0, 1;
  DenseOperator<double> op(a);
  EXPECT_NEAR(op.norm_bound_sq(), 4.0, 1e-12);
  EXPECT_NEAR(op.smallest_singular_value(), 1.0, 1e-14);
  EXPECT_NEAR(op.condition_number(), 2.0, 1e-14);
}

TEST(DenseOperator, RejectsTooSmallNormBound) {
  Matrix a = Matrix::Identity(3, 3) * 2.0;
  EXPECT_THROW(DenseOperator<double>(a, 3.9), std::invalid_argument);
  EXPECT_NO_THROW(DenseOperator<double>(a, 4.0));
  EXPECT_NO_THROW(DenseOperator<double>(a, 10.0));
}

TEST(DenseOperator, RejectsNonInjectiveAndNonFinite) {
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_THROW(DenseOperator<double>{singular}, std::invalid_argument);
  Matrix wide = Matrix::Ones(2, 3);
  EXPECT_THROW(DenseOperator<double>{wide}, std::invalid_argument);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(DenseOperator<double>{bad}, std::invalid_argument);
}

TEST(BuildNormalSystem, IdentityCase) {
  DenseOperator<double> op(Matrix::Identity(2, 2));
  Vector f(2);
  f << 1, 2;
  auto sys = build_normal_system(op, f, std::optional<Vector>(f), 0.0);
  EXPECT_EQ(sys.b_matrix, Matrix::Identity(2, 2));
  EXPECT_EQ(sys.rhs, f);
  EXPECT_DOUBLE_EQ(sys.data_norm, std::sqrt(5.0));
}

TEST(BuildNormalSystem, DiagonalCase) {
  Matrix a(2, 2);
  a << 2, 0, 0, 1;
  Vector f(2);
  f << 2, 1;
  auto sys = build_normal_system(DenseOperator<double>(a), f);
  Matrix expected(2, 2);
  expected << 4, 0, 0, 1;
  EXPECT_EQ(sys.b_matrix, expected);
  EXPECT_EQ(sys.rhs, Vector((Vector(2) << 4, 1).finished()));
}

TEST(BuildNormalSystem, HilbertAgainstNaiveProduct) {
  Matrix a(2, 2);
  a << 1, 0.5, 0.5, 1.0 / 3.0;
  const Vector f = naive_product(a, Vector::Ones(2));
  auto sys = build_normal_system(DenseOperator<double>(a), f);
  const Matrix b_oracle = naive_product(a.transpose(), a);
  const Matrix rhs_oracle = naive_product(b_oracle, Vector::Ones(2));
  EXPECT_LE((sys.b_matrix - b_oracle).norm(), 1e-15);
  EXPECT_LE((sys.rhs - rhs_oracle.col(0)).norm(), 1e-15);
  EXPECT_EQ(sys.b_matrix, sys.b_matrix.transpose());
}

TEST(BuildNormalSystem, RejectsMismatchAndInconsistentNoise) {
  DenseOperator<double> op(Matrix::Identity(3, 3));
  EXPECT_THROW(build_normal_system(op, Vector(Vector::Ones(2))), std::invalid_argument);
  Vector f = Vector::Ones(3), fc = Vector::Zero(3);
  EXPECT_THROW(build_normal_system(op, f, std::optional<Vector>(fc), 1.0), std::invalid_argument);
  EXPECT_NO_THROW(build_normal_system(op, f, std::optional<Vector>(fc), std::sqrt(3.0)));
}

TEST(BuildNormalSystem, NoiseGainBoundHolds) {
  auto inst = add_noise(hilbert_problem(8), 1e-3, 7);
  auto sys = normal_system(inst);
  ASSERT_TRUE(sys.rhs_clean);
  EXPECT_LE((sys.rhs - *sys.rhs_clean).norm(), sys.noise_gain() * 1e-3 * (1 + 1e-12));
}

TEST(TikhonovSolve, Examples) {
  Vector y(2);
  y << 3, 4;
  Vector w = tikhonov_solve(Matrix(Matrix::Identity(2, 2)), y, 1.0);
  EXPECT_NEAR(w(0), 1.5, 1e-15);
  EXPECT_NEAR(w(1), 2.0, 1e-15);

  Matrix b = Vector((Vector(2) << 1, 0.01).finished()).asDiagonal();
  Vector rhs(2);
  rhs << 1, 0.01;
  w = tikhonov_solve(b, rhs, 0.1);
  EXPECT_NEAR(w(0), 1.0 / 1.1, 1e-15);
  EXPECT_NEAR(w(1), 0.01 / 0.11, 1e-15);

  EXPECT_EQ(tikhonov_solve(b, Vector(Vector::Zero(2)), 0.3), Vector::Zero(2));
}

TEST(TikhonovSolve, ErrorPaths) {
  Matrix b = Matrix::Identity(2, 2);
  EXPECT_THROW(tikhonov_solve(b, Vector(Vector::Ones(2)), 0.0), std::domain_error);
  EXPECT_THROW(tikhonov_solve(b, Vector(Vector::Ones(2)), -1.0), std::domain_error);
  Vector bad = Vector::Ones(2);
  bad(1) = INFINITY;
  EXPECT_THROW(tikhonov_solve(b, bad, 1.0), std::invalid_argument);
  Matrix indefinite = -Matrix::Identity(2, 2) * 5.0;
  EXPECT_THROW(tikhonov_solve(indefinite, Vector(Vector::Ones(2)), 1.0), std::runtime_error);
}

TEST(TikhonovSolve, ResidualAndNormBounds) {
  for (auto inst : {hilbert_problem(8, TargetSpec::smooth), fredholm_problem(FredholmKind::gravity, 32),
                    fredholm_problem(FredholmKind::deriv2, 32)}) {
    const auto sys = normal_system(inst);
    for (double eps : {1.0, 1e-2, 1e-4, 1e-6}) {
      const Vector w = tikhonov_solve(sys, eps);
      Matrix shifted = sys.b_matrix;
      shifted.diagonal().array() += eps;
      EXPECT_LE((shifted * w - sys.rhs).norm(), 1e-10 * sys.rhs.norm()) << inst.label << " eps=" << eps;
      EXPECT_LE(w.norm(), sys.rhs.norm() / eps);
      EXPECT_LE(w.norm(), sys.data_norm / (2 * std::sqrt(eps)) * (1 + 1e-10));
      // Consistent clean data: ||w|| <= ||y||.
      EXPECT_LE(w.norm(), inst.y_true.norm() * (1 + 1e-10));
    }
  }
}

TEST(TikhonovSolve, DiagonalPathIsMonotone) {
  // ||w(eps_k) - y|| is nonincreasing along decreasing eps on a diagonal B.
  Matrix a = Vector((Vector(4) << 1, 0.1, 1e-2, 1e-3).finished()).asDiagonal();
  const Vector y = Vector::Ones(4);
  auto sys = build_normal_system(DenseOperator<double>(a), Vector(a * y));
  double previous = INFINITY;
  for (double eps = 1.0; eps >= 1e-12; eps /= 10) {
    const double err = (tikhonov_solve(sys, eps) - y).norm();
    EXPECT_LE(err, previous);
    previous = err;
  }
  EXPECT_LE(previous, 1e-5);
}

TEST(TikhonovSolve, ConvergesToSolutionAsEpsVanishes) {
  auto inst = hilbert_problem(4, TargetSpec::smooth);
  const auto sys = normal_system(inst);
  const double bnorm = spectral_decompose(sys).norm();
  const Vector w = tikhonov_solve(sys, 1e-8 * bnorm);
  // cond(B) ~ 2.4e8 for n = 4, so 1e-8 ||B|| resolves all components to ~25%;
  // the smallest-eigenvalue mode dominates what remains.
  EXPECT_LE((w - inst.y_true).norm(), 0.05 * inst.y_true.norm());
}

TEST(SpectralDecompose, DiagonalAndTwoByTwo) {
  Matrix b = Vector((Vector(2) << 0.01, 1).finished()).asDiagonal();
  auto d = spectral_decompose(b);
  EXPECT_NEAR(d.eigenvalues(0), 0.01, 1e-16);
  EXPECT_NEAR(d.eigenvalues(1), 1.0, 1e-16);
  EXPECT_NEAR(std::abs(d.eigenvectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.eigenvectors(1, 1)), 1.0, 1e-15);

  Matrix b2(2, 2);
  b2 << 2, 1, 1, 2;
  d = spectral_decompose(b2);
  EXPECT_NEAR(d.eigenvalues(0), 1.0, 1e-14);
  EXPECT_NEAR(d.eigenvalues(1), 3.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(d.eigenvectors.col(0).dot(Vector((Vector(2) << r, -r).finished()))), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(d.eigenvectors.col(1).dot(Vector((Vector(2) << r, r).finished()))), 1.0, 1e-14);
}

TEST(SpectralDecompose, HilbertReconstruction) {
  const auto sys = normal_system(hilbert_problem(8));
  const auto d = spectral_decompose(sys);
  const double bnorm = sys.b_matrix.norm();
  EXPECT_LE((sys.b_matrix - d.reconstruct()).norm(), 1e-10 * bnorm);
  EXPECT_LE((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(8, 8)).norm(), 1e-10);
  for (Eigen::Index i = 1; i < d.size(); ++i) EXPECT_LE(d.eigenvalues(i - 1), d.eigenvalues(i));
  EXPECT_GE(d.raw_min_eigenvalue, -1e-12 * d.norm());
  EXPECT_GE(d.eigenvalues(0), 0.0);
}

TEST(CommutationResidual, IdentityAttainsHalfPowerBound) {
  DenseOperator<double> op(Matrix::Identity(3, 3));
  Vector f(3);
  f << 1, -2, 0.5;
  auto check = commutation_residual(op, f, 1.0);
  EXPECT_LE(check.residual, 1e-15);
  EXPECT_TRUE(check.half_power_ok);
  EXPECT_NEAR(check.half_power_norm, check.half_power_bound, 1e-15);
}

TEST(CommutationResidual, DiagonalCase) {
  Matrix a(2, 2);
  a << 2, 0, 0, 1;
  auto check = commutation_residual(DenseOperator<double>(a), Vector(Vector::Ones(2)), 0.5);
  EXPECT_LE(check.residual, 1e-12);
  EXPECT_TRUE(check.half_power_ok);
  // Componentwise: s / (s + eps) with s = sigma^2, times ||(B+eps)^{-1} A^T f||.
  const double expected = std::hypot(2.0 / 4.5, 1.0 / 1.5);
  EXPECT_NEAR(check.half_power_norm, expected, 1e-15);
}

TEST(CommutationResidual, RandomTallMatrices) {
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(5, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = unif(gen);
    Vector f(5);
    for (Eigen::Index i = 0; i < 5; ++i) f(i) = unif(gen);
    auto check = commutation_residual(DenseOperator<double>(a), f, 0.01);
    EXPECT_LE(check.residual, 1e-10 * f.norm());
    EXPECT_TRUE(check.half_power_ok);
  }
}

TEST(CommutationResidual, IllConditionedDraws) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> log_cond(0.0, 8.0), log_eps(-4.0, 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_conditioned(gen, 7, 5, std::pow(10.0, log_cond(gen)));
    std::normal_distribution<double> normal;
    Vector f(7);
    for (Eigen::Index i = 0; i < 7; ++i) f(i) = normal(gen);
    auto check = commutation_residual(DenseOperator<double>(a), f, std::pow(10.0, log_eps(gen)));
    EXPECT_LE(check.residual, 1e-10 * f.norm());
    EXPECT_TRUE(check.half_power_ok);
  }
}

TEST(CommutationResidual, DimensionMismatch) {
  DenseOperator<double> op(Matrix::Identity(3, 3));
  EXPECT_THROW(commutation_residual(op, Vector(Vector::Ones(2)), 1.0), std::invalid_argument);
}

TEST(OperatorCore, LongDoubleInstantiation) {
  using LD = long double;
  MatrixX<LD> a(2, 2);
  a << 1, 0.5L, 0.5L, 1.0L / 3.0L;
  DenseOperator<LD> op(a);
  VectorX<LD> f = a * VectorX<LD>::Ones(2);
  auto sys = build_normal_system(op, f);
  VectorX<LD> w = tikhonov_solve(sys, LD(1e-12));
  EXPECT_LT(static_cast<double>((w - VectorX<LD>::Ones(2)).norm()), 1e-6);
  auto d = spectral_decompose(sys);
  EXPECT_LT(static_cast<double>((sys.b_matrix - d.reconstruct()).norm()), 1e-17);
}
