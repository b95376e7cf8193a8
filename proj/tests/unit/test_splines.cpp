#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tvstergm/pirls.hpp"
#include "tvstergm/splines.hpp"

using namespace tvstergm;

TEST(BsplineBasis, DegreeZeroIsBinIndicators) {
  std::vector<double> pts{0.0, 0.1, 0.3, 0.49, 0.5, 0.74, 0.8, 1.0};
  auto b = bspline_basis(pts, 4, 0);
  for (std::size_t r = 0; r < pts.size(); ++r) {
    const int bin = std::min(3, int(pts[r] * 4));
    for (int k = 0; k < 4; ++k) EXPECT_EQ(b(r, k), k == bin ? 1.0 : 0.0) << pts[r];
  }
}

TEST(BsplineBasis, PartitionOfUnityAndSparsity) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(1950, 2016);
  for (int degree = 0; degree <= 3; ++degree)
    for (int dim : {degree + 1, degree + 4, 12}) {
      auto basis = SplineBasis::make(1950, 2016, dim, degree);
      for (int k = 0; k < 50; ++k) {
        double x = k == 0 ? 1950.0 : k == 1 ? 2016.0 : u(g);
        auto row = basis.evaluate(x);
        EXPECT_NEAR(row.sum(), 1.0, 1e-12);
        EXPECT_LE((row.array() != 0.0).count(), degree + 1);
        EXPECT_GE(row.minCoeff(), 0.0);
      }
    }
}

TEST(BsplineBasis, MatchesCoxDeBoorRecursion) {
  const std::vector<double> pts{2.0, 7.3, 15.5, 28.0, 40.0};
  auto b = bspline_basis(pts, 9, 2);
  for (std::size_t r = 0; r < pts.size(); ++r) {
    auto o = oracle::basis_row(2.0, 40.0, 9, 2, pts[r]);
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(b(r, k), o[k], 1e-12);
  }
}

TEST(BsplineBasis, ContractErrors) {
  EXPECT_THROW(SplineBasis::make(0, 1, 2, 2), ContractError);
  auto basis = SplineBasis::make(0, 1, 5, 2);
  EXPECT_THROW(basis.evaluate(1.5), ContractError);
}

TEST(DifferencePenalty, FirstOrderDimensionThree) {
  Eigen::MatrixXd want(3, 3);
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ(difference_penalty(3, 1), want);
  EXPECT_NEAR((Eigen::VectorXd::Constant(3, 2.5).transpose() * want * Eigen::VectorXd::Constant(3, 2.5))(0), 0.0, 1e-12);
  EXPECT_THROW(difference_penalty(2, 2), ContractError);
}

TEST(DifferencePenalty, SecondOrderIsComposedFirstDifferences) {
  Eigen::MatrixXd d = oracle::first_difference(3) * oracle::first_difference(4);
  EXPECT_TRUE(difference_penalty(4, 2).isApprox(d.transpose() * d, 1e-14));
}

TEST(DifferencePenalty, NullSpaceIsLowDegreePolynomials) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> z;
  for (int order = 1; order <= 3; ++order) {
    const int q = 9;
    auto s = difference_penalty(q, order);
    for (int deg = 0; deg < order; ++deg) {
      Eigen::VectorXd v(q);
      for (int k = 0; k < q; ++k) v(k) = std::pow(double(k), deg);
      EXPECT_NEAR(v.dot(s * v), 0.0, 1e-8);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    EXPECT_EQ((es.eigenvalues().array() > 1e-10).count(), q - order);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd v(q);
      for (int c = 0; c < q; ++c) v(c) = z(g);
      EXPECT_GT(v.dot(s * v), 0.0);
    }
  }
}

TEST(VaryingCoeffBlock, ZeroAndUnitCovariates) {
  auto basis = SplineBasis::make(1, 10, 6, 2);
  std::vector<double> times{1, 2.5, 4, 7, 10};
  auto zero = varying_coeff_block(std::vector<double>(5, 0.0), times, basis);
  EXPECT_EQ(Eigen::MatrixXd(zero.columns).norm(), 0.0);
  auto one = varying_coeff_block(std::vector<double>(5, 1.0), times, basis);
  EXPECT_TRUE(Eigen::MatrixXd(one.columns).isApprox(basis.evaluate(times), 1e-15));
  EXPECT_THROW(varying_coeff_block({1.0}, times, basis), ContractError);
}

TEST(RandomSmoothBlock, OneActorIsTimeSmooth) {
  auto basis = SplineBasis::make(1, 20, 9, 2);
  std::vector<double> times{1, 4, 9, 13, 20};
  auto b = random_smooth_block(std::vector<std::string>(5, "X"), times, basis);
  EXPECT_TRUE(Eigen::MatrixXd(b.columns).isApprox(basis.evaluate(times), 1e-15));
}

TEST(RandomSmoothBlock, DisjointActorsAreBlockDiagonal) {
  auto basis = SplineBasis::make(1, 20, 9, 2);
  std::vector<std::string> actors{"A", "A", "A", "B", "B"};
  std::vector<double> times{1, 6, 11, 16, 20};
  auto b = random_smooth_block(actors, times, basis);
  Eigen::MatrixXd x(b.columns);
  ASSERT_EQ(x.cols(), 18);
  EXPECT_EQ(x.topRightCorner(3, 9).norm(), 0.0);
  EXPECT_EQ(x.bottomLeftCorner(2, 9).norm(), 0.0);
  EXPECT_TRUE(x.topLeftCorner(3, 9).isApprox(basis.evaluate({1, 6, 11}), 1e-15));
  EXPECT_THROW(random_smooth_block({"C"}, {1.0}, basis, "r", {"A", "B"}), ContractError);
}

TEST(RandomSmoothBlock, ZeroOutsideExistence) {
  auto basis = SplineBasis::make(1, 20, 9, 2);
  auto b = random_smooth_block({"A", "A", "A"}, {2, 10, 18}, basis, "r", {"A"}, {{5.0, 15.0}});
  Eigen::MatrixXd x(b.columns);
  EXPECT_EQ(x.row(0).norm(), 0.0);
  EXPECT_GT(x.row(1).norm(), 0.0);
  EXPECT_EQ(x.row(2).norm(), 0.0);
}

TEST(Centering, SumsToZeroAndDropsOneDimension) {
  auto basis = SplineBasis::make(1, 30, 8, 2);
  std::vector<double> times;
  for (int t = 1; t <= 30; ++t)
    for (int k = 0; k < 1 + t % 3; ++k) times.push_back(t);
  auto raw = varying_coeff_block(std::vector<double>(times.size(), 1.0), times, basis);
  auto c = apply_centering_constraint(raw);
  EXPECT_EQ(c.cols(), raw.cols() - 1);
  EXPECT_EQ(c.penalties[0].rows(), c.cols());
  std::mt19937_64 g(3);
  std::normal_distribution<double> z;
  Eigen::VectorXd u(c.cols());
  for (int k = 0; k < u.size(); ++k) u(k) = z(g);
  Eigen::VectorXd fitted = c.columns * u;
  EXPECT_LT(std::abs(fitted.sum()), 1e-10 * double(times.size()));
  EXPECT_THROW(apply_centering_constraint(c), ContractError);
}

// The column space of [1, X Z] equals that of [1, X] when X has a partition of
// unity, so a constrained fit with intercept reproduces the unconstrained one.
TEST(Centering, ReparameterizationKeepsFittedProbabilities) {
  std::mt19937_64 g(4);
  auto basis = SplineBasis::make(1, 20, 7, 2);
  std::vector<double> times;
  Eigen::VectorXd y(400);
  std::uniform_real_distribution<double> u(0, 1);
  for (int r = 0; r < 400; ++r) {
    double t = 1 + r % 20;
    times.push_back(t);
    y(r) = u(g) < 1.0 / (1.0 + std::exp(-std::sin(t / 4.0))) ? 1.0 : 0.0;
  }
  auto raw = varying_coeff_block(std::vector<double>(400, 1.0), times, basis, "s");
  auto con = apply_centering_constraint(raw);
  // Without an intercept the raw smooth spans the constant itself.
  auto pr_raw = make_problem(y, {raw});
  auto pr_con = make_problem(y, {intercept_block(400), con});
  const double lambda = 3.0;
  auto f_raw = pirls_fit(pr_raw, {lambda});
  auto f_con = pirls_fit(pr_con, {lambda});
  Eigen::VectorXd e1 = pr_raw.x * f_raw.beta, e2 = pr_con.x * f_con.beta;
  for (int r = 0; r < 400; ++r)
    EXPECT_NEAR(1 / (1 + std::exp(-e1(r))), 1 / (1 + std::exp(-e2(r))), 1e-6);
}
