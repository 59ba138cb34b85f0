#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "koopid/linalg.hpp"

using namespace koopid;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols,
                     double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * dist(rng);
  return m;
}

}  // namespace

TEST_CASE("pseudoinverse basics") {
  CHECK(pseudoinverse(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const Matrix dp = pseudoinverse(d);
  CHECK(dp(0, 0) == Catch::Approx(0.5).epsilon(1e-13));
  CHECK(dp(1, 1) == 0.0);

  Matrix a(2, 1);
  a << 1, 1;
  const Matrix ap = pseudoinverse(a);
  REQUIRE(ap.rows() == 1);
  REQUIRE(ap.cols() == 2);
  CHECK(ap(0, 0) == Catch::Approx(0.5).epsilon(1e-13));
  CHECK(ap(0, 1) == Catch::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("pseudoinverse satisfies the Moore-Penrose identities") {
  std::mt19937_64 rng(11);
  for (auto [rows, cols] : {std::pair<Index, Index>{50, 30},
                            {30, 50},
                            {20, 20},
                            {7, 3}}) {
    const Matrix a = random_matrix(rng, rows, cols);
    const Matrix ap = pseudoinverse(a);
    const double scale = a.norm();
    CHECK((a * ap * a - a).norm() <= 1e-9 * scale);
    CHECK((ap * a * ap - ap).norm() <= 1e-9 * ap.norm());
    CHECK(((a * ap).transpose() - a * ap).norm() <= 1e-9);
    CHECK(((ap * a).transpose() - ap * a).norm() <= 1e-9);
  }
}

TEST_CASE("lstsq matches the pseudoinverse route") {
  std::mt19937_64 rng(3);

  const Matrix b = random_matrix(rng, 4, 2);
  CHECK(lstsq(Matrix::Identity(4, 4), b).isApprox(b, 1e-13));

  Matrix a(2, 1), rhs(2, 1);
  a << 1, 1;
  rhs << 1, 3;
  CHECK(lstsq(a, rhs)(0, 0) == Catch::Approx(2.0).epsilon(1e-13));

  // Rank-deficient: minimum-norm solution equals pinv(A) * B.
  Matrix low = random_matrix(rng, 6, 2) * random_matrix(rng, 2, 5);
  const Matrix rhs2 = random_matrix(rng, 6, 3);
  const Matrix x1 = lstsq(low, rhs2);
  const Matrix x2 = pseudoinverse(low) * rhs2;
  CHECK((x1 - x2).norm() <= 1e-10 * std::max(1.0, x2.norm()));

  CHECK_THROWS_AS(lstsq(Matrix::Identity(3, 3), Matrix::Identity(4, 4)),
                  ConfigError);
}

TEST_CASE("expm basics") {
  CHECK(expm(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-15));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = -1.7;
  const Matrix e = expm(d);
  CHECK(e(0, 0) == Catch::Approx(std::exp(0.3)).epsilon(1e-12));
  CHECK(e(1, 1) == Catch::Approx(std::exp(-1.7)).epsilon(1e-12));
  CHECK(std::abs(e(0, 1)) + std::abs(e(1, 0)) == 0.0);

  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  Matrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(expm(nil) == expected);  // series terminates, exact in floating point
}

TEST_CASE("expm handles larger norms via scaling") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 12.0;
  d(1, 1) = -9.0;
  const Matrix e = expm(d);
  CHECK(e(0, 0) == Catch::Approx(std::exp(12.0)).epsilon(1e-11));
  CHECK(e(1, 1) == Catch::Approx(std::exp(-9.0)).epsilon(1e-11));
}

TEST_CASE("logm basics") {
  const auto zero = logm_principal(Matrix::Identity(4, 4));
  CHECK(zero.value.norm() <= 1e-14);
  CHECK(zero.spectrum.min_real_eigenvalue == Catch::Approx(1.0));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(0.3);
  const auto lr = logm_principal(d);
  CHECK(std::abs(lr.value(0, 0)) <= 1e-14);
  CHECK(lr.value(1, 1) == Catch::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("logm rejects the negative real axis and singular input") {
  Matrix rot(2, 2);  // rotation by pi: both eigenvalues -1
  rot << -1, 0, 0, -1;
  CHECK_THROWS_AS(logm_principal(rot), NegativeRealEigenvalueError);

  Matrix sing(2, 2);
  sing << 1, 0, 0, 0;
  CHECK_THROWS_AS(logm_principal(sing), SingularMatrixError);

  Matrix neg(3, 3);  // one eigenvalue at -0.5 via similarity
  neg.setZero();
  neg(0, 0) = -0.5;
  neg(1, 1) = 1.2;
  neg(2, 2) = 0.7;
  Matrix s = Matrix::Identity(3, 3);
  s(0, 1) = 0.3;
  s(2, 0) = -0.2;
  const Matrix a = s * neg * s.inverse();
  CHECK_THROWS_AS(logm_principal(a), NegativeRealEigenvalueError);
}

TEST_CASE("logm/expm round trips inside the principal strip") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 2 + static_cast<Index>(rng() % 14);
    Matrix a = random_matrix(rng, n, n);
    // Spectral radius <= operator norm; scaling keeps |Im(lambda)| < pi - 0.1.
    a *= (std::numbers::pi - 0.2) / a.operatorNorm();
    const Matrix e = expm(a);
    const auto back = logm_principal(e);
    CHECK((back.value - a).norm() <= 1e-8 * a.norm());
    CHECK((expm(back.value) - e).norm() <= 1e-8 * e.norm());
    CHECK(back.spectrum.max_abs_imag_log <= std::numbers::pi - 0.05);
  }
}

TEST_CASE("vec stacks columns") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Vector v = vec(a);
  Vector expected(4);
  expected << 1, 3, 2, 4;
  CHECK(v == expected);

  Matrix one(1, 1);
  one << 7;
  CHECK(vec(one)(0) == 7.0);
  CHECK(vec(Matrix::Zero(2, 3)).norm() == 0.0);

  // Linearity.
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(rng, 3, 4), y = random_matrix(rng, 3, 4);
  CHECK((vec(2.5 * x + 0.5 * y) - (2.5 * vec(x) + 0.5 * vec(y))).norm() <= 1e-15);
}

TEST_CASE("spectrum report flags branch proximity") {
  // Eigenvalues exp(i * 0.95 * pi) are close to the branch cut.
  const double angle = 0.95 * std::numbers::pi;
  Matrix rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const auto lr = logm_principal(rot);
  CHECK(lr.spectrum.max_abs_imag_log == Catch::Approx(angle).epsilon(1e-10));
  CHECK(lr.spectrum.max_abs_imag_log > 0.9 * std::numbers::pi);
}
