#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>

#include "koopid/identify.hpp"
#include "koopid/linalg.hpp"

using namespace koopid;

namespace {

SnapshotDataset exact_linear_dataset(const Matrix& a, double ts, int count,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int n = static_cast<int>(a.rows());
  const Matrix phi = expm(a * ts);
  Matrix x(count, n), y(count, n);
  for (int i = 0; i < count; ++i) {
    Vector xi(n);
    for (int d = 0; d < n; ++d) xi[d] = dist(rng);
    x.row(i) = xi;
    y.row(i) = phi * xi;
  }
  return make_dataset(std::move(x), std::move(y), ts);
}

}  // namespace

TEST_CASE("trim_generator slices the leading block") {
  const MonomialBasis m2_23(2, 3), m1_21(2, 1);
  Matrix l = Matrix::Random(10, 10);
  const Matrix trimmed = trim_generator(l, m2_23, m1_21);
  REQUIRE(trimmed.rows() == 10);
  REQUIRE(trimmed.cols() == 3);
  CHECK(trimmed == l.leftCols(3));

  // m1 = m2 leaves the matrix unchanged.
  CHECK(trim_generator(l, m2_23, m2_23) == l);

  const MonomialBasis m2_13(1, 3), m1_11(1, 1);
  Matrix l1 = Matrix::Random(4, 4);
  const Matrix t1 = trim_generator(l1, m2_13, m1_11);
  REQUIRE(t1.rows() == 4);
  REQUIRE(t1.cols() == 2);

  CHECK_THROWS_AS(trim_generator(l1, m1_11, m2_13), ConfigError);
  CHECK_THROWS_AS(trim_generator(Matrix::Zero(3, 3), m2_13, m1_11), ConfigError);
}

TEST_CASE("solve_coefficients inverts the analytic generator map") {
  // Build L_hat = sum w^j_k block(j,k) for a known w; recovery must be exact.
  for (int m1 : {1, 2}) {
    const GeneratorSystem gen(2, m1, 2);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Matrix w(gen.n, gen.n_f);
    for (int j = 0; j < gen.n; ++j)
      for (int k = 0; k < gen.n_f; ++k) w(j, k) = dist(rng);
    Matrix l_hat = Matrix::Zero(gen.n2, gen.n1);
    for (int j = 1; j <= gen.n; ++j)
      for (int k = 1; k <= gen.n_f; ++k)
        l_hat += w(j - 1, k - 1) * gen.block(j, k);
    const auto solve = solve_coefficients(l_hat, gen);
    CHECK((solve.w - w).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(solve.residual <= 1e-10);
  }
}

TEST_CASE("solve_coefficients on a zero generator returns zeros") {
  const GeneratorSystem gen(2, 1, 3);
  const auto solve =
      solve_coefficients(Matrix::Zero(gen.n2, gen.n1), gen, true);
  CHECK(solve.w.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(solve.sigma_hat.has_value());
  CHECK(*solve.sigma_hat == 0.0);
}

TEST_CASE("identify recovers a 1-D linear field through the full chain") {
  Matrix a(1, 1);
  a << -0.7;
  const auto ds = exact_linear_dataset(a, 0.3, 6, 44);
  IdentificationConfig config;
  config.m_f = 2;
  const auto result = identify(ds, config);
  const MonomialBasis basis(1, 2);
  CHECK(result.field.coefficients(0, basis.index_of({1}) - 1) ==
        Catch::Approx(-0.7).margin(1e-8));
  CHECK(std::abs(result.field.coefficients(0, 0)) <= 1e-8);
  CHECK(result.residual <= 1e-12);
}

TEST_CASE("exact recovery of random linear fields") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int n = 1; n <= 4; ++n) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = dist(rng);
    const int big_n = n + 1;  // basis size at m_F = 1
    const auto ds = exact_linear_dataset(a, 0.1, 2 * big_n, 1000 + n);
    IdentificationConfig config;
    config.m_f = 1;
    const auto result = identify(ds, config);
    const MonomialBasis basis(n, 1);
    Matrix recovered(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        MultiIndex e(static_cast<std::size_t>(n), 0);
        e[static_cast<std::size_t>(i)] = 1;
        recovered(j, i) = result.field.coefficients(j, basis.index_of(e) - 1);
      }
    }
    CHECK((recovered - a).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("identification is equivariant under state permutation") {
  // x' = A x with a quadratic term; permute the two coordinates.
  const double ts = 0.2;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto field = FieldBuilder(2, 2, 2)
                   .add(1, {1, 0}, -0.5)
                   .add(1, {0, 2}, 0.3)
                   .add(2, {0, 1}, -1.1)
                   .add(2, {1, 1}, 0.4)
                   .build();
  // Integrate crudely but identically for both orderings: tiny RK4 by hand.
  const int count = 40;
  Matrix x(count, 2), y(count, 2);
  for (int i = 0; i < count; ++i) {
    Vector xi(2);
    xi << dist(rng), dist(rng);
    Vector z = xi;
    const int steps = 50;
    const double h = ts / steps;
    for (int s = 0; s < steps; ++s) {
      const Vector k1 = evaluate_field(field, z);
      const Vector k2 = evaluate_field(field, z + 0.5 * h * k1);
      const Vector k3 = evaluate_field(field, z + 0.5 * h * k2);
      const Vector k4 = evaluate_field(field, z + h * k3);
      z += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    x.row(i) = xi;
    y.row(i) = z;
  }
  const auto direct = identify(make_dataset(x, y, ts), IdentificationConfig{});

  Matrix xp = x.rowwise().reverse();
  Matrix yp = y.rowwise().reverse();
  const auto swapped = identify(make_dataset(xp, yp, ts), IdentificationConfig{});

  // Map the swapped result back: swap rows and permute monomials.
  const MonomialBasis basis(2, 3);
  Matrix mapped(2, basis.size());
  for (int j = 0; j < 2; ++j) {
    for (int k = 1; k <= basis.size(); ++k) {
      MultiIndex s = basis.exponents(k);
      std::swap(s[0], s[1]);
      mapped(1 - j, basis.index_of(s) - 1) = swapped.field.coefficients(j, k - 1);
    }
  }
  CHECK((direct.field.coefficients - mapped).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("diffusion column never changes w at m1 = 1") {
  Matrix a(2, 2);
  a << -0.3, 0.7, -0.7, -0.3;
  const auto ds = exact_linear_dataset(a, 0.25, 30, 77);
  IdentificationConfig plain;
  IdentificationConfig with_diff = plain;
  with_diff.estimate_diffusion = true;
  const auto r1 = identify(ds, plain);
  const auto r2 = identify(ds, with_diff);
  CHECK((r1.field.coefficients - r2.field.coefficients).cwiseAbs().maxCoeff() <=
        1e-12);
  REQUIRE(r2.sigma_proc_hat.has_value());
  CHECK(*r2.sigma_proc_hat == 0.0);
  CHECK(!r1.sigma_proc_hat.has_value());
}

TEST_CASE("input dimension mismatches are configuration errors") {
  Matrix x(3, 1), y(3, 1);
  x << 1, 2, 3;
  y << 1, 2, 3;
  const auto ds = make_dataset(x, y, 1.0);
  IdentificationConfig config;
  config.input_dim = 1;
  CHECK_THROWS_AS(identify(ds, config), ConfigError);

  SnapshotDataset empty;
  empty.x.resize(0, 1);
  empty.y.resize(0, 1);
  empty.sampling_period = 1.0;
  CHECK_THROWS_AS(identify(empty, IdentificationConfig{}), ConfigError);
}

TEST_CASE("errors carry stage attribution") {
  Matrix x(3, 1), y(3, 1);
  for (int i = 0; i < 3; ++i) {
    x(i, 0) = 1.0 + i;
    y(i, 0) = -0.4 * x(i, 0);
  }
  const auto ds = make_dataset(x, y, 1.0);
  try {
    identify(ds, IdentificationConfig{});
    FAIL("expected NegativeRealEigenvalueError");
  } catch (const NegativeRealEigenvalueError& e) {
    CHECK(std::string(e.what()).find("step 1 (EDMD)") != std::string::npos);
  }
}

TEST_CASE("rescaled identification maps coefficients back exactly") {
  // Same system, states far from unit scale.
  auto field = FieldBuilder(2, 2, 2)
                   .add(1, {0, 1}, 2.0)
                   .add(2, {1, 0}, -3.0)
                   .add(2, {2, 0}, 0.05)
                   .build();
  const double ts = 0.05;
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> dist(-30.0, 30.0);
  const int count = 30;
  Matrix x(count, 2), y(count, 2);
  for (int i = 0; i < count; ++i) {
    Vector xi(2);
    xi << dist(rng), dist(rng);
    Vector z = xi;
    const int steps = 100;
    const double h = ts / steps;
    for (int s = 0; s < steps; ++s) {
      const Vector k1 = evaluate_field(field, z);
      const Vector k2 = evaluate_field(field, z + 0.5 * h * k1);
      const Vector k3 = evaluate_field(field, z + 0.5 * h * k2);
      const Vector k4 = evaluate_field(field, z + h * k3);
      z += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    x.row(i) = xi;
    y.row(i) = z;
  }
  const auto ds = make_dataset(x, y, ts);
  IdentificationConfig rescaled;
  rescaled.rescale = true;
  const auto res = identify(ds, rescaled);
  REQUIRE(res.scales.size() == 2);
  CHECK(res.scales.minCoeff() > 1.0);

  const MonomialBasis basis(2, 3);
  CHECK(res.field.coefficients(0, basis.index_of({0, 1}) - 1) ==
        Catch::Approx(2.0).margin(1e-4));
  CHECK(res.field.coefficients(1, basis.index_of({1, 0}) - 1) ==
        Catch::Approx(-3.0).margin(1e-4));
  CHECK(res.field.coefficients(1, basis.index_of({2, 0}) - 1) ==
        Catch::Approx(0.05).margin(1e-4));
}
