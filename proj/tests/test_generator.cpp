#include <catch_amalgamated.hpp>

#include <set>
#include <utility>

#include "koopid/generator.hpp"
#include "symbolic_oracle.hpp"

using namespace koopid;

TEST_CASE("generator block matches hand-computed 1-D cases") {
  const MonomialBasis m1(1, 1), m2(1, 2);

  // p_k = x: x d/dx maps 1 -> 0 and x -> x, single entry (2,2) = 1.
  Matrix b = generator_block(1, 2, m1, m2);
  CHECK(b.rows() == 3);
  CHECK(b.cols() == 2);
  CHECK(b.sum() == 1.0);
  CHECK(b(1, 1) == 1.0);

  // p_k = 1: d/dx maps x -> 1, single entry (1,2) = 1.
  b = generator_block(1, 1, m1, m2);
  CHECK(b.sum() == 1.0);
  CHECK(b(0, 1) == 1.0);
}

TEST_CASE("constant-monomial columns are zero") {
  for (int n = 1; n <= 3; ++n) {
    const MonomialBasis m1(n, 2), m2(n, 4);
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= static_cast<int>(basis_size(n, 3)); ++k)
        CHECK(generator_block(j, k, m1, m2).col(0).cwiseAbs().sum() == 0.0);
  }
}

TEST_CASE("generator blocks equal the symbolic oracle exactly") {
  for (int n = 1; n <= 3; ++n) {
    for (int m1 = 1; m1 <= 2; ++m1) {
      for (int m_f = 1; m_f <= 3; ++m_f) {
        const GeneratorSystem gen(n, m1, m_f);
        for (int j = 1; j <= n; ++j) {
          for (int k = 1; k <= gen.n_f; ++k) {
            const Matrix mine = gen.block(j, k);
            const Matrix ref =
                oracle::generator_block(j, k, gen.basis_m1, gen.basis_m2);
            REQUIRE(mine == ref);  // integer-exact
          }
        }
        REQUIRE(gen.diffusion() ==
                oracle::laplacian(gen.basis_m1, gen.basis_m2));
      }
    }
  }
}

TEST_CASE("every block column has at most one nonzero") {
  const GeneratorSystem gen(3, 2, 3);
  for (int j = 1; j <= gen.n; ++j) {
    for (int k = 1; k <= gen.n_f; ++k) {
      const Matrix b = gen.block(j, k);
      for (int l = 0; l < b.cols(); ++l)
        CHECK((b.col(l).array() != 0.0).count() <= 1);
    }
  }
}

TEST_CASE("degree bookkeeping of nonzero entries") {
  const GeneratorSystem gen(2, 2, 3);
  for (int j = 1; j <= gen.n; ++j) {
    for (int k = 1; k <= gen.n_f; ++k) {
      const Matrix b = gen.block(j, k);
      const int deg_k = total_degree(gen.basis_m2.exponents(k));
      for (int l = 1; l <= gen.n1; ++l) {
        for (int i = 1; i <= gen.n2; ++i) {
          if (b(i - 1, l - 1) == 0.0) continue;
          CHECK(total_degree(gen.basis_m2.exponents(i)) ==
                deg_k + total_degree(gen.basis_m1.exponents(l)) - 1);
        }
      }
    }
  }
}

TEST_CASE("laplacian matrix matches the second-derivative oracle") {
  // n=1, basis {1, x, x^2}: only Delta x^2 = 2 survives.
  const MonomialBasis b2(1, 2);
  const Matrix d = laplacian_matrix(b2, b2);
  CHECK(d.sum() == 2.0);
  CHECK(d(0, 2) == 2.0);

  // Degree <= 1 columns vanish.
  CHECK(d.col(0).cwiseAbs().sum() == 0.0);
  CHECK(d.col(1).cwiseAbs().sum() == 0.0);

  // n=2: the x1 x2 column is zero.
  const MonomialBasis b22(2, 2);
  const Matrix d2 = laplacian_matrix(b22, b22);
  const int l = b22.index_of({1, 1});
  CHECK(d2.col(l - 1).cwiseAbs().sum() == 0.0);
}

TEST_CASE("design matrix has one vec(block) per column") {
  const GeneratorSystem gen(2, 2, 2);
  const DesignMatrix design = assemble_design(gen, false);
  REQUIRE(design.a.cols() == static_cast<Index>(gen.n) * gen.n_f);
  const Matrix dense(design.a);
  for (int j = 1; j <= gen.n; ++j) {
    for (int k = 1; k <= gen.n_f; ++k) {
      const Vector full = vec(gen.block(j, k));
      const Index col = static_cast<Index>(j - 1) * gen.n_f + (k - 1);
      for (std::size_t r = 0; r < design.kept_rows.size(); ++r)
        CHECK(dense(static_cast<Index>(r), col) == full[design.kept_rows[r]]);
      // Dropped rows really are zero in this column.
      std::set<Index> kept(design.kept_rows.begin(), design.kept_rows.end());
      for (Index r = 0; r < full.size(); ++r)
        if (!kept.count(r)) CHECK(full[r] == 0.0);
    }
  }
}

TEST_CASE("with m1 = 1 the effective system is square in n * N_F") {
  const GeneratorSystem gen(1, 1, 1);
  const DesignMatrix design = assemble_design(gen, false);
  CHECK(design.a.cols() == 2);  // n * N_F = 1 * 2
  CHECK(static_cast<Index>(design.kept_rows.size()) == 2);
  CHECK(design.dropped_rows ==
        static_cast<Index>(gen.n2) * gen.n1 - 2);
}

TEST_CASE("diffusion column is unidentifiable at m1 = 1") {
  const GeneratorSystem gen(2, 1, 3);
  const DesignMatrix design = assemble_design(gen, true);
  CHECK(design.has_diffusion_column);
  CHECK(!design.diffusion_identifiable);
  const Matrix dense(design.a);
  CHECK(dense.col(dense.cols() - 1).cwiseAbs().sum() == 0.0);
}

TEST_CASE("diffusion support is disjoint from the blocks") {
  for (int n = 1; n <= 3; ++n) {
    for (int m1 = 2; m1 <= 3; ++m1) {
      const GeneratorSystem gen(n, m1, 2);
      const Matrix d = gen.diffusion();
      Matrix block_support = Matrix::Zero(gen.n2, gen.n1);
      for (int j = 1; j <= gen.n; ++j)
        for (int k = 1; k <= gen.n_f; ++k)
          block_support += gen.block(j, k).cwiseAbs();
      CHECK((d.cwiseAbs().array() * block_support.array()).sum() == 0.0);
    }
  }
}

TEST_CASE("image monomials that overflow m2 are a configuration error") {
  const MonomialBasis m1(1, 2), m2(1, 2);
  //  k = x^2 with m1 = 2 needs m2 >= 3.
  CHECK_THROWS_AS(generator_block(1, 3, m1, m2), ConfigError);
}
