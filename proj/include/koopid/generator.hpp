#pragma once

#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "koopid/basis.hpp"
#include "koopid/errors.hpp"
#include "koopid/types.hpp"

namespace koopid {

// Projection of the operator p_k * d/dx_j onto monomials: maps the degree-m1
// basis into the degree-m2 basis. Column l holds the expansion of
// p_k * dp_l/dx_j, which is the single monomial with exponents
// psi(k) + psi(l) - e_j and coefficient psi_j(l); columns whose monomial does
// not depend on x_j are zero. j and k are 1-based.
inline Matrix generator_block(int j, int k, const MonomialBasis& basis_m1,
                              const MonomialBasis& basis_m2) {
  const int n = basis_m1.dim();
  if (basis_m2.dim() != n)
    throw ConfigError("generator_block: bases must share the dimension");
  if (basis_m2.max_degree() < basis_m1.max_degree())
    throw ConfigError("generator_block: m2 must be at least m1");
  if (j < 1 || j > n) throw ConfigError("generator_block: j out of range");
  if (k < 1 || k > basis_m2.size())
    throw ConfigError("generator_block: k out of range");

  const MultiIndex& mult = basis_m2.exponents(k);
  Matrix block = Matrix::Zero(basis_m2.size(), basis_m1.size());
  for (int l = 1; l <= basis_m1.size(); ++l) {
    const MultiIndex& s = basis_m1.exponents(l);
    const int power = s[static_cast<std::size_t>(j - 1)];
    if (power == 0) continue;
    MultiIndex target = mult;
    for (int i = 0; i < n; ++i) target[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
    target[static_cast<std::size_t>(j - 1)] -= 1;
    const auto row = basis_m2.try_index_of(target);
    if (!row) {
      std::ostringstream msg;
      msg << "generator_block: image monomial of degree " << total_degree(target)
          << " falls outside the degree-" << basis_m2.max_degree()
          << " basis; m2 must be at least m1 + deg(p_k) - 1";
      throw ConfigError(msg.str());
    }
    block(*row - 1, l - 1) = static_cast<double>(power);
  }
  return block;
}

// Projection of the Laplacian sum_j d^2/dx_j^2 onto monomials. Entry (i, l)
// accumulates psi_j(l) (psi_j(l) - 1) over the j with
// psi(i) = psi(l) - 2 e_j; degree-<=1 columns are zero.
inline Matrix laplacian_matrix(const MonomialBasis& basis_m1,
                               const MonomialBasis& basis_m2) {
  const int n = basis_m1.dim();
  if (basis_m2.dim() != n)
    throw ConfigError("laplacian_matrix: bases must share the dimension");
  if (basis_m2.max_degree() < basis_m1.max_degree())
    throw ConfigError("laplacian_matrix: m2 must be at least m1");

  Matrix d = Matrix::Zero(basis_m2.size(), basis_m1.size());
  for (int l = 1; l <= basis_m1.size(); ++l) {
    const MultiIndex& s = basis_m1.exponents(l);
    for (int j = 0; j < n; ++j) {
      const int power = s[static_cast<std::size_t>(j)];
      if (power < 2) continue;
      MultiIndex target = s;
      target[static_cast<std::size_t>(j)] -= 2;
      d(basis_m2.index_of(target) - 1, l - 1) +=
          static_cast<double>(power) * static_cast<double>(power - 1);
    }
  }
  return d;
}

// The family of generator building blocks for an identification problem:
// bases of degree m1 (probe monomials) and m2 = m1 + m_F - 1 (image
// monomials), with the blocks L^j_k for j = 1..n, k = 1..N_F. Blocks are
// produced on demand from the index arithmetic; nothing is stored per block.
struct GeneratorSystem {
  int n;
  int m1;
  int m_f;
  int m2;
  MonomialBasis basis_m1;
  MonomialBasis basis_m2;
  int n1;   // basis_m1 size
  int n2;   // basis_m2 size
  int n_f;  // number of vector-field monomials

  GeneratorSystem(int dim, int degree_m1, int degree_m_f)
      : n(dim),
        m1(degree_m1),
        m_f(degree_m_f),
        m2(degree_m1 + degree_m_f - 1),
        basis_m1(dim, degree_m1),
        basis_m2(dim, degree_m1 + degree_m_f - 1),
        n1(basis_m1.size()),
        n2(basis_m2.size()),
        n_f(static_cast<int>(basis_size(dim, degree_m_f))) {
    if (degree_m1 < 1) throw ConfigError("generator: m1 must be >= 1");
    if (degree_m_f < 1) throw ConfigError("generator: m_F must be >= 1");
  }

  Matrix block(int j, int k) const {
    if (k < 1 || k > n_f) throw ConfigError("generator block: k out of range");
    return generator_block(j, k, basis_m1, basis_m2);
  }

  Matrix diffusion() const { return laplacian_matrix(basis_m1, basis_m2); }
};

// Design matrix of the coefficient least-squares problem: column (j, k) is
// vec(L^j_k) in the order (1,1), (1,2), ..., (n, N_F), optionally followed by
// one column vec(D) for the diffusion unknown sigma^2/2. Rows that are zero
// across all columns carry no information about the unknowns and are
// dropped; kept_rows records which vec-indices survive so that the same rows
// can be selected from vec(L_hat_data).
struct DesignMatrix {
  Eigen::SparseMatrix<double> a;   // kept rows x (n * N_F [+ 1])
  std::vector<Index> kept_rows;    // 0-based indices into the stacked N2*N1 rows
  Index dropped_rows = 0;
  Index w_columns = 0;             // n * N_F
  bool has_diffusion_column = false;
  bool diffusion_identifiable = false;
};

inline DesignMatrix assemble_design(const GeneratorSystem& gen,
                                    bool include_diffusion) {
  using Triplet = Eigen::Triplet<double>;
  const Index full_rows = static_cast<Index>(gen.n2) * gen.n1;
  const Index w_cols = static_cast<Index>(gen.n) * gen.n_f;

  std::vector<Triplet> entries;  // (vec-row, column, value)
  for (int j = 1; j <= gen.n; ++j) {
    for (int k = 1; k <= gen.n_f; ++k) {
      const Index col = static_cast<Index>(j - 1) * gen.n_f + (k - 1);
      const MultiIndex& mult = gen.basis_m2.exponents(k);
      for (int l = 1; l <= gen.n1; ++l) {
        const MultiIndex& s = gen.basis_m1.exponents(l);
        const int power = s[static_cast<std::size_t>(j - 1)];
        if (power == 0) continue;
        MultiIndex target = mult;
        for (int i = 0; i < gen.n; ++i)
          target[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
        target[static_cast<std::size_t>(j - 1)] -= 1;
        const Index row = static_cast<Index>(l - 1) * gen.n2 +
                          (gen.basis_m2.index_of(target) - 1);
        entries.emplace_back(static_cast<int>(row), static_cast<int>(col),
                             static_cast<double>(power));
      }
    }
  }

  bool diffusion_identifiable = false;
  if (include_diffusion) {
    const Matrix d = gen.diffusion();
    for (int l = 0; l < gen.n1; ++l) {
      for (int i = 0; i < gen.n2; ++i) {
        if (d(i, l) == 0.0) continue;
        const Index row = static_cast<Index>(l) * gen.n2 + i;
        entries.emplace_back(static_cast<int>(row), static_cast<int>(w_cols),
                             d(i, l));
        diffusion_identifiable = true;
      }
    }
  }

  // Compact away the untouched rows.
  std::vector<Index> kept;
  kept.reserve(entries.size());
  for (const auto& e : entries) kept.push_back(e.row());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  std::vector<Index> row_map(static_cast<std::size_t>(full_rows), -1);
  for (std::size_t i = 0; i < kept.size(); ++i)
    row_map[static_cast<std::size_t>(kept[i])] = static_cast<Index>(i);

  std::vector<Triplet> compact;
  compact.reserve(entries.size());
  for (const auto& e : entries)
    compact.emplace_back(static_cast<int>(row_map[static_cast<std::size_t>(e.row())]),
                         e.col(), e.value());

  DesignMatrix design;
  design.a.resize(static_cast<Index>(kept.size()),
                  w_cols + (include_diffusion ? 1 : 0));
  design.a.setFromTriplets(compact.begin(), compact.end());
  design.kept_rows = std::move(kept);
  design.dropped_rows = full_rows - static_cast<Index>(design.kept_rows.size());
  design.w_columns = w_cols;
  design.has_diffusion_column = include_diffusion;
  design.diffusion_identifiable = diffusion_identifiable;
  return design;
}

}  // namespace koopid
