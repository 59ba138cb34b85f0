#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "koopid/basis.hpp"
#include "koopid/edmd.hpp"
#include "koopid/errors.hpp"
#include "koopid/generator.hpp"
#include "koopid/linalg.hpp"
#include "koopid/types.hpp"
#include "koopid/vector_field.hpp"

namespace koopid {

struct IdentificationConfig {
  int m1 = 1;                    // degree of the probe monomials
  int m_f = 3;                   // vector-field degree bound
  double rcond = -1.0;           // singular-value cutoff; < 0 selects default
  bool estimate_diffusion = false;
  std::optional<int> input_dim;  // expected p; unset takes it from the dataset
  bool rescale = false;          // identify in per-dimension rescaled coordinates
  int m2() const { return m1 + m_f - 1; }
};

struct IdentificationResult {
  PolynomialVectorField field;  // first n rows of the coefficient solve
  std::optional<double> sigma_proc_hat;
  double residual = 0.0;   // LS residual over the effective equalities
  KoopmanEstimate koopman; // step-1 diagnostics
  Index dropped_rows = 0;  // equalities discarded as uninformative
  Matrix input_row_coefficients;  // p x N_F rows of the augmented solve (~0)
  Vector scales;                  // per-dimension rescaling used (empty: none)
  std::vector<std::string> warnings;
};

// The N2 x N1 submatrix of L_bar_data whose columns/rows correspond to
// monomials of degree <= m1 / <= m2. With the graded ordering this is the
// leading block.
inline Matrix trim_generator(const Matrix& l_bar_data,
                             const MonomialBasis& basis_m2,
                             const MonomialBasis& basis_m1) {
  if (basis_m1.dim() != basis_m2.dim())
    throw ConfigError("trim_generator: bases must share the dimension");
  if (basis_m1.size() > basis_m2.size())
    throw ConfigError("trim_generator: N1 exceeds N2 (need m1 <= m2)");
  if (l_bar_data.rows() != basis_m2.size() ||
      l_bar_data.cols() != basis_m2.size())
    throw ConfigError(
        "trim_generator: L_bar_data must be built on the degree-m2 basis");
  return l_bar_data.leftCols(basis_m1.size());
}

struct CoefficientSolve {
  Matrix w;  // n x N_F
  std::optional<double> sigma_hat;
  double residual = 0.0;
  Index dropped_rows = 0;
  bool rank_deficient = false;
  std::vector<std::string> warnings;
};

// Least-squares solve of design * w = vec(L_hat) over the effective rows.
// With m1 = 1 every unknown is pinned by exactly one equality and the
// solution is read off directly; the general path runs an SVD solve.
inline CoefficientSolve solve_coefficients(const Matrix& l_hat,
                                           const GeneratorSystem& gen,
                                           bool estimate_diffusion = false,
                                           double rcond = -1.0) {
  if (l_hat.rows() != gen.n2 || l_hat.cols() != gen.n1)
    throw ConfigError("solve_coefficients: L_hat must be N2 x N1");

  const DesignMatrix design = assemble_design(gen, estimate_diffusion);
  const Vector stacked = vec(l_hat);
  Vector rhs(design.kept_rows.size());
  for (std::size_t i = 0; i < design.kept_rows.size(); ++i)
    rhs[static_cast<Index>(i)] = stacked[design.kept_rows[i]];

  CoefficientSolve out;
  out.dropped_rows = design.dropped_rows;

  Vector solution(design.a.cols());
  if (gen.m1 == 1) {
    // Permutation structure: column (j,k) has a single unit entry.
    solution.setZero();
    for (Index col = 0; col < design.w_columns; ++col) {
      Eigen::SparseMatrix<double>::InnerIterator it(design.a, col);
      solution[col] = rhs[it.row()] / it.value();
    }
    out.residual = 0.0;
  } else {
    const Matrix dense = Matrix(design.a);
    auto [sol, rank] = lstsq_with_rank(dense, rhs, rcond);
    solution = sol;
    out.residual = (dense * solution - rhs).norm();
    if (rank < dense.cols()) {
      out.rank_deficient = true;
      std::ostringstream msg;
      msg << "coefficient design matrix is rank deficient (rank " << rank
          << " of " << dense.cols() << "); minimum-norm solution returned";
      out.warnings.push_back(msg.str());
    }
  }

  out.w.resize(gen.n, gen.n_f);
  for (int j = 0; j < gen.n; ++j)
    for (int k = 0; k < gen.n_f; ++k)
      out.w(j, k) = solution[static_cast<Index>(j) * gen.n_f + k];

  if (estimate_diffusion) {
    if (design.diffusion_identifiable) {
      // Unknown is c = sigma^2/2 >= 0; clamp small negative estimates.
      const double c = solution[design.a.cols() - 1];
      out.sigma_hat = std::sqrt(2.0 * std::max(c, 0.0));
      if (c < 0.0)
        out.warnings.push_back(
            "diffusion coefficient estimate was negative and clamped to zero");
    } else {
      out.sigma_hat = 0.0;
      out.warnings.push_back(
          "diffusion term is not identifiable: the Laplacian annihilates all "
          "monomials of degree <= 1 (m1 = 1)");
    }
  }
  return out;
}

namespace detail {

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (Error& e) {
    e.add_context(name);
    throw;
  }
}

// Map coefficients identified in z = x ./ scales coordinates back to the
// original ones: w^j_k = g^j_k * scales_j / prod_i scales_i^{psi_i(k)}.
inline Matrix unscale_coefficients(const Matrix& g, const Vector& scales,
                                   const MonomialBasis& basis_m_f) {
  Matrix w = g;
  for (int k = 1; k <= basis_m_f.size(); ++k) {
    const MultiIndex& s = basis_m_f.exponents(k);
    double monomial_scale = 1.0;
    for (int i = 0; i < basis_m_f.dim(); ++i)
      for (int e = 0; e < s[static_cast<std::size_t>(i)]; ++e)
        monomial_scale *= scales[i];
    for (Index j = 0; j < w.rows(); ++j)
      w(j, k - 1) *= scales[j] / monomial_scale;
  }
  return w;
}

}  // namespace detail

// End-to-end identification: lift the snapshots on the degree-m2 basis,
// estimate U_bar and L_bar_data, trim to the informative block, and solve for
// the vector-field coefficients. With inputs present the state is augmented
// to dimension n + p; the reported field keeps the first n rows (the input
// rows of the solve are retained as diagnostics).
inline IdentificationResult identify(const SnapshotDataset& dataset,
                                     const IdentificationConfig& config) {
  if (dataset.empty()) throw ConfigError("identify: dataset is empty");
  if (config.m1 < 1) throw ConfigError("identify: m1 must be >= 1");
  if (config.m_f < 1) throw ConfigError("identify: m_F must be >= 1");
  if (config.input_dim && *config.input_dim != dataset.input_dim()) {
    std::ostringstream msg;
    msg << "identify: config expects input dimension " << *config.input_dim
        << " but the dataset carries " << dataset.input_dim();
    throw ConfigError(msg.str());
  }

  const int n = dataset.dim();
  const int p = dataset.input_dim();
  const int n_eff = n + p;

  SnapshotDataset working = dataset;
  Vector scales;
  if (config.rescale) {
    scales = Vector::Ones(n_eff);
    for (int i = 0; i < n; ++i)
      scales[i] = std::max(dataset.x.col(i).cwiseAbs().maxCoeff(),
                           dataset.y.col(i).cwiseAbs().maxCoeff());
    for (int i = 0; i < p; ++i)
      scales[n + i] = dataset.u.col(i).cwiseAbs().maxCoeff();
    for (int i = 0; i < n_eff; ++i)
      if (scales[i] <= 0.0) scales[i] = 1.0;
    working.x = dataset.x.array().rowwise() /
                scales.head(n).transpose().array();
    working.y = dataset.y.array().rowwise() /
                scales.head(n).transpose().array();
    if (p > 0)
      working.u = dataset.u.array().rowwise() /
                  scales.tail(p).transpose().array();
  }

  const MonomialBasis basis_m2(n_eff, config.m2());
  KoopmanEstimate koopman = detail::run_stage("step 1 (EDMD)", [&] {
    return estimate_generator(working, basis_m2, config.rcond);
  });

  const GeneratorSystem gen(n_eff, config.m1, config.m_f);
  const Matrix l_hat = detail::run_stage("step 2 (trim)", [&] {
    return trim_generator(koopman.l_bar_data, gen.basis_m2, gen.basis_m1);
  });
  CoefficientSolve solve = detail::run_stage("step 2 (coefficients)", [&] {
    return solve_coefficients(l_hat, gen, config.estimate_diffusion,
                              config.rcond);
  });

  Matrix coefficients = solve.w;
  if (config.rescale) {
    coefficients =
        detail::unscale_coefficients(coefficients, scales,
                                     MonomialBasis(n_eff, config.m_f));
    if (solve.sigma_hat) {
      const double rms =
          std::sqrt(scales.head(n).squaredNorm() / static_cast<double>(n));
      *solve.sigma_hat *= rms;
      if (n > 1 && scales.head(n).minCoeff() != scales.head(n).maxCoeff())
        solve.warnings.push_back(
            "sigma estimate under anisotropic rescaling is approximate");
    }
  }

  std::vector<std::string> warnings = koopman.warnings;
  warnings.insert(warnings.end(), solve.warnings.begin(), solve.warnings.end());
  return IdentificationResult{
      make_vector_field(n, n_eff, config.m_f, coefficients.topRows(n)),
      solve.sigma_hat,
      solve.residual,
      std::move(koopman),
      solve.dropped_rows,
      coefficients.bottomRows(p),
      std::move(scales),
      std::move(warnings)};
}

}  // namespace koopid
