#pragma once

#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "koopid/basis.hpp"
#include "koopid/errors.hpp"
#include "koopid/types.hpp"

namespace koopid {

// Polynomial vector field F_j(x) = sum_k w^j_k p_k(x) as a coefficient table
// over the shared graded-lexicographic monomial basis of degree <= `degree`.
// `dim` is the number of field components; `n_vars` the number of monomial
// variables. They coincide for closed systems; for systems with p inputs the
// identified field has n components over n + p variables (the inputs are
// frozen extra states).
struct PolynomialVectorField {
  int dim = 0;
  int n_vars = 0;
  int degree = 0;
  Matrix coefficients;  // dim x basis_size(n_vars, degree); row j is w^j

  const MonomialBasis& basis() const {
    if (!basis_) basis_ = std::make_shared<MonomialBasis>(n_vars, degree);
    return *basis_;
  }

 private:
  mutable std::shared_ptr<MonomialBasis> basis_;
};

inline PolynomialVectorField make_vector_field(int dim, int n_vars, int degree,
                                               Matrix coefficients) {
  if (dim < 1) throw ConfigError("vector field: dim must be >= 1");
  if (n_vars < dim)
    throw ConfigError("vector field: n_vars must be at least dim");
  const std::int64_t n_f = basis_size(n_vars, degree);
  if (coefficients.rows() != dim || coefficients.cols() != n_f)
    throw ConfigError("vector field: coefficient table must be dim x N_F");
  if (!coefficients.allFinite())
    throw ConfigError("vector field: non-finite coefficients");
  PolynomialVectorField f;
  f.dim = dim;
  f.n_vars = n_vars;
  f.degree = degree;
  f.coefficients = std::move(coefficients);
  return f;
}

// F_j(x) = sum_k w^j_k p_k(x); x must have n_vars components (state plus any
// frozen inputs).
inline Vector evaluate_field(const PolynomialVectorField& field,
                             const Eigen::Ref<const Vector>& x) {
  return field.coefficients * field.basis().lift(x);
}

// Assembles coefficient tables monomial by monomial; coefficients for a
// repeated monomial accumulate.
class FieldBuilder {
 public:
  FieldBuilder(int dim, int n_vars, int degree)
      : dim_(dim),
        n_vars_(n_vars),
        degree_(degree),
        basis_(n_vars, degree),
        table_(Matrix::Zero(dim, basis_size(n_vars, degree))) {
    if (dim < 1 || n_vars < dim) throw ConfigError("field builder: bad dimensions");
  }

  // Add w * x^exponents to component j (1-based).
  FieldBuilder& add(int j, const MultiIndex& exponents, double w) {
    if (j < 1 || j > dim_) throw ConfigError("field builder: component out of range");
    table_(j - 1, basis_.index_of(exponents) - 1) += w;
    return *this;
  }

  FieldBuilder& add(int j, std::initializer_list<int> exponents, double w) {
    return add(j, MultiIndex(exponents), w);
  }

  PolynomialVectorField build() const {
    return make_vector_field(dim_, n_vars_, degree_, table_);
  }

 private:
  int dim_;
  int n_vars_;
  int degree_;
  MonomialBasis basis_;
  Matrix table_;
};

}  // namespace koopid
