#pragma once

// Test-only symbolic polynomial algebra, independent of the index arithmetic
// used by the library: polynomials as exponent-map -> integer coefficient.
// Used as the oracle for the generator matrices.

#include <map>
#include <vector>

#include "koopid/basis.hpp"
#include "koopid/types.hpp"

namespace oracle {

using Poly = std::map<koopid::MultiIndex, long long>;

inline Poly monomial(const koopid::MultiIndex& s) { return {{s, 1}}; }

inline Poly derivative(const Poly& p, int var) {
  Poly out;
  for (const auto& [s, c] : p) {
    const int e = s[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    koopid::MultiIndex t = s;
    t[static_cast<std::size_t>(var)] -= 1;
    out[t] += c * e;
  }
  return out;
}

inline Poly multiply(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [sa, ca] : a) {
    for (const auto& [sb, cb] : b) {
      koopid::MultiIndex s = sa;
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += sb[i];
      out[s] += ca * cb;
    }
  }
  return out;
}

// Expansion of p in the given basis as a column vector; every monomial of p
// must lie in the basis.
inline koopid::Vector expand(const Poly& p, const koopid::MonomialBasis& basis) {
  koopid::Vector out = koopid::Vector::Zero(basis.size());
  for (const auto& [s, c] : p)
    if (c != 0) out[basis.index_of(s) - 1] = static_cast<double>(c);
  return out;
}

// Column l of the projection of p_k d/dx_j (all 1-based), built purely from
// polynomial algebra.
inline koopid::Matrix generator_block(int j, int k,
                                      const koopid::MonomialBasis& basis_m1,
                                      const koopid::MonomialBasis& basis_m2) {
  koopid::Matrix block(basis_m2.size(), basis_m1.size());
  const Poly pk = monomial(basis_m2.exponents(k));
  for (int l = 1; l <= basis_m1.size(); ++l) {
    const Poly image =
        multiply(pk, derivative(monomial(basis_m1.exponents(l)), j - 1));
    block.col(l - 1) = expand(image, basis_m2);
  }
  return block;
}

inline koopid::Matrix laplacian(const koopid::MonomialBasis& basis_m1,
                                const koopid::MonomialBasis& basis_m2) {
  koopid::Matrix d(basis_m2.size(), basis_m1.size());
  for (int l = 1; l <= basis_m1.size(); ++l) {
    Poly sum;
    for (int j = 0; j < basis_m1.dim(); ++j) {
      const Poly dd = derivative(derivative(monomial(basis_m1.exponents(l)), j), j);
      for (const auto& [s, c] : dd) sum[s] += c;
    }
    d.col(l - 1) = expand(sum, basis_m2);
  }
  return d;
}

}  // namespace oracle
