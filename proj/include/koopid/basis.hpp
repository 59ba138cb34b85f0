#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "koopid/errors.hpp"
#include "koopid/types.hpp"

namespace koopid {

// Exponent tuple (s_1, ..., s_n) of one monomial x_1^{s_1} ... x_n^{s_n}.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& s) {
  return std::accumulate(s.begin(), s.end(), 0);
}

// Number of monomials of total degree <= m in n variables: C(n+m, n).
// Exact integer arithmetic; overflow raises instead of wrapping.
inline std::int64_t basis_size(int n, int m) {
  if (n < 1) throw ConfigError("basis_size: dimension must be >= 1");
  if (m < 0) throw ConfigError("basis_size: degree must be >= 0");
  const std::uint64_t k = static_cast<std::uint64_t>(std::min(n, m));
  const std::uint64_t top = static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(m);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    std::uint64_t t = 0;
    if (__builtin_mul_overflow(r, top - k + i, &t))
      throw Error("basis_size: binomial coefficient exceeds the 64-bit integer range");
    r = t / i;  // exact: r*(top-k+i) is divisible by i at this step
  }
  if (r > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw Error("basis_size: binomial coefficient exceeds the 64-bit integer range");
  return static_cast<std::int64_t>(r);
}

// Ordered basis of all monomials of total degree <= max_degree in `dim`
// variables. Order is graded lexicographic: total degree ascending, and
// within a degree the exponent tuples sorted lexicographically descending
// (s_1 most significant, larger s_1 first). Position 1 is the constant
// monomial. All public positions k are 1-based, matching the usual
// p_1, ..., p_N notation.
//
// Immutable after construction; safe to share across threads.
class MonomialBasis {
 public:
  MonomialBasis(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
    const std::int64_t n = basis_size(dim, max_degree);  // also validates args
    indices_.reserve(static_cast<std::size_t>(n));
    MultiIndex scratch(static_cast<std::size_t>(dim), 0);
    for (int d = 0; d <= max_degree; ++d) enumerate(d, 0, scratch);
    for (std::size_t k = 0; k < indices_.size(); ++k)
      reverse_.emplace(indices_[k], static_cast<int>(k) + 1);
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  int size() const { return static_cast<int>(indices_.size()); }

  // Exponents of p_k, 1 <= k <= size().
  const MultiIndex& exponents(int k) const {
    if (k < 1 || k > size())
      throw ConfigError("MonomialBasis::exponents: position out of range");
    return indices_[static_cast<std::size_t>(k - 1)];
  }

  // Position of the monomial with exponents s; nullopt if s is not in the
  // basis (degree above max_degree or a negative exponent).
  std::optional<int> try_index_of(const MultiIndex& s) const {
    if (static_cast<int>(s.size()) != dim_)
      throw ConfigError("MonomialBasis::index_of: multi-index has wrong length");
    for (int e : s)
      if (e < 0) return std::nullopt;
    if (total_degree(s) > max_degree_) return std::nullopt;
    const auto it = reverse_.find(s);
    return it == reverse_.end() ? std::nullopt : std::optional<int>(it->second);
  }

  // Throwing variant of try_index_of.
  int index_of(const MultiIndex& s) const {
    const auto k = try_index_of(s);
    if (!k) {
      std::ostringstream msg;
      msg << "monomial (";
      for (std::size_t i = 0; i < s.size(); ++i) msg << (i ? "," : "") << s[i];
      msg << ") is outside the basis of degree <= " << max_degree_;
      throw OutOfBasisError(msg.str());
    }
    return *k;
  }

  // Evaluate all basis monomials at x; component k is prod_i x_i^{s_i} with
  // s = exponents(k), so component 1 is always 1.
  Vector lift(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim_)
      throw ConfigError("MonomialBasis::lift: point dimension mismatch");
    if (!x.allFinite()) throw Error("MonomialBasis::lift: non-finite state");
    Vector out(size());
    for (int k = 0; k < size(); ++k) {
      const MultiIndex& s = indices_[static_cast<std::size_t>(k)];
      double v = 1.0;
      for (int i = 0; i < dim_; ++i)
        for (int e = 0; e < s[static_cast<std::size_t>(i)]; ++e) v *= x[i];
      out[k] = v;
    }
    return out;
  }

 private:
  void enumerate(int remaining, int pos, MultiIndex& scratch) {
    if (pos == dim_ - 1) {
      scratch[static_cast<std::size_t>(pos)] = remaining;
      indices_.push_back(scratch);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      scratch[static_cast<std::size_t>(pos)] = v;
      enumerate(remaining - v, pos + 1, scratch);
    }
  }

  int dim_;
  int max_degree_;
  std::vector<MultiIndex> indices_;
  std::map<MultiIndex, int> reverse_;
};

}  // namespace koopid
