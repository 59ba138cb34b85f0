#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "koopid/errors.hpp"
#include "koopid/types.hpp"
#include "koopid/vector_field.hpp"

namespace koopid {

// Coefficient-space error between an identified field and the ground truth:
// rmse over all n * N_F entries and nrmse = rmse / mean |nonzero exact
// coefficient|.
struct CoefficientError {
  double rmse = 0.0;
  double nrmse = 0.0;
  Matrix per_coefficient;  // signed estimated - exact
};

inline CoefficientError coefficient_error(const PolynomialVectorField& estimated,
                                          const PolynomialVectorField& exact) {
  if (estimated.dim != exact.dim || estimated.n_vars != exact.n_vars ||
      estimated.degree != exact.degree)
    throw ConfigError(
        "coefficient_error: fields must share dimension, variables, and degree");
  CoefficientError err;
  err.per_coefficient = estimated.coefficients - exact.coefficients;
  err.rmse = std::sqrt(err.per_coefficient.squaredNorm() /
                       static_cast<double>(err.per_coefficient.size()));
  double mag = 0.0;
  Index nonzero = 0;
  for (Index j = 0; j < exact.coefficients.rows(); ++j) {
    for (Index k = 0; k < exact.coefficients.cols(); ++k) {
      if (exact.coefficients(j, k) != 0.0) {
        mag += std::abs(exact.coefficients(j, k));
        ++nonzero;
      }
    }
  }
  if (nonzero == 0)
    throw ConfigError(
        "coefficient_error: exact field is identically zero; NRMSE undefined");
  err.nrmse = err.rmse / (mag / static_cast<double>(nonzero));
  return err;
}

// Predicted interaction graph: a link x_l -> x_j whenever some coefficient
// w^j_k with |w| strictly above the threshold belongs to a monomial
// containing x_l.
inline Adjacency reconstruct_links(const PolynomialVectorField& field,
                                   double threshold) {
  if (!(threshold > 0.0))
    throw ConfigError("reconstruct_links: threshold must be positive");
  if (field.n_vars != field.dim)
    throw ConfigError("reconstruct_links: field must be square (no inputs)");
  const MonomialBasis& basis = field.basis();
  Adjacency adj = Adjacency::Constant(field.dim, field.dim, false);
  for (int j = 0; j < field.dim; ++j) {
    for (int k = 1; k <= basis.size(); ++k) {
      if (std::abs(field.coefficients(j, k - 1)) <= threshold) continue;
      const MultiIndex& s = basis.exponents(k);
      for (int l = 0; l < field.dim; ++l)
        if (s[static_cast<std::size_t>(l)] >= 1) adj(j, l) = true;
    }
  }
  return adj;
}

// True/false positive rates of a predicted adjacency against the ground
// truth. Self-links are excluded from both numerators and denominators
// (every node trivially carries a stabilizing linear self-term). A rate with
// an empty denominator is reported as undefined rather than 0/0.
struct LinkScore {
  std::optional<double> tpr;
  std::optional<double> fpr;
  Adjacency predicted;
};

inline LinkScore link_score(const Adjacency& predicted, const Adjacency& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw ConfigError("link_score: adjacency shapes differ");
  Index tp = 0, fp = 0, positives = 0, negatives = 0;
  for (Index j = 0; j < truth.rows(); ++j) {
    for (Index l = 0; l < truth.cols(); ++l) {
      if (j == l) continue;
      if (truth(j, l)) {
        ++positives;
        if (predicted(j, l)) ++tp;
      } else {
        ++negatives;
        if (predicted(j, l)) ++fp;
      }
    }
  }
  LinkScore score;
  score.predicted = predicted;
  if (positives > 0)
    score.tpr = static_cast<double>(tp) / static_cast<double>(positives);
  if (negatives > 0)
    score.fpr = static_cast<double>(fp) / static_cast<double>(negatives);
  return score;
}

// (threshold, tpr, fpr) rows for a threshold sweep, e.g. for ROC output.
struct RocPoint {
  double threshold = 0.0;
  std::optional<double> tpr;
  std::optional<double> fpr;
};

inline std::vector<RocPoint> roc_sweep(const PolynomialVectorField& field,
                                       const Adjacency& truth,
                                       const std::vector<double>& thresholds) {
  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) {
    const LinkScore s = link_score(reconstruct_links(field, t), truth);
    points.push_back({t, s.tpr, s.fpr});
  }
  return points;
}

}  // namespace koopid
