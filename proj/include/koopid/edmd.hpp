#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "koopid/basis.hpp"
#include "koopid/errors.hpp"
#include "koopid/linalg.hpp"
#include "koopid/types.hpp"

namespace koopid {

// K snapshot pairs (x_k, y_k) sampled with one common period, optionally with
// a constant-per-pair input u_k (zero-order hold). Pairs may come from
// different trajectories. Row k of x/y/u is pair k.
struct SnapshotDataset {
  Matrix x;                 // K x n
  Matrix y;                 // K x n
  Matrix u;                 // K x p, zero columns when there are no inputs
  Vector t0;                // time of x_k (size K, or empty when unknown)
  double sampling_period = 0.0;

  int dim() const { return static_cast<int>(x.cols()); }
  int input_dim() const { return static_cast<int>(u.cols()); }
  int effective_dim() const { return dim() + input_dim(); }
  Index size() const { return x.rows(); }
  bool empty() const { return x.rows() == 0; }
};

inline SnapshotDataset make_dataset(Matrix x, Matrix y, double sampling_period,
                                    Matrix u = {}, Vector t0 = {}) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ConfigError("dataset: x and y snapshots must have matching shapes");
  if (x.cols() < 1) throw ConfigError("dataset: state dimension must be >= 1");
  if (!(sampling_period > 0.0))
    throw ConfigError("dataset: sampling period must be positive");
  if (u.size() > 0 && u.rows() != x.rows())
    throw ConfigError("dataset: one input row per snapshot pair required");
  if (t0.size() > 0 && t0.size() != x.rows())
    throw ConfigError("dataset: one t0 entry per snapshot pair required");
  if (!x.allFinite() || !y.allFinite() || !u.allFinite())
    throw ConfigError("dataset: non-finite entries");
  SnapshotDataset ds;
  ds.x = std::move(x);
  ds.y = std::move(y);
  ds.u = std::move(u);
  ds.t0 = std::move(t0);
  ds.sampling_period = sampling_period;
  return ds;
}

// Step-1 output: lifted data matrices, the projected Koopman matrix U_bar,
// and the data-side generator L_bar_data = log(U_bar)/T_s, with the spectral
// diagnostics every downstream failure mode shows up in.
struct KoopmanEstimate {
  MonomialBasis basis;  // degree m2 over the effective dimension
  Matrix p_x;           // K x N
  Matrix p_y;           // K x N
  Matrix u_bar;         // N x N
  Matrix l_bar_data;    // N x N
  SpectrumReport spectrum;
  double residual = 0.0;  // |P_x U - P_y|_F / |P_y|_F
  Index rank_p_x = 0;
  bool underdetermined = false;  // K < N
  std::vector<std::string> warnings;
};

// Lift the snapshots: row k of P_x is p([x_k, u_k])^T and row k of P_y is
// p([y_k, u_k])^T (inputs appended as frozen extra states).
inline std::pair<Matrix, Matrix> build_data_matrices(const SnapshotDataset& ds,
                                                     const MonomialBasis& basis) {
  if (ds.empty()) throw ConfigError("build_data_matrices: empty dataset");
  if (basis.dim() != ds.effective_dim())
    throw ConfigError(
        "build_data_matrices: basis dimension must equal state dimension plus "
        "input dimension");
  const Index k_count = ds.size();
  const int n = ds.dim(), p = ds.input_dim();
  Matrix p_x(k_count, basis.size()), p_y(k_count, basis.size());
  Vector point(n + p);
  for (Index k = 0; k < k_count; ++k) {
    point.head(n) = ds.x.row(k);
    if (p > 0) point.tail(p) = ds.u.row(k);
    p_x.row(k) = basis.lift(point);
    point.head(n) = ds.y.row(k);
    p_y.row(k) = basis.lift(point);
  }
  return {std::move(p_x), std::move(p_y)};
}

// U_bar = (P_x)^+ P_y, the least-squares solution of P_x U ~= P_y.
inline Matrix estimate_koopman(const Matrix& p_x, const Matrix& p_y,
                               double rcond = -1.0) {
  if (p_x.rows() != p_y.rows() || p_x.cols() != p_y.cols())
    throw ConfigError("estimate_koopman: P_x and P_y must have the same shape");
  return lstsq(p_x, p_y, rcond);
}

// Full step 1: lift, solve for U_bar, and take the principal matrix log
// scaled by 1/T_s. Failure of the log is reported with a remediation hint,
// since it is the small-data signature of the method.
inline KoopmanEstimate estimate_generator(const SnapshotDataset& ds,
                                          const MonomialBasis& basis,
                                          double rcond = -1.0) {
  if (!(ds.sampling_period > 0.0))
    throw ConfigError("estimate_generator: sampling period must be positive");
  auto [p_x, p_y] = build_data_matrices(ds, basis);
  auto [u_bar, rank] = lstsq_with_rank(p_x, p_y, rcond);

  KoopmanEstimate est{basis,
                      std::move(p_x),
                      std::move(p_y),
                      std::move(u_bar),
                      Matrix(),
                      SpectrumReport{},
                      0.0,
                      rank,
                      false,
                      {}};
  const double ref = est.p_y.norm();
  est.residual = (est.p_x * est.u_bar - est.p_y).norm() / (ref > 0.0 ? ref : 1.0);
  est.underdetermined = est.p_x.rows() < est.p_x.cols();
  if (est.underdetermined) {
    std::ostringstream msg;
    msg << "underdetermined least squares: K = " << est.p_x.rows()
        << " snapshot pairs for N = " << est.p_x.cols()
        << " basis functions; minimum-norm solution returned";
    est.warnings.push_back(msg.str());
  }
  if (rank < std::min(est.p_x.rows(), est.p_x.cols())) {
    std::ostringstream msg;
    msg << "P_x is rank deficient (rank " << rank << " of "
        << std::min(est.p_x.rows(), est.p_x.cols()) << ")";
    est.warnings.push_back(msg.str());
  }

  try {
    LogmResult log = logm_principal(est.u_bar);
    est.l_bar_data = log.value / ds.sampling_period;
    est.spectrum = std::move(log.spectrum);
  } catch (NegativeRealEigenvalueError& e) {
    NegativeRealEigenvalueError out(std::string(e.what()) +
                                    "; add more snapshot pairs or reduce the "
                                    "sampling period T_s");
    out.add_context("estimate_generator");
    throw out;
  }

  if (est.spectrum.max_abs_imag_log > 0.9 * std::numbers::pi) {
    std::ostringstream msg;
    msg << "log-eigenvalues reach " << est.spectrum.max_abs_imag_log
        << " in imaginary part, close to the principal branch boundary pi; "
           "consider a smaller sampling period T_s";
    est.warnings.push_back(msg.str());
  }
  return est;
}

}  // namespace koopid
