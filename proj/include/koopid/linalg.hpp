#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "koopid/errors.hpp"
#include "koopid/types.hpp"

namespace koopid {

// Relative singular-value cutoff used when the caller does not supply one.
inline double default_rcond(Index rows, Index cols) {
  return std::numeric_limits<double>::epsilon() *
         static_cast<double>(std::max(rows, cols));
}

// Eigenvalue diagnostics attached to matrix-log results and Koopman
// estimates. min_real_eigenvalue is the smallest eigenvalue among those that
// are numerically real (+inf when there are none); max_abs_imag_log is the
// largest |Im log(lambda)| = |arg(lambda)|, the quantity that must stay
// below pi for the principal log to match the sampled generator.
struct SpectrumReport {
  Eigen::VectorXcd eigenvalues;
  double min_real_eigenvalue = std::numeric_limits<double>::infinity();
  double max_abs_imag_log = 0.0;
};

namespace detail {

// Distance from the real axis below which an eigenvalue is treated as real.
inline bool numerically_real(const std::complex<double>& z) {
  return std::abs(z.imag()) <= 1e-10 * std::max(1.0, std::abs(z));
}

inline SpectrumReport make_spectrum_report(const Eigen::VectorXcd& eig) {
  SpectrumReport rep;
  rep.eigenvalues = eig;
  for (Index i = 0; i < eig.size(); ++i) {
    const std::complex<double> z = eig[i];
    if (numerically_real(z))
      rep.min_real_eigenvalue = std::min(rep.min_real_eigenvalue, z.real());
    if (std::abs(z) > 0.0)
      rep.max_abs_imag_log = std::max(rep.max_abs_imag_log, std::abs(std::arg(z)));
  }
  return rep;
}

inline double one_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

inline double one_norm(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

struct Svd {
  Matrix u;
  Matrix v;
  Vector sigma;
};

inline Svd compute_svd(const Matrix& a) {
  if (!a.allFinite()) throw Error("svd: matrix has non-finite entries");
  // Jacobi is the most accurate option and cheap at the sizes the pipeline
  // produces; fall back to the divide-and-conquer kernel for larger inputs.
  if (std::min(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "SVD did not converge on a " << a.rows() << "x" << a.cols()
          << " matrix (|A|_1 = " << one_norm(a) << ")";
      throw NumericalError(msg.str());
    }
    return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "SVD did not converge on a " << a.rows() << "x" << a.cols()
        << " matrix (|A|_1 = " << one_norm(a) << ")";
    throw NumericalError(msg.str());
  }
  return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

}  // namespace detail

// Moore-Penrose pseudoinverse. Singular values <= rcond * sigma_max are
// treated as zero; rcond < 0 selects the default cutoff.
inline Matrix pseudoinverse(const Matrix& a, double rcond = -1.0) {
  const auto svd = detail::compute_svd(a);
  if (rcond < 0.0) rcond = default_rcond(a.rows(), a.cols());
  const double smax = svd.sigma.size() ? svd.sigma.maxCoeff() : 0.0;
  const double cutoff = rcond * smax;
  Vector inv = Vector::Zero(svd.sigma.size());
  for (Index i = 0; i < svd.sigma.size(); ++i)
    if (svd.sigma[i] > cutoff && svd.sigma[i] > 0.0) inv[i] = 1.0 / svd.sigma[i];
  return svd.v * inv.asDiagonal() * svd.u.transpose();
}

// Minimum-norm least-squares solution X of A X ~= B, with the same
// truncation rule as pseudoinverse. Also reports the numerical rank of A.
inline std::pair<Matrix, Index> lstsq_with_rank(const Matrix& a, const Matrix& b,
                                                double rcond = -1.0) {
  if (a.rows() != b.rows())
    throw ConfigError("lstsq: A and B must have the same number of rows");
  const auto svd = detail::compute_svd(a);
  if (rcond < 0.0) rcond = default_rcond(a.rows(), a.cols());
  const double smax = svd.sigma.size() ? svd.sigma.maxCoeff() : 0.0;
  const double cutoff = rcond * smax;
  Matrix t = svd.u.transpose() * b;
  Index rank = 0;
  for (Index i = 0; i < svd.sigma.size(); ++i) {
    if (svd.sigma[i] > cutoff && svd.sigma[i] > 0.0) {
      t.row(i) /= svd.sigma[i];
      ++rank;
    } else {
      t.row(i).setZero();
    }
  }
  return {svd.v * t, rank};
}

inline Matrix lstsq(const Matrix& a, const Matrix& b, double rcond = -1.0) {
  return lstsq_with_rank(a, b, rcond).first;
}

// Column-stacked vectorization.
inline Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

// Matrix exponential by scaling-and-squaring with a degree-13 diagonal Pade
// approximant.
inline Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw ConfigError("expm: matrix must be square");
  if (!a.allFinite()) throw Error("expm: matrix has non-finite entries");
  const Index n = a.rows();
  if (n == 0) return a;

  static constexpr double theta13 = 5.371920351148152;
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};

  int squarings = 0;
  Matrix as = a;
  const double nrm = detail::one_norm(a);
  if (nrm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    as /= std::exp2(squarings);
  }

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a2 * a4;
  const Matrix u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
            b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * id;
  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

namespace detail {

// Principal square root of an upper-triangular complex matrix
// (Bjorck-Hammarling recurrence).
inline Eigen::MatrixXcd sqrtm_triangular(const Eigen::MatrixXcd& t) {
  const Index n = t.rows();
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  for (Index i = 0; i < n; ++i) s(i, i) = std::sqrt(t(i, i));
  for (Index d = 1; d < n; ++d) {
    for (Index i = 0; i + d < n; ++i) {
      const Index j = i + d;
      std::complex<double> acc = t(i, j);
      for (Index k = i + 1; k < j; ++k) acc -= s(i, k) * s(k, j);
      s(i, j) = acc / (s(i, i) + s(j, j));
    }
  }
  return s;
}

// Nodes/weights of 8-point Gauss-Legendre quadrature on [0, 1]; the [8/8]
// diagonal Pade approximant of log(1 + x) in partial-fraction form.
inline const std::array<std::pair<double, double>, 8>& gauss_legendre_8() {
  static const std::array<std::pair<double, double>, 8> table = [] {
    std::array<std::pair<double, double>, 8> t{};
    constexpr int m = 8;
    for (int i = 0; i < m; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
          const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      t[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x),
                                        1.0 / ((1.0 - x * x) * dp * dp)};
    }
    std::sort(t.begin(), t.end());
    return t;
  }();
  return table;
}

}  // namespace detail

struct LogmResult {
  Matrix value;
  SpectrumReport spectrum;
};

// Principal matrix logarithm of a real nonsingular matrix via complex Schur
// decomposition and inverse scaling-and-squaring with a diagonal Pade
// approximant. Eigenvalues on the closed negative real axis (within 1e-10 of
// it) have no real principal log and raise NegativeRealEigenvalueError;
// numerically singular input raises SingularMatrixError.
inline LogmResult logm_principal(const Matrix& a) {
  if (a.rows() != a.cols()) throw ConfigError("logm: matrix must be square");
  if (!a.allFinite()) throw Error("logm: matrix has non-finite entries");
  const Index n = a.rows();
  if (n == 0) return {a, SpectrumReport{}};

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success)
    throw NumericalError("logm: complex Schur decomposition did not converge");
  Eigen::MatrixXcd t = schur.matrixT();
  const Eigen::MatrixXcd& q = schur.matrixU();

  const Eigen::VectorXcd eig = t.diagonal();
  SpectrumReport report = detail::make_spectrum_report(eig);

  const double max_abs = eig.cwiseAbs().maxCoeff();
  const double singular_tol =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_abs;
  for (Index i = 0; i < n; ++i) {
    const std::complex<double> z = eig[i];
    if (std::abs(z) <= singular_tol) {
      std::ostringstream msg;
      msg << "logm: matrix is numerically singular (eigenvalue " << z << ")";
      throw SingularMatrixError(msg.str());
    }
    if (z.real() < 0.0 && detail::numerically_real(z)) {
      std::ostringstream msg;
      msg << "logm: eigenvalue " << z.real()
          << " lies on the negative real axis; the principal logarithm is not "
             "a real matrix";
      throw NegativeRealEigenvalueError(msg.str());
    }
  }

  // Inverse scaling: repeated principal square roots until T is close enough
  // to the identity for the Pade approximant.
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  int sqrt_count = 0;
  while (detail::one_norm(Eigen::MatrixXcd(t - id)) > 0.25) {
    if (++sqrt_count > 60)
      throw NumericalError("logm: inverse scaling-and-squaring did not converge");
    t = detail::sqrtm_triangular(t);
  }

  const Eigen::MatrixXcd x = t - id;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& [node, weight] : detail::gauss_legendre_8()) {
    const Eigen::MatrixXcd denom = id + node * x;
    r += weight * denom.triangularView<Eigen::Upper>().solve(x);
  }
  r *= std::exp2(sqrt_count);

  const Eigen::MatrixXcd log_a = q * r * q.adjoint();
  return {log_a.real(), std::move(report)};
}

}  // namespace koopid
