#include "igsf/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(who) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
}

// Non-finite entries are classified as a numerical failure rather than a
// parameter mistake: in every in-library flow they mean an upstream
// computation overflowed, and run drivers route NumericalError to their
// divergence handling.
void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite()) throw NumericalError(std::string(who) + ": non-finite entries");
}

}  // namespace

Matrix mat_exp(const Matrix& a, double t) {
  require_square(a, "mat_exp");
  require_finite(a, "mat_exp");
  if (!std::isfinite(t)) throw ParameterError("mat_exp: non-finite scale");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  Matrix x = a * t;

  // Scale so the Pade approximant operates at norm <= 0.5, then square back.
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    squarings = std::min(squarings, 60);
    x *= std::pow(2.0, -squarings);
  }

  // Diagonal (7/7) Pade approximant.
  static const double b[8] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                              25200.0,    1512.0,    56.0,      1.0};
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix x2 = x * x;
  const Matrix x4 = x2 * x2;
  const Matrix x6 = x4 * x2;
  const Matrix u = x * (b[1] * ident + b[3] * x2 + b[5] * x4 + b[7] * x6);
  const Matrix v = b[0] * ident + b[2] * x2 + b[4] * x4 + b[6] * x6;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  if (!r.allFinite()) throw NumericalError("mat_exp: result overflowed");
  return r;
}

Discretization discretize_lti(const Matrix& drift, const Matrix& diffusion, double dt) {
  require_square(drift, "discretize_lti");
  require_finite(drift, "discretize_lti");
  require_finite(diffusion, "discretize_lti");
  if (!(dt > 0.0)) throw ParameterError("discretize_lti: dt must be positive");
  const Eigen::Index n = drift.rows();
  if (diffusion.rows() != n)
    throw DimensionError("discretize_lti: diffusion has " + std::to_string(diffusion.rows()) +
                         " rows, drift is " + std::to_string(n) + "-dimensional");

  // Van Loan block matrix [[ -A, G G^T ], [ 0, A^T ]] * dt. The top-right
  // block of its exponential, premultiplied by phi, is the noise covariance.
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -drift;
  block.topRightCorner(n, n) = diffusion * diffusion.transpose();
  block.bottomRightCorner(n, n) = drift.transpose();

  const Matrix e = mat_exp(block, dt);
  Discretization out;
  out.phi = e.bottomRightCorner(n, n).transpose();
  out.noise_cov = out.phi * e.topRightCorner(n, n);
  out.noise_cov = 0.5 * (out.noise_cov + out.noise_cov.transpose()).eval();
  return out;
}

ForcedTransition lti_transition(const Matrix& drift, const Vector& input, double dt) {
  require_square(drift, "lti_transition");
  if (!(dt > 0.0)) throw ParameterError("lti_transition: dt must be positive");
  const Eigen::Index n = drift.rows();
  if (input.size() != n)
    throw DimensionError("lti_transition: input size " + std::to_string(input.size()) +
                         " does not match drift dimension " + std::to_string(n));

  ForcedTransition out;
  if (input.isZero(0.0)) {
    out.phi = mat_exp(drift, dt);
    out.forced = Vector::Zero(n);
    return out;
  }
  // Companion system [x; 1]' = [[A, u], [0, 0]] [x; 1].
  Matrix block = Matrix::Zero(n + 1, n + 1);
  block.topLeftCorner(n, n) = drift;
  block.topRightCorner(n, 1) = input;
  const Matrix e = mat_exp(block, dt);
  out.phi = e.topLeftCorner(n, n);
  out.forced = e.topRightCorner(n, 1);
  return out;
}

CholResult chol_psd(const Matrix& m, double jitter) {
  require_square(m, "chol_psd");
  require_finite(m, "chol_psd");
  if (jitter < 0.0) throw ParameterError("chol_psd: negative jitter");
  const Eigen::Index n = m.rows();

  const Matrix sym = 0.5 * (m + m.transpose());
  if (sym.isZero(0.0)) return CholResult{Matrix::Zero(n, n), 0.0};

  double shift = 0.0;
  double last_tried = 0.0;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    Eigen::LLT<Matrix> llt(sym + shift * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success)
      return CholResult{Matrix(llt.matrixL()), shift};
    last_tried = shift;
    if (jitter == 0.0) break;
    shift = (attempt == 0) ? jitter : shift * 10.0;
  }
  throw NumericalError("chol_psd: factorization failed for " + std::to_string(n) + "x" +
                       std::to_string(n) + " matrix (last shift " + std::to_string(last_tried) +
                       ")");
}

Matrix psd_solve(const Matrix& lower, const Matrix& rhs) {
  if (lower.rows() != rhs.rows())
    throw DimensionError("psd_solve: rhs has " + std::to_string(rhs.rows()) +
                         " rows, factor is " + std::to_string(lower.rows()) + "-dimensional");
  Matrix y = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

double gauss_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size())
    throw DimensionError("gauss_logpdf: inconsistent dimensions");
  const CholResult chol = chol_psd(cov, default_jitter(cov));
  const Vector diff = x - mean;
  const Vector y = chol.lower.triangularView<Eigen::Lower>().solve(diff);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) logdet += std::log(chol.lower(i, i));
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + y.squaredNorm()) - logdet;
}

double default_jitter(const Matrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  const double scale = m.diagonal().cwiseAbs().sum() / static_cast<double>(n);
  return 1e-14 * std::max(1.0, scale);
}

}  // namespace igsf
