// Dense linear-algebra helpers used by the filters: matrix exponential,
// exact discretization of linear SDEs, guarded Cholesky, Gaussian log
// densities. Everything is double precision and backed by Eigen.
#pragma once

#include <Eigen/Dense>

namespace igsf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// exp(a*t) by scaling-and-squaring with a fixed-order (7/7) Pade core.
Matrix mat_exp(const Matrix& a, double t = 1.0);

// One-step exact discretization of dx = drift*x dt + diffusion dB over dt:
//   phi       = exp(drift*dt)
//   noise_cov = integral_0^dt exp(drift*s) * diffusion*diffusion^T * exp(drift^T*s) ds
// computed with the Van Loan augmented-exponential construction.
struct Discretization {
  Matrix phi;
  Matrix noise_cov;
};
Discretization discretize_lti(const Matrix& drift, const Matrix& diffusion, double dt);

// Transition for dx = drift*x dt + input dt with the input held constant over
// the step: x(dt) = phi*x(0) + forced. Both pieces come from one exponential
// of the (n+1)-dimensional constant-input companion matrix.
struct ForcedTransition {
  Matrix phi;
  Vector forced;
};
ForcedTransition lti_transition(const Matrix& drift, const Vector& input, double dt);

// Lower Cholesky factor of a symmetric positive semidefinite matrix with a
// jitter ladder: tries shift = 0, then jitter, 10*jitter, ... (ten
// escalations) added to the diagonal until the factorization succeeds.
// `shift` reports the value actually used. An all-zero matrix factorizes to
// zero with no shift. Throws NumericalError when every rung fails.
struct CholResult {
  Matrix lower;
  double shift = 0.0;
};
CholResult chol_psd(const Matrix& m, double jitter);

// Solves (L L^T) x = rhs given a lower factor from chol_psd.
Matrix psd_solve(const Matrix& lower, const Matrix& rhs);

// log N(x; mean, cov) evaluated through a guarded Cholesky of cov.
double gauss_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

// Scale-aware base jitter for covariance-like matrices.
double default_jitter(const Matrix& m);

}  // namespace igsf
