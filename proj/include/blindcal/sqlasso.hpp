#pragma once

#include <vector>

#include "blindcal/types.hpp"

namespace blindcal {

/// Settings of the inner convex solve
///   min_x ||x||_1 + lambda ||y - A x||_2.
struct SolverConfig {
  double lambda = 1.0;
  /// Cap on homotopy breakpoints.
  int max_iters = 5000;
  /// Relative tolerance used by callers that compare successive objectives.
  double tol = 1e-9;
  /// Residual norms below smoothing_eps * max(1, ||y||) count as zero.
  double smoothing_eps = 1e-10;

  void validate() const;
};

struct SolveReport {
  Vector x_hat;
  double objective = 0.0;
  int iterations = 0;
  double kkt_violation = 0.0;
  bool converged = false;
  /// Objective at every breakpoint visited, starting from x = 0.
  std::vector<double> objective_trace;
};

/// Optimality certificate of a square-root LASSO point.
struct KktCertificate {
  double violation = 0.0;
  /// The residual vanished, so the certificate used the ball-shaped
  /// subdifferential of the data term instead of the normalized gradient.
  /// Only the least-norm multiplier is tried in that case, so a positive
  /// violation is inconclusive rather than proof of suboptimality.
  bool zero_residual = false;
};

/// Real embedding of a complex system for a real unknown: [Re A; Im A], [Re y; Im y].
struct RealSystem {
  Matrix A;
  Vector b;
};

RealSystem real_stack(const CMatrix& A, const CVector& y);

/// ||x||_1 + lambda ||b - A x||_2
double sqlasso_objective(const Matrix& A, const Vector& b, double lambda, const Vector& x);
double sqlasso_objective(const CMatrix& A, const CVector& y, double lambda, const Vector& x);

/// Exact solver: follows the LASSO regularization path downward from
/// ||A^T b||_inf and stops where ||b - A x(tau)|| = lambda * tau, which is the
/// stationarity condition of the square-root problem.
SolveReport solve_sqlasso(const Matrix& A, const Vector& b, const SolverConfig& cfg);
SolveReport solve_sqlasso(const CMatrix& A, const CVector& y, const SolverConfig& cfg);

/// Perturbation-agnostic recovery used by the first baseline: the same
/// square-root program on whatever (typically unperturbed) matrix is given.
SolveReport solve_bp(const CMatrix& A, const CVector& y, const SolverConfig& cfg);

/// max(0, max_i |g_i| - 1, max_{i in supp} |g_i - sign(x_i)|) with
/// g = lambda A^T rho / ||rho||, rho = b - A x.
KktCertificate kkt_residual(const Matrix& A, const Vector& b, double lambda, const Vector& x_hat,
                            double smoothing_eps = 1e-10);
KktCertificate kkt_residual(const CMatrix& A, const CVector& y, double lambda, const Vector& x_hat,
                            double smoothing_eps = 1e-10);

}  // namespace blindcal
