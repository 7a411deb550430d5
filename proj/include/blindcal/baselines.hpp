#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "blindcal/altmin.hpp"

namespace blindcal {

struct BaselineReport {
  Vector x_hat;
  Vector coeffs;
  /// Per-measurement perturbation estimate (empty for the first baseline).
  Vector delta_hat;
  Vector beta_hat;
  /// Filled by callers that know the ground truth; NaN otherwise.
  double rrmse = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> objective_trace;
  double objective = 0.0;
  bool converged = false;
  int outer_iters = 0;
  int start_index = 0;
  /// J trace of every start, in start order (multistart callers only).
  std::vector<std::vector<double>> start_traces;
};

/// Ignores the perturbations: square-root LASSO on F(u) Psi.
BaselineReport baseline1(const Problem& problem, const SolverConfig& solver_cfg);

/// First-order surrogate ||theta||_1 + lambda ||y - (F - i diag(delta) F X) Psi theta||_2.
double taylor_objective(const Problem& problem, const Vector& coeffs, const Vector& delta, double lambda);

/// One alternation under the first-order model starting from parameters
/// `beta0`: a square-root LASSO step on (F - i diag(delta) F X) Psi, then a
/// closed-form clamped least-squares update of every parameter. Only 1D
/// problems with the independent or identity-group links are accepted.
BaselineReport taylor_recovery(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg,
                               const Vector& beta0);

/// Taylor-linearized alternating recovery with the multistart protocol of the
/// main algorithm (start i draws its initial parameters from seed + i).
BaselineReport baseline2(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg);

}  // namespace blindcal
