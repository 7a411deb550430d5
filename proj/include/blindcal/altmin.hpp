#pragma once

#include <cstdint>
#include <vector>

#include "blindcal/bases.hpp"
#include "blindcal/perturbation.hpp"
#include "blindcal/sqlasso.hpp"
#include "blindcal/types.hpp"

namespace blindcal {

/// Measurements together with everything known about how they were taken.
struct Problem {
  CVector y;
  /// Base frequencies; the perturbation field is ignored by the solvers.
  FrequencySet freq;
  Grid grid;
  SparsityBasis basis;
  PerturbationModel model;

  Problem(CVector y_, FrequencySet freq_, Grid grid_, SparsityBasis basis_, PerturbationModel model_);
  void validate() const;
};

struct AltMinConfig {
  /// Spacing of the exhaustive parameter grid; 0 selects 2r/200.
  double grid_step = 0.0;
  /// Stop once both ||delta - delta_prev|| and ||x - x_prev|| drop below chi.
  double chi = 1e-4;
  int max_outer_iters = 50;
  int num_starts = 10;
  std::uint64_t seed = 0;
  /// Second 21-point pass at a tenth of the step around each coarse winner.
  bool refine = false;
  /// Worker threads used by multistart.
  int threads = 1;
  /// First-order recovery only: finish with a joint least-squares refinement
  /// on the recovered support.
  bool polish = true;

  double step_for(double r) const;
  void validate(double r) const;
};

struct RecoveryResult {
  /// Signal-domain estimate x = Psi theta.
  Vector x_hat;
  /// Basis coefficients theta.
  Vector coeffs;
  Matrix delta_hat;
  Vector beta_hat;
  /// J after every half-step (signal update, then parameter update).
  std::vector<double> objective_trace;
  /// lambda ||y||, the objective at x = 0.
  double initial_objective = 0.0;
  double objective = 0.0;
  bool converged = false;
  int start_index = 0;
  int outer_iters = 0;
  /// Parameter searches whose grid minimum was attained by more than one candidate.
  int ambiguous_searches = 0;
  /// Inner solves that hit their iteration cap or broke down.
  int solver_failures = 0;
};

struct SearchStats {
  int searches = 0;
  int ambiguous = 0;
};

/// Candidate values on [-r, r] spaced by `step`, always containing 0 and both
/// endpoints, ordered by search priority: smaller |v| first, negative before
/// positive at equal magnitude.
std::vector<double> parameter_grid(double r, double step);

/// J(theta, delta) = ||theta||_1 + lambda ||y - F(u + delta) Psi theta||_2.
double joint_objective(const Problem& problem, const Vector& coeffs, const Matrix& delta, double lambda);

/// Sensing matrix F(u + delta) Psi.
CMatrix sensing_matrix(const Problem& problem, const Matrix& delta);

/// Per-measurement exhaustive search (1D): each delta_i minimizes
/// |y_i - F_i(delta_i) x|^2 over the grid.
Vector delta_search_independent(const CVector& y, const Vector& u, const Vector& x_hat, int n, double r,
                                double step);

/// Grouped exhaustive search: every parameter minimizes the residual over the
/// measurements it controls with the other parameters held at `incumbent`.
/// The incumbent value of each parameter is always among the candidates, so
/// the residual never increases.
Vector beta_search_grouped(const CVector& y, const FrequencySet& freq, const Vector& x_hat, const Grid& grid,
                           const PerturbationModel& model, double step, const Vector& incumbent,
                           bool refine = false, SearchStats* stats = nullptr);

/// One run of the alternating scheme from a random grid-valued start.
RecoveryResult alternating_recovery(const Problem& problem, const SolverConfig& solver_cfg,
                                    const AltMinConfig& cfg, std::uint64_t start_seed);

/// Every start (start i seeded with cfg.seed + i), in start order.
std::vector<RecoveryResult> run_starts(const Problem& problem, const SolverConfig& solver_cfg,
                                       const AltMinConfig& cfg);

/// The start with the smallest final objective (earliest start on ties).
RecoveryResult select_best(std::vector<RecoveryResult> starts);

RecoveryResult multistart(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg);

/// True when r exceeds half the smallest spacing between base frequencies, in
/// which case perturbed frequencies of different measurements can cross.
bool perturbation_may_alias(const FrequencySet& freq, double r);

}  // namespace blindcal
