#pragma once

#include <vector>

#include "blindcal/altmin.hpp"
#include "blindcal/baselines.hpp"

namespace blindcal {

/// The measurements carry no information that separates the perturbation from
/// the signal (vanishing differences between mirrored rows).
class DegenerateMeasurements : public Error {
 public:
  using Error::Error;
};

/// The reduced block system is numerically singular.
class SingularH : public Error {
 public:
  using Error::Error;
};

/// Cosine/sine partition of the unnormalized kernel for an odd-length grid
/// sampled at an anti-symmetric frequency set (M = N).
///
/// Rows split into the mirrored halves {mid - k} (part -1), the center row
/// (part 0) and {mid + k} (part +1); columns split the same way by the sign
/// of the spatial index. Inside a part, entries are ordered by k = 1..h.
struct BlockDecomposition {
  int n = 0;
  int half = 0;
  /// cos(2 pi u_i l / N) and -sin(2 pi u_i l / N), full N x N.
  Matrix C;
  Matrix S;
  /// Positive half of the spatial weights, 2 pi k / N for k = 1..h.
  Vector x1;

  /// Measurement-dependent quantities (filled by `decompose`).
  Vector a_minus, a_plus;
  Vector b_minus, b_plus;
  Vector z;

  /// Block (row part, column part) of C or S with parts in {-1, 0, +1}.
  Matrix c_block(int row_part, int col_part) const;
  Matrix s_block(int row_part, int col_part) const;
  /// Storage position of element k (1-based) in part `part`.
  int position(int part, int k) const { return half + part * k; }
};

struct LinearizedSolution {
  Vector e1;
  Vector o1;
  double e0 = 0.0;
  Vector x_hat;
  Vector delta_hat;
  /// False where both denominators of the perturbation recovery vanished.
  std::vector<bool> delta_reliable;
  double h_condition = 0.0;
};

/// Checks M = N odd and u_{mid-k} = -u_{mid+k}.
void require_antisymmetric(const Vector& u, int n);

/// Kernel blocks for an anti-symmetric frequency set.
BlockDecomposition build_blocks(const Vector& u, int n);

/// Blocks plus the transformed measurements a, b and the ratio diagonal Z.
BlockDecomposition decompose(const CVector& y, const Vector& u);

/// First-order model y = (F - i diag(delta) F X) x with 1/sqrt(M) scaling, for
/// any M and N.
CVector taylor_forward(const Vector& x, const Vector& u, const Vector& delta, int n);

/// taylor_forward restricted to the exact-recovery setting (M = N odd,
/// anti-symmetric u).
CVector forward_linearized(const Vector& x, const Vector& delta, const Vector& u);

/// Exact recovery of (x, delta) from first-order measurements at M = N.
LinearizedSolution solve_linearized_exact(const CVector& y, const Vector& u);

struct CompressiveSolution {
  Vector coeffs;
  Vector x_hat;
  Vector delta_hat;
  double objective = 0.0;
  bool converged = false;
  int start_index = 0;
  /// The joint refinement on the recovered support lowered the objective.
  bool polished = false;
  /// J trace of every start; the refinement, when kept, appends its value to
  /// the winning start.
  std::vector<std::vector<double>> start_traces;
};

/// Alternating recovery under the first-order model for M <= N. The first
/// start begins at delta = 0; the remaining cfg.num_starts - 1 starts draw
/// random perturbations.
CompressiveSolution solve_linearized_compressive(const CVector& y, const Vector& u, int n, double r,
                                                 const SolverConfig& solver_cfg, const AltMinConfig& cfg,
                                                 BasisKind basis = BasisKind::Canonical);

}  // namespace blindcal
