#pragma once

#include <cstdint>

#include "blindcal/bases.hpp"
#include "blindcal/sqlasso.hpp"
#include "blindcal/types.hpp"

namespace blindcal {

/// sin(t)/t with the removable singularity filled in.
double sinc(double t);

/// E[F_t^H F_t] for perturbations drawn i.i.d. Uniform[-r, r] (1D, 1/sqrt(M)
/// rows): the unperturbed Gram attenuated entrywise by sinc(theta r) with
/// theta = 2 pi (j1 - j2) / N over centered indices.
CMatrix expected_gram(const Vector& u, double r, int n);

/// Largest normalized inner product between two distinct columns.
double coherence(const CMatrix& a);
double coherence(const Matrix& a);

struct CoherenceReport {
  /// Coherence of F Psi.
  double mu = 0.0;
  /// Largest off-diagonal magnitude of the column-normalized Psi^T B Psi.
  double mu_t = 0.0;
  /// mu times the largest |sinc(theta r)| over the off-diagonal thetas.
  double bound = 0.0;
  double max_sinc = 0.0;
  /// mu_t <= bound <= mu (within 1e-9). The chain is guaranteed for the
  /// canonical basis; for other bases it is reported, not assumed.
  bool chain_holds = false;
  /// Monte-Carlo check of B (zero samples skips it).
  int mc_samples = 0;
  double mc_max_abs_dev = 0.0;
  /// Largest deviation in units of the entry's own standard error.
  double mc_max_z = 0.0;
  /// Coherence of individual perturbed realizations F_t Psi (not covered by
  /// the expected-Gram bound).
  double realized_coherence_mean = 0.0;
  double realized_coherence_max = 0.0;
};

struct GramMonteCarlo {
  CMatrix mean;
  /// Standard errors of the real and imaginary parts of every entry.
  Matrix se_real;
  Matrix se_imag;
};

/// Sample mean of F_t^H F_t over `samples` perturbation draws.
GramMonteCarlo monte_carlo_gram(const Vector& u, double r, int n, int samples, std::uint64_t seed);

CoherenceReport verify_coherence_bound(const Vector& u, double r, int n, const SparsityBasis& psi,
                                       int mc_samples = 0, std::uint64_t seed = 0);

struct ExpectationModel {
  /// G_jj = sinc(2 pi j r / N) over the centered index j.
  Vector g;
  double r = 0.0;
};

ExpectationModel build_G(int n, double r);

struct MeasurementMonteCarlo {
  CVector mean;
  Vector se_real;
  Vector se_imag;
};

/// Sample mean of F_t x over `samples` perturbation draws.
MeasurementMonteCarlo monte_carlo_measurements(const Vector& x, const Vector& u, double r, int samples,
                                               std::uint64_t seed);

struct ExpectationRecoveryReport {
  Vector x_star;
  /// ||x* - x||_2
  double recovery_error = 0.0;
  /// ||(F G - F) x||_2
  double model_discrepancy = 0.0;
};

/// Recovers x from y = F G x + noise with the unperturbed F. `noise` may be
/// empty for noiseless data.
ExpectationRecoveryReport expectation_recovery_experiment(const Vector& x, const Vector& u, double r,
                                                          const CVector& noise, const SolverConfig& solver_cfg);

}  // namespace blindcal
