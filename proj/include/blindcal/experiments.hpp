#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "blindcal/altmin.hpp"
#include "blindcal/bases.hpp"
#include "blindcal/perturbation.hpp"
#include "blindcal/sqlasso.hpp"

namespace blindcal {

/// lambda = factor * sqrt(M) unless a configuration overrides it.
inline constexpr double kDefaultLambdaFactor = 1.0;

/// Deterministic seed derivation from a list of coordinates.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

struct SparseSignal {
  Vector coeffs;
  Vector x;
};

/// s nonzero basis coefficients on a uniformly random support, values i.i.d.
/// standard normal; x = Psi theta.
SparseSignal gen_sparse(const SparsityBasis& basis, int s, std::uint64_t seed);
Vector gen_sparse_signal(int n, int s, BasisKind basis, std::uint64_t seed);

/// M distinct integer frequencies drawn without replacement from
/// {-floor(N/2), ..., floor(N/2)}, sorted ascending.
Vector gen_frequencies(int m, int n, std::uint64_t seed);

/// Smallest distance between two base frequencies (infinity for M < 2).
double min_frequency_gap(const Vector& u);

/// Gaussian noise with sigma = pct/100 * mean |y_i| added independently to
/// the real and imaginary parts.
CVector add_noise(const CVector& y, double pct, std::uint64_t seed);

/// ||x - x_hat|| / ||x||
double rrmse(const Vector& x_true, const Vector& x_hat);

/// Random partition of {0..m-1} into p groups whose sizes differ by at most one.
std::vector<std::vector<int>> balanced_groups(int m, int p, std::uint64_t seed);

enum class Method { AltMin, Baseline1, Baseline2, Linearized };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ExperimentSpec {
  int n = 101;
  BasisKind basis = BasisKind::Canonical;
  std::vector<int> s_list{2, 5, 10, 20};
  std::vector<int> m_list{30, 50, 70, 90};
  double r = 1.0;
  /// Number of distinct perturbation values; 0 means one per measurement.
  int delta_u = 0;
  double noise_pct = 0.0;
  int trials = 5;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::AltMin, Method::Baseline1, Method::Baseline2};
  double lambda_factor = kDefaultLambdaFactor;
  /// Choose lambda per (s, M, method) by cross-validation on training signals.
  bool lambda_cv = false;
  /// lambda is overwritten per cell; the remaining fields are used as given.
  SolverConfig solver;
  /// seed is overwritten per instance.
  AltMinConfig altmin;

  void validate() const;
  /// True when every measurement has its own perturbation parameter.
  bool independent_at(int m) const { return delta_u <= 0 || delta_u >= m; }
};

/// One synthetic problem instance shared by every method at (s, M, trial).
struct Instance {
  SparseSignal signal;
  Vector u;
  PerturbationModel model;
  Vector beta;
  Vector delta;
  CVector y;
  std::uint64_t seed = 0;
};

/// Builds the instance. `linear_model` generates data with the first-order
/// model instead of the exact perturbed transform. `variant` separates
/// training instances (cross-validation) from the evaluated trials.
Instance make_instance(const ExperimentSpec& spec, int s, int m, int trial, bool linear_model,
                       std::uint64_t variant = 0);

struct ResultRecord {
  int n = 0;
  std::string basis;
  int s = 0;
  int m = 0;
  double r = 0.0;
  std::string delta_u;
  double noise_pct = 0.0;
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  double rrmse = 0.0;
  double objective = 0.0;
  double wall_time_ms = 0.0;
  bool converged = false;
};

std::vector<std::string> csv_header();
std::vector<std::string> to_csv_fields(const ResultRecord& rec, bool timing);

struct MethodRun {
  ResultRecord record;
  Instance instance;
  Vector x_hat;
  /// Per-measurement perturbation estimate (empty for the first baseline).
  Vector delta_hat;
  /// J trace of every start of the method.
  std::vector<std::vector<double>> traces;
  /// lambda ||y||, the objective at x = 0.
  double initial_objective = 0.0;
};

/// Runs one method on one instance with lambda = factor * sqrt(M) and keeps
/// the estimates.
MethodRun execute_method(const ExperimentSpec& spec, int s, int m, Method method, int trial, double lambda_factor,
                         std::uint64_t variant = 0);

/// Runs one method on one instance with lambda = factor * sqrt(M).
ResultRecord run_method(const ExperimentSpec& spec, int s, int m, Method method, int trial, double lambda_factor,
                        std::uint64_t variant = 0);

struct LambdaCvResult {
  double best_factor = kDefaultLambdaFactor;
  std::vector<double> factors;
  std::vector<double> mean_rrmse;
};

inline const std::vector<double> kLambdaCvFactors{0.01, 0.03, 0.1, 0.3, 1.0, 3.0};

/// Evaluates each candidate factor on `n_train` training signals and returns
/// the one with the smallest mean RRMSE (earliest candidate on ties).
LambdaCvResult cross_validate_lambda(const ExperimentSpec& spec, int s, int m, Method method,
                                     const std::vector<double>& factors = kLambdaCvFactors, int n_train = 3);

struct SweepOptions {
  /// Empty: results are only returned, not written.
  std::string csv_path;
  bool resume = false;
  int workers = 1;
  /// Write measured wall times; otherwise the column holds 0 so that repeated
  /// runs produce identical files.
  bool timing = false;
};

struct SweepOutcome {
  /// Records produced by this run, in canonical order.
  std::vector<ResultRecord> records;
  /// One message per failed job.
  std::vector<std::string> failures;
  /// Jobs skipped because the output already held them.
  int skipped = 0;
};

/// Full factorial over (s, M, method, trial), in that nesting order. Jobs run
/// on `workers` threads; rows are committed in canonical order.
SweepOutcome run_sweep(const ExperimentSpec& spec, const SweepOptions& opts);

struct Tomo2dSpec {
  int n_spokes = 20;
  int per_spoke = 16;
  int image_size = 32;
  /// Nonzero Haar coefficients of the synthetic image.
  int sparsity = 30;
  double angle_err_deg = 2.0;
  double noise_pct = 5.0;
  std::uint64_t seed = 0;
  double lambda_factor = kDefaultLambdaFactor;
  SolverConfig solver;
  AltMinConfig altmin;

  void validate() const;
};

struct Tomo2dReport {
  double rrmse_altmin = 0.0;
  double rrmse_baseline1 = 0.0;
  Vector beta_true;
  Vector beta_hat;
  double objective = 0.0;
  bool converged = false;
  Vector image_true;
  Vector image_altmin;
  Vector image_baseline1;
  /// J trace of every altmin start and lambda ||y||.
  std::vector<std::vector<double>> traces;
  double initial_objective = 0.0;
};

Tomo2dReport run_tomo2d(const Tomo2dSpec& spec);

}  // namespace blindcal
