#include "blindcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "blindcal/fourier.hpp"

namespace blindcal {

namespace {

constexpr double kDegenerateRow = 1e-14;

struct TaylorOperators {
  CMatrix f;
  /// -i F X, the derivative of each row with respect to its own perturbation.
  CMatrix d;
};

void require_taylor_problem(const Problem& problem) {
  problem.validate();
  if (problem.grid.ndim != 1) throw InvalidArgument("the first-order model is implemented for 1D grids only");
  const auto kind = problem.model.kind;
  if (kind != ModelKind::Independent && kind != ModelKind::IdentityGroups) {
    throw InvalidArgument("the first-order model needs the independent or identity-group link");
  }
}

TaylorOperators taylor_operators(const Problem& problem) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(problem.y.size()));
  TaylorOperators ops;
  ops.f = fourier_rows(problem.freq.u, problem.grid, scale);
  ops.d = Complex(0.0, -1.0) * (ops.f * spatial_weights(problem.grid.n1).asDiagonal());
  return ops;
}

CMatrix taylor_matrix(const TaylorOperators& ops, const Vector& delta) {
  return ops.f + delta.asDiagonal() * ops.d;
}

double surrogate(const TaylorOperators& ops, const Problem& problem, const Vector& coeffs, const Vector& delta,
                 double lambda) {
  const Vector x = problem.basis.synthesize(coeffs);
  const CVector res = problem.y - taylor_matrix(ops, delta) * x;
  return coeffs.lpNorm<1>() + lambda * res.norm();
}

}  // namespace

BaselineReport baseline1(const Problem& problem, const SolverConfig& solver_cfg) {
  problem.validate();
  const Matrix zero = Matrix::Zero(problem.freq.size(), problem.freq.dims());
  const SolveReport rep = solve_bp(sensing_matrix(problem, zero), problem.y, solver_cfg);
  BaselineReport out;
  out.coeffs = rep.x_hat;
  out.x_hat = problem.basis.synthesize(rep.x_hat);
  out.objective = rep.objective;
  out.objective_trace = {rep.objective};
  out.converged = rep.converged;
  out.outer_iters = 1;
  return out;
}

double taylor_objective(const Problem& problem, const Vector& coeffs, const Vector& delta, double lambda) {
  require_taylor_problem(problem);
  if (delta.size() != problem.y.size()) throw DimensionError("need one perturbation per measurement");
  return surrogate(taylor_operators(problem), problem, coeffs, delta, lambda);
}

BaselineReport taylor_recovery(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg,
                               const Vector& beta0) {
  require_taylor_problem(problem);
  solver_cfg.validate();
  const double r = problem.model.bound;
  cfg.validate(r);
  const double lambda = solver_cfg.lambda;
  const PerturbationModel& model = problem.model;
  const TaylorOperators ops = taylor_operators(problem);

  Vector beta = beta0;
  Vector delta = model.expand(beta).col(0);
  Vector coeffs = Vector::Zero(problem.grid.size());
  double current = lambda * problem.y.norm();

  BaselineReport out;
  for (int t = 0; t < cfg.max_outer_iters; ++t) {
    const CMatrix a = problem.basis.apply_right(taylor_matrix(ops, delta));
    const SolveReport rep = solve_sqlasso(a, problem.y, solver_cfg);
    Vector coeffs_new = rep.x_hat;
    double j_x = surrogate(ops, problem, coeffs_new, delta, lambda);
    if (j_x > current) {
      coeffs_new = coeffs;
      j_x = current;
    }
    out.objective_trace.push_back(j_x);

    // Scalar least squares per parameter: the group residual is linear in beta_p.
    const Vector x = problem.basis.synthesize(coeffs_new);
    const CVector base_res = problem.y - ops.f * x;
    const CVector slope = ops.d * x;
    Vector beta_new(beta.size());
    for (int p = 0; p < model.num_params(); ++p) {
      double num = 0.0;
      double den = 0.0;
      const auto rows = model.rows_of_param(p);
      for (int i : rows) {
        num += std::real(std::conj(slope[i]) * base_res[i]);
        den += std::norm(slope[i]);
      }
      beta_new[p] = den < kDegenerateRow * static_cast<double>(rows.size()) ? 0.0 : std::clamp(num / den, -r, r);
    }
    Vector delta_new = model.expand(beta_new).col(0);
    double j_d = surrogate(ops, problem, coeffs_new, delta_new, lambda);
    if (j_d > j_x) {
      // Only the degenerate-row rule can raise the objective; keep the incumbent.
      beta_new = beta;
      delta_new = delta;
      j_d = j_x;
    }
    out.objective_trace.push_back(j_d);

    const double d_delta = (delta_new - delta).norm();
    const double d_x = (coeffs_new - coeffs).norm();
    coeffs = coeffs_new;
    beta = beta_new;
    delta = delta_new;
    current = j_d;
    out.outer_iters = t + 1;
    if (d_delta < cfg.chi && d_x < cfg.chi) {
      out.converged = true;
      break;
    }
  }
  out.coeffs = coeffs;
  out.x_hat = problem.basis.synthesize(coeffs);
  out.beta_hat = beta;
  out.delta_hat = delta;
  out.objective = current;
  return out;
}

BaselineReport baseline2(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg) {
  require_taylor_problem(problem);
  const double r = problem.model.bound;
  cfg.validate(r);
  BaselineReport best;
  std::vector<std::vector<double>> traces;
  bool have = false;
  for (int i = 0; i < cfg.num_starts; ++i) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> draw(-r, r);
    Vector beta0(problem.model.num_params());
    for (Index p = 0; p < beta0.size(); ++p) beta0[p] = r > 0.0 ? draw(rng) : 0.0;
    BaselineReport run = taylor_recovery(problem, solver_cfg, cfg, beta0);
    run.start_index = i;
    traces.push_back(run.objective_trace);
    if (!have || run.objective < best.objective) {
      best = std::move(run);
      have = true;
    }
  }
  best.start_traces = std::move(traces);
  return best;
}

}  // namespace blindcal
