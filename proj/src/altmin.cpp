#include "blindcal/altmin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "blindcal/fourier.hpp"

namespace blindcal {

namespace {

// Search priority: smaller magnitude first, negative before positive.
bool higher_priority(double a, double b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma < mb;
  return a < b;
}

void insert_by_priority(std::vector<double>& cands, double v) {
  for (double c : cands) {
    if (c == v) return;
  }
  auto it = std::lower_bound(cands.begin(), cands.end(), v, higher_priority);
  cands.insert(it, v);
}

double scale_of(const Problem& problem) { return 1.0 / std::sqrt(static_cast<double>(problem.y.size())); }

// Sum of squared residuals over `rows` with parameter vector `beta`.
double group_residual(const CVector& y, const FrequencySet& freq, const Vector& x, const Grid& grid,
                      const PerturbationModel& model, const std::vector<int>& rows, const Vector& beta,
                      double scale) {
  double total = 0.0;
  double d[2] = {0.0, 0.0};
  double f[2] = {0.0, 0.0};
  const int dims = freq.dims();
  for (int i : rows) {
    model.expand_row(i, beta, d);
    for (int a = 0; a < dims; ++a) f[a] = freq.u(i, a) + d[a];
    total += std::norm(y[i] - row_response(f, x, grid, scale));
  }
  return total;
}

struct Argmin {
  double value = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int ties = 0;
};

// Exhaustive scan of `cands` (already in priority order); strict < keeps the
// first candidate among exact ties.
template <class Eval>
Argmin scan(const std::vector<double>& cands, Eval&& eval) {
  Argmin best;
  for (double v : cands) {
    const double res = eval(v);
    if (res < best.residual) {
      best.value = v;
      best.residual = res;
      best.ties = 0;
    } else if (res == best.residual) {
      ++best.ties;
    }
  }
  return best;
}

std::vector<double> fine_grid(double center, double step, double r) {
  std::vector<double> cands;
  const double fine = step / 10.0;
  for (int j = -10; j <= 10; ++j) {
    const double v = std::clamp(center + j * fine, -r, r);
    insert_by_priority(cands, v);
  }
  return cands;
}

}  // namespace

Problem::Problem(CVector y_, FrequencySet freq_, Grid grid_, SparsityBasis basis_, PerturbationModel model_)
    : y(std::move(y_)), freq(std::move(freq_)), grid(grid_), basis(std::move(basis_)), model(std::move(model_)) {
  validate();
}

void Problem::validate() const {
  grid.validate();
  if (freq.dims() != grid.ndim) throw DimensionError("frequency axes do not match grid");
  if (y.size() != freq.size()) throw DimensionError("measurement count does not match frequency count");
  if (model.num_measurements() != freq.size()) throw DimensionError("model does not cover every measurement");
  if (model.delta_dims() != freq.dims()) throw DimensionError("model and frequency set disagree on axes");
  if (basis.size() != grid.size()) throw DimensionError("basis size does not match grid");
  if (!y.allFinite()) throw InvalidArgument("measurements have non-finite entries");
  if (!freq.u.allFinite()) throw InvalidArgument("non-finite base frequency");
}

double AltMinConfig::step_for(double r) const { return grid_step > 0.0 ? grid_step : 2.0 * r / 200.0; }

void AltMinConfig::validate(double r) const {
  if (grid_step < 0.0 || !std::isfinite(grid_step)) throw InvalidArgument("grid_step must be >= 0");
  if (r > 0.0 && grid_step > 2.0 * r) throw InvalidArgument("grid_step must not exceed 2r");
  if (!(chi > 0.0)) throw InvalidArgument("chi must be positive");
  if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be >= 1");
  if (num_starts < 1) throw InvalidArgument("num_starts must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

std::vector<double> parameter_grid(double r, double step) {
  if (!(r >= 0.0)) throw InvalidArgument("bound must be >= 0");
  std::vector<double> cands{0.0};
  if (r == 0.0) return cands;
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  const double tol = 1e-12 * r;
  const auto k_max = static_cast<long>(std::floor(r / step + 1e-9));
  for (long k = 1; k <= k_max; ++k) {
    const double v = std::min(k * step, r);
    cands.push_back(-v);
    cands.push_back(v);
  }
  if (k_max * step < r - tol) {
    cands.push_back(-r);
    cands.push_back(r);
  }
  std::stable_sort(cands.begin(), cands.end(), higher_priority);
  return cands;
}

CMatrix sensing_matrix(const Problem& problem, const Matrix& delta) {
  const CMatrix f = fourier_rows(problem.freq.u + delta, problem.grid, scale_of(problem));
  return problem.basis.apply_right(f);
}

double joint_objective(const Problem& problem, const Vector& coeffs, const Matrix& delta, double lambda) {
  const Vector x = problem.basis.synthesize(coeffs);
  const Matrix f = problem.freq.u + delta;
  const double scale = scale_of(problem);
  double res = 0.0;
  double row[2] = {0.0, 0.0};
  for (Index i = 0; i < f.rows(); ++i) {
    for (Index a = 0; a < f.cols(); ++a) row[a] = f(i, a);
    res += std::norm(problem.y[i] - row_response(row, x, problem.grid, scale));
  }
  return coeffs.lpNorm<1>() + lambda * std::sqrt(res);
}

Vector delta_search_independent(const CVector& y, const Vector& u, const Vector& x_hat, int n, double r,
                                double step) {
  if (y.size() != u.size()) throw DimensionError("measurement count does not match frequency count");
  if (x_hat.size() != n) throw DimensionError("signal length does not match N");
  const Grid grid = Grid::line(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(y.size()));
  const auto cands = parameter_grid(r, step);
  Vector delta(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    const Argmin best = scan(cands, [&](double v) {
      const double f = u[i] + v;
      return std::norm(y[i] - row_response(&f, x_hat, grid, scale));
    });
    delta[i] = best.value;
  }
  return delta;
}

Vector beta_search_grouped(const CVector& y, const FrequencySet& freq, const Vector& x_hat, const Grid& grid,
                           const PerturbationModel& model, double step, const Vector& incumbent, bool refine,
                           SearchStats* stats) {
  if (incumbent.size() != model.num_params()) throw DimensionError("incumbent has the wrong parameter count");
  if (y.size() != freq.size() || model.num_measurements() != freq.size()) {
    throw DimensionError("measurements, frequencies and model disagree on M");
  }
  if (x_hat.size() != grid.size()) throw DimensionError("signal length does not match grid");
  const double r = model.bound;
  const double scale = 1.0 / std::sqrt(static_cast<double>(y.size()));
  const auto base = parameter_grid(r, step);
  Vector beta = incumbent;
  for (int p = 0; p < model.num_params(); ++p) {
    const auto rows = model.rows_of_param(p);
    auto eval = [&](double v) {
      Vector trial = beta;
      trial[p] = v;
      return group_residual(y, freq, x_hat, grid, model, rows, trial, scale);
    };
    auto cands = base;
    insert_by_priority(cands, incumbent[p]);
    Argmin best = scan(cands, eval);
    if (refine && r > 0.0) {
      auto fine = fine_grid(best.value, step, r);
      insert_by_priority(fine, best.value);
      best = scan(fine, eval);
    }
    beta[p] = best.value;
    if (stats) {
      ++stats->searches;
      if (best.ties > 0) ++stats->ambiguous;
    }
  }
  return beta;
}

RecoveryResult alternating_recovery(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg,
                                    std::uint64_t start_seed) {
  problem.validate();
  solver_cfg.validate();
  const double r = problem.model.bound;
  cfg.validate(r);
  const double step = cfg.step_for(r);
  const double lambda = solver_cfg.lambda;

  // Random grid-valued start.
  std::mt19937_64 rng(start_seed);
  const auto cands = parameter_grid(r, step);
  std::uniform_int_distribution<size_t> pick(0, cands.size() - 1);
  Vector beta(problem.model.num_params());
  for (Index p = 0; p < beta.size(); ++p) beta[p] = cands[pick(rng)];
  Matrix delta = problem.model.expand(beta);

  RecoveryResult out;
  Vector coeffs = Vector::Zero(problem.grid.size());
  out.initial_objective = lambda * problem.y.norm();
  double current = out.initial_objective;
  SearchStats stats;

  for (int t = 0; t < cfg.max_outer_iters; ++t) {
    // Signal half-step with the perturbation held fixed.
    const SolveReport rep = solve_sqlasso(sensing_matrix(problem, delta), problem.y, solver_cfg);
    if (!rep.converged) ++out.solver_failures;
    Vector coeffs_new = rep.x_hat;
    double j_x = joint_objective(problem, coeffs_new, delta, lambda);
    if (j_x > current) {
      coeffs_new = coeffs;
      j_x = current;
    }
    out.objective_trace.push_back(j_x);

    // Perturbation half-step with the signal held fixed.
    const Vector x_new = problem.basis.synthesize(coeffs_new);
    const Vector beta_new = beta_search_grouped(problem.y, problem.freq, x_new, problem.grid, problem.model, step,
                                                beta, cfg.refine, &stats);
    const Matrix delta_new = problem.model.expand(beta_new);
    const double j_d = joint_objective(problem, coeffs_new, delta_new, lambda);
    out.objective_trace.push_back(j_d);

    const double d_delta = (delta_new - delta).norm();
    // Basis is orthonormal, so coefficient and signal distances agree.
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
  out.ambiguous_searches = stats.ambiguous;
  return out;
}

std::vector<RecoveryResult> run_starts(const Problem& problem, const SolverConfig& solver_cfg,
                                       const AltMinConfig& cfg) {
  cfg.validate(problem.model.bound);
  const int n = cfg.num_starts;
  std::vector<RecoveryResult> results(static_cast<size_t>(n));
  auto run_one = [&](int i) {
    results[static_cast<size_t>(i)] =
        alternating_recovery(problem, solver_cfg, cfg, cfg.seed + static_cast<std::uint64_t>(i));
    results[static_cast<size_t>(i)].start_index = i;
  };
  const int workers = std::min(cfg.threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) run_one(i);
    return results;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < n; i = next++) run_one(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

RecoveryResult select_best(std::vector<RecoveryResult> starts) {
  if (starts.empty()) throw InvalidArgument("no starts to select from");
  size_t best = 0;
  for (size_t i = 1; i < starts.size(); ++i) {
    if (starts[i].objective < starts[best].objective) best = i;
  }
  return std::move(starts[best]);
}

RecoveryResult multistart(const Problem& problem, const SolverConfig& solver_cfg, const AltMinConfig& cfg) {
  return select_best(run_starts(problem, solver_cfg, cfg));
}

bool perturbation_may_alias(const FrequencySet& freq, double r) {
  if (freq.size() < 2) return false;
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < freq.size(); ++i) {
    for (Index j = i + 1; j < freq.size(); ++j) {
      min_gap = std::min(min_gap, (freq.u.row(i) - freq.u.row(j)).norm());
    }
  }
  return r > 0.5 * min_gap;
}

}  // namespace blindcal
