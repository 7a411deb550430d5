#include "blindcal/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "blindcal/baselines.hpp"
#include "blindcal/csv.hpp"
#include "blindcal/fourier.hpp"
#include "blindcal/linearized.hpp"

namespace blindcal {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags keep the derived seeds of different random quantities apart.
enum Tag : std::uint64_t {
  kFreqTag = 11,
  kGroupTag = 12,
  kInstanceTag = 13,
  kSignalTag = 1,
  kBetaTag = 2,
  kNoiseTag = 3,
  kStartTag = 4,
  kTomoTag = 21,
};

// Training signals used by cross-validation live in their own variant range.
constexpr std::uint64_t kTrainVariant = 1000;

}  // namespace

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix(h ^ splitmix(p));
  return h;
}

SparseSignal gen_sparse(const SparsityBasis& basis, int s, std::uint64_t seed) {
  const int n = basis.size();
  if (s < 0 || s > n) throw InvalidArgument("sparsity must lie in [0, N]");
  std::mt19937_64 rng(seed);
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first s slots form a uniform random support.
  for (int i = 0; i < s; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  SparseSignal out;
  out.coeffs = Vector::Zero(n);
  for (int i = 0; i < s; ++i) out.coeffs[idx[static_cast<size_t>(i)]] = normal(rng);
  out.x = basis.synthesize(out.coeffs);
  return out;
}

Vector gen_sparse_signal(int n, int s, BasisKind basis, std::uint64_t seed) {
  return gen_sparse(SparsityBasis(basis, Grid::line(n)), s, seed).x;
}

Vector gen_frequencies(int m, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("N must be positive");
  const int h = n / 2;
  const int count = 2 * h + 1;
  if (m < 1 || m > count) {
    throw InvalidArgument("cannot draw " + std::to_string(m) + " distinct frequencies from " +
                          std::to_string(count) + " grid points");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> pool(static_cast<size_t>(count));
  std::iota(pool.begin(), pool.end(), -h);
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, count - 1);
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(pick(rng))]);
  }
  std::sort(pool.begin(), pool.begin() + m);
  Vector u(m);
  for (int i = 0; i < m; ++i) u[i] = pool[static_cast<size_t>(i)];
  return u;
}

double min_frequency_gap(const Vector& u) {
  if (u.size() < 2) return std::numeric_limits<double>::infinity();
  std::vector<double> v(u.data(), u.data() + u.size());
  std::sort(v.begin(), v.end());
  double gap = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
  return gap;
}

CVector add_noise(const CVector& y, double pct, std::uint64_t seed) {
  if (!(pct >= 0.0) || !std::isfinite(pct)) throw InvalidArgument("noise percentage must be >= 0");
  if (pct == 0.0 || y.size() == 0) return y;
  const double sigma = pct / 100.0 * y.cwiseAbs().mean();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector out = y;
  for (Index i = 0; i < y.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    out[i] += sigma * Complex(re, im);
  }
  return out;
}

double rrmse(const Vector& x_true, const Vector& x_hat) {
  if (x_true.size() != x_hat.size()) throw DimensionError("signal lengths differ");
  const double norm = x_true.norm();
  if (norm == 0.0) throw InvalidArgument("relative error is undefined for a zero reference signal");
  return (x_true - x_hat).norm() / norm;
}

std::vector<std::vector<int>> balanced_groups(int m, int p, std::uint64_t seed) {
  if (p < 1 || p > m) throw InvalidArgument("group count must lie in [1, M]");
  std::vector<int> idx(static_cast<size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = m - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  std::vector<std::vector<int>> groups(static_cast<size_t>(p));
  for (int i = 0; i < m; ++i) groups[static_cast<size_t>(i % p)].push_back(idx[static_cast<size_t>(i)]);
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::AltMin: return "altmin";
    case Method::Baseline1: return "baseline1";
    case Method::Baseline2: return "baseline2";
    case Method::Linearized: return "linearized";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "altmin") return Method::AltMin;
  if (name == "baseline1") return Method::Baseline1;
  if (name == "baseline2") return Method::Baseline2;
  if (name == "linearized") return Method::Linearized;
  throw InvalidArgument("unknown method '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (n < 2) throw InvalidArgument("N must be >= 2");
  if ((basis == BasisKind::Haar1D) && !is_dyadic(n)) throw InvalidArgument("haar1d needs a power-of-two N");
  if (basis == BasisKind::Haar2D) throw InvalidArgument("sweeps are 1D; use haar1d or canonical");
  if (s_list.empty()) throw InvalidArgument("s list is empty");
  if (m_list.empty()) throw InvalidArgument("M list is empty");
  if (methods.empty()) throw InvalidArgument("method list is empty");
  for (int s : s_list) {
    if (s < 1 || s >= n) throw InvalidArgument("every s must satisfy 1 <= s < N");
  }
  for (int m : m_list) {
    if (m < 1) throw InvalidArgument("every M must be positive");
    if (m > n) throw InvalidArgument("M > N is not allowed in 1D sweeps");
  }
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("r must be >= 0");
  if (delta_u < 0) throw InvalidArgument("delta_u must be >= 0 (0 means one per measurement)");
  if (!(noise_pct >= 0.0)) throw InvalidArgument("noise_pct must be >= 0");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (!(lambda_factor > 0.0)) throw InvalidArgument("lambda_factor must be positive");
  solver.validate();
  altmin.validate(r);
}

Instance make_instance(const ExperimentSpec& spec, int s, int m, int trial, bool linear_model,
                       std::uint64_t variant) {
  const auto us = static_cast<std::uint64_t>(s);
  const auto um = static_cast<std::uint64_t>(m);
  Instance inst;
  inst.u = gen_frequencies(m, spec.n, mix_seed({spec.seed, kFreqTag, um}));
  inst.model = spec.independent_at(m)
                   ? PerturbationModel::independent(m, spec.r)
                   : PerturbationModel::identity_groups(
                         balanced_groups(m, spec.delta_u, mix_seed({spec.seed, kGroupTag, um})), spec.r);
  inst.seed = mix_seed({spec.seed, kInstanceTag, us, um, static_cast<std::uint64_t>(trial), variant});
  const Grid grid = Grid::line(spec.n);
  inst.signal = gen_sparse(SparsityBasis(spec.basis, grid), s, mix_seed({inst.seed, kSignalTag}));
  std::mt19937_64 rng(mix_seed({inst.seed, kBetaTag}));
  std::uniform_real_distribution<double> draw(-spec.r, spec.r);
  inst.beta.resize(inst.model.num_params());
  for (Index p = 0; p < inst.beta.size(); ++p) inst.beta[p] = spec.r > 0.0 ? draw(rng) : 0.0;
  inst.delta = inst.model.expand(inst.beta).col(0);
  const CVector clean = linear_model
                            ? taylor_forward(inst.signal.x, inst.u, inst.delta, spec.n)
                            : forward(inst.signal.x, FrequencySet(Matrix(inst.u), Matrix(inst.delta), spec.r), grid);
  inst.y = add_noise(clean, spec.noise_pct, mix_seed({inst.seed, kNoiseTag}));
  return inst;
}

std::vector<std::string> csv_header() {
  return {"N",     "basis", "s",    "M",     "r",         "delta_u",      "noise_pct",
          "method", "trial", "seed", "rrmse", "objective", "wall_time_ms", "converged"};
}

std::vector<std::string> to_csv_fields(const ResultRecord& rec, bool timing) {
  return {std::to_string(rec.n),
          rec.basis,
          std::to_string(rec.s),
          std::to_string(rec.m),
          format_double(rec.r),
          rec.delta_u,
          format_double(rec.noise_pct),
          rec.method,
          std::to_string(rec.trial),
          std::to_string(rec.seed),
          format_double(rec.rrmse),
          format_double(rec.objective),
          format_double(timing ? rec.wall_time_ms : 0.0),
          rec.converged ? "1" : "0"};
}

MethodRun execute_method(const ExperimentSpec& spec, int s, int m, Method method, int trial, double lambda_factor,
                         std::uint64_t variant) {
  const auto t0 = std::chrono::steady_clock::now();
  MethodRun run;
  run.instance = make_instance(spec, s, m, trial, method == Method::Linearized, variant);
  const Instance& inst = run.instance;
  SolverConfig solver = spec.solver;
  solver.lambda = lambda_factor * std::sqrt(static_cast<double>(m));
  AltMinConfig alt = spec.altmin;
  alt.seed = mix_seed({inst.seed, kStartTag});
  const Grid grid = Grid::line(spec.n);
  const Problem problem(inst.y, FrequencySet::line(inst.u, spec.r), grid, SparsityBasis(spec.basis, grid),
                        inst.model);

  run.initial_objective = solver.lambda * inst.y.norm();
  ResultRecord& rec = run.record;
  switch (method) {
    case Method::AltMin: {
      std::vector<RecoveryResult> starts = run_starts(problem, solver, alt);
      for (const auto& st : starts) run.traces.push_back(st.objective_trace);
      const RecoveryResult res = select_best(std::move(starts));
      run.x_hat = res.x_hat;
      run.delta_hat = res.delta_hat.col(0);
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
    case Method::Baseline1: {
      const BaselineReport res = baseline1(problem, solver);
      run.traces.push_back(res.objective_trace);
      run.x_hat = res.x_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
    case Method::Baseline2: {
      const BaselineReport res = baseline2(problem, solver, alt);
      run.traces = res.start_traces;
      run.x_hat = res.x_hat;
      run.delta_hat = res.delta_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
    case Method::Linearized: {
      const CompressiveSolution res = solve_linearized_compressive(inst.y, inst.u, spec.n, spec.r, solver, alt,
                                                                   spec.basis);
      run.traces = res.start_traces;
      run.x_hat = res.x_hat;
      run.delta_hat = res.delta_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
  }
  rec.n = spec.n;
  rec.basis = to_string(spec.basis);
  rec.s = s;
  rec.m = m;
  rec.r = spec.r;
  rec.delta_u = spec.independent_at(m) ? "M" : std::to_string(spec.delta_u);
  rec.noise_pct = spec.noise_pct;
  rec.method = to_string(method);
  rec.trial = trial;
  rec.seed = inst.seed;
  rec.rrmse = rrmse(inst.signal.x, run.x_hat);
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

ResultRecord run_method(const ExperimentSpec& spec, int s, int m, Method method, int trial, double lambda_factor,
                        std::uint64_t variant) {
  return execute_method(spec, s, m, method, trial, lambda_factor, variant).record;
}

LambdaCvResult cross_validate_lambda(const ExperimentSpec& spec, int s, int m, Method method,
                                     const std::vector<double>& factors, int n_train) {
  if (factors.empty()) throw InvalidArgument("no lambda candidates");
  if (n_train < 1) throw InvalidArgument("need at least one training signal");
  LambdaCvResult out;
  out.factors = factors;
  double best = std::numeric_limits<double>::infinity();
  for (double f : factors) {
    double total = 0.0;
    for (int i = 0; i < n_train; ++i) {
      total += run_method(spec, s, m, method, i, f, kTrainVariant + static_cast<std::uint64_t>(i)).rrmse;
    }
    const double mean = total / n_train;
    out.mean_rrmse.push_back(mean);
    if (mean < best) {
      best = mean;
      out.best_factor = f;
    }
  }
  return out;
}

SweepOutcome run_sweep(const ExperimentSpec& spec, const SweepOptions& opts) {
  spec.validate();
  if (opts.workers < 1) throw InvalidArgument("workers must be >= 1");
  struct Job {
    int s, m;
    Method method;
    int trial;
  };
  using Key = std::tuple<int, int, std::string, int>;

  std::set<Key> done;
  std::optional<CsvWriter> writer;
  if (!opts.csv_path.empty()) {
    std::vector<std::vector<std::string>> kept;
    if (opts.resume && std::filesystem::exists(opts.csv_path)) {
      const auto header = csv_header();
      auto rows = read_csv(opts.csv_path);
      if (!rows.empty() && rows.front() != header) {
        throw Error("cannot resume: '" + opts.csv_path + "' has a different header");
      }
      for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) continue;
        try {
          done.emplace(std::stoi(rows[i][2]), std::stoi(rows[i][3]), rows[i][7], std::stoi(rows[i][8]));
          kept.push_back(rows[i]);
        } catch (const std::exception&) {
          // A damaged row is rerun.
        }
      }
    }
    // Rewrite the surviving rows so a torn final line does not linger.
    writer.emplace(opts.csv_path, false);
    writer->write_row(csv_header());
    for (const auto& row : kept) writer->write_row(row);
  }

  std::vector<Job> jobs;
  SweepOutcome out;
  for (int s : spec.s_list) {
    for (int m : spec.m_list) {
      for (Method method : spec.methods) {
        for (int t = 0; t < spec.trials; ++t) {
          if (done.count(Key{s, m, to_string(method), t})) {
            ++out.skipped;
            continue;
          }
          jobs.push_back({s, m, method, t});
        }
      }
    }
  }

  std::map<std::tuple<int, int, int>, double> cv_cache;
  std::mutex cv_mutex;
  auto lambda_for = [&](const Job& job) {
    if (!spec.lambda_cv) return spec.lambda_factor;
    const auto key = std::make_tuple(job.s, job.m, static_cast<int>(job.method));
    {
      std::lock_guard<std::mutex> lock(cv_mutex);
      auto it = cv_cache.find(key);
      if (it != cv_cache.end()) return it->second;
    }
    const double f = cross_validate_lambda(spec, job.s, job.m, job.method).best_factor;
    std::lock_guard<std::mutex> lock(cv_mutex);
    cv_cache[key] = f;
    return f;
  };

  ExperimentSpec job_spec = spec;
  if (opts.workers > 1) job_spec.altmin.threads = 1;

  std::vector<std::optional<ResultRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<bool> finished(jobs.size(), false);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      std::optional<ResultRecord> rec;
      std::string err;
      try {
        rec = run_method(job_spec, job.s, job.m, job.method, job.trial, lambda_for(job));
      } catch (const std::exception& e) {
        err = "s=" + std::to_string(job.s) + " M=" + std::to_string(job.m) + " method=" + to_string(job.method) +
              " trial=" + std::to_string(job.trial) + ": " + e.what();
      }
      std::lock_guard<std::mutex> lock(mutex);
      results[i] = std::move(rec);
      errors[i] = std::move(err);
      finished[i] = true;
      ready.notify_all();
    }
  };

  const int n_workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  // Single writer: commit rows strictly in job order.
  for (size_t i = 0; i < jobs.size(); ++i) {
    std::unique_lock<std::mutex> lock(mutex);
    ready.wait(lock, [&] { return finished[i]; });
    if (results[i]) {
      if (writer) writer->write_row(to_csv_fields(*results[i], opts.timing));
      out.records.push_back(*results[i]);
    } else {
      out.failures.push_back(errors[i]);
    }
  }
  for (auto& th : pool) th.join();
  return out;
}

void Tomo2dSpec::validate() const {
  if (n_spokes < 1 || per_spoke < 1) throw InvalidArgument("need at least one spoke and one point per spoke");
  if (!is_dyadic(image_size) || image_size > 32) throw InvalidArgument("image_size must be a power of two <= 32");
  if (sparsity < 1 || sparsity > image_size * image_size) throw InvalidArgument("sparsity out of range");
  if (!(angle_err_deg >= 0.0) || angle_err_deg >= 180.0) throw InvalidArgument("angle_err_deg must lie in [0, 180)");
  if (!(noise_pct >= 0.0)) throw InvalidArgument("noise_pct must be >= 0");
  if (!(lambda_factor > 0.0)) throw InvalidArgument("lambda_factor must be positive");
  solver.validate();
}

Tomo2dReport run_tomo2d(const Tomo2dSpec& spec) {
  spec.validate();
  const double r = spec.angle_err_deg * std::numbers::pi / 180.0;
  const Grid grid = Grid::image(spec.image_size, spec.image_size);
  const SparsityBasis basis(BasisKind::Haar2D, grid);
  const RadialGeometry geo = make_radial_spokes(spec.n_spokes, spec.per_spoke, spec.image_size, r);
  const int m = static_cast<int>(geo.freq.size());

  const SparseSignal signal = gen_sparse(basis, spec.sparsity, mix_seed({spec.seed, kTomoTag, kSignalTag}));
  std::mt19937_64 rng(mix_seed({spec.seed, kTomoTag, kBetaTag}));
  std::uniform_real_distribution<double> draw(-r, r);
  Vector beta(geo.model.num_params());
  for (Index p = 0; p < beta.size(); ++p) beta[p] = r > 0.0 ? draw(rng) : 0.0;
  const CVector clean = forward(signal.x, geo.freq.with_delta(geo.model.expand(beta)), grid);
  const CVector y = add_noise(clean, spec.noise_pct, mix_seed({spec.seed, kTomoTag, kNoiseTag}));

  SolverConfig solver = spec.solver;
  solver.lambda = spec.lambda_factor * std::sqrt(static_cast<double>(m));
  AltMinConfig alt = spec.altmin;
  alt.seed = mix_seed({spec.seed, kTomoTag, kStartTag});
  const Problem problem(y, geo.freq, grid, basis, geo.model);

  std::vector<RecoveryResult> starts = run_starts(problem, solver, alt);
  Tomo2dReport rep;
  for (const auto& st : starts) rep.traces.push_back(st.objective_trace);
  rep.initial_objective = solver.lambda * y.norm();
  const RecoveryResult res = select_best(std::move(starts));
  const BaselineReport b1 = baseline1(problem, solver);
  rep.rrmse_altmin = rrmse(signal.x, res.x_hat);
  rep.rrmse_baseline1 = rrmse(signal.x, b1.x_hat);
  rep.beta_true = beta;
  rep.beta_hat = res.beta_hat;
  rep.objective = res.objective;
  rep.converged = res.converged;
  rep.image_true = signal.x;
  rep.image_altmin = res.x_hat;
  rep.image_baseline1 = b1.x_hat;
  return rep;
}

}  // namespace blindcal
