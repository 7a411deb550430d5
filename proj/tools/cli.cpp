#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <ostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "blindcal/analysis.hpp"
#include "blindcal/baselines.hpp"
#include "blindcal/csv.hpp"
#include "blindcal/fourier.hpp"
#include "blindcal/linearized.hpp"

namespace blindcal::cli {

namespace {

std::string resolve_out(Section& root, const CommonOptions& opts, const std::string& fallback) {
  const std::string from_config = root.get<std::string>("output", "");
  if (!opts.out.empty()) return opts.out;
  if (!from_config.empty()) return from_config;
  return fallback;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  CsvWriter w(path, false);
  w.write_row(header);
  for (const auto& row : rows) w.write_row(row);
}

Vector read_real_vector(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front().size() < 2) throw ConfigError("'" + path + "' is not an index,value CSV");
  Vector v(static_cast<Index>(rows.size() - 1));
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw ConfigError("'" + path + "' row " + std::to_string(i) + " needs 2 fields");
    v[static_cast<Index>(i - 1)] = std::stod(rows[i][1]);
  }
  return v;
}

CVector read_complex_vector(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front().size() < 3) throw ConfigError("'" + path + "' is not an index,real,imag CSV");
  CVector v(static_cast<Index>(rows.size() - 1));
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw ConfigError("'" + path + "' row " + std::to_string(i) + " needs 3 fields");
    v[static_cast<Index>(i - 1)] = Complex(std::stod(rows[i][1]), std::stod(rows[i][2]));
  }
  return v;
}

void write_record(const std::string& path, const ResultRecord& rec, bool timing) {
  write_table(path, csv_header(), {to_csv_fields(rec, timing)});
}

// Recovery from measurement files instead of a synthetic instance.
int recover_from_files(Section& root, Section input, const CommonOptions& opts, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = root.require<int>("n");
  const BasisKind basis = parse_basis_kind(root.get<std::string>("basis", "canonical"));
  const Method method = parse_method(root.get<std::string>("method", "altmin"));
  const double r = root.get("r", 1.0);
  const double lambda_factor = root.get("lambda_factor", kDefaultLambdaFactor);
  std::uint64_t seed = root.get<std::uint64_t>("seed", 0);
  if (opts.seed) seed = *opts.seed;
  SolverConfig solver = parse_solver(root.child("solver"));
  AltMinConfig alt = parse_altmin(root.child("altmin"));
  const std::string out = resolve_out(root, opts, "recover.csv");
  const std::string y_path = input.require<std::string>("measurements");
  const std::string u_path = input.require<std::string>("frequencies");
  const std::string truth_path = input.get<std::string>("truth", "");
  const auto groups = input.get<std::vector<std::vector<int>>>("groups", {});
  input.finish();
  root.finish();

  const CVector y = read_complex_vector(y_path);
  const Vector u = read_real_vector(u_path);
  const int m = static_cast<int>(u.size());
  const PerturbationModel model =
      groups.empty() ? PerturbationModel::independent(m, r) : PerturbationModel::identity_groups(groups, r);
  const Grid grid = Grid::line(n);
  const Problem problem(y, FrequencySet::line(u, r), grid, SparsityBasis(basis, grid), model);
  solver.lambda = lambda_factor * std::sqrt(static_cast<double>(m));
  alt.seed = seed;

  ResultRecord rec;
  Vector x_hat;
  Vector delta_hat;
  switch (method) {
    case Method::AltMin: {
      const RecoveryResult res = multistart(problem, solver, alt);
      x_hat = res.x_hat;
      delta_hat = res.delta_hat.col(0);
      rec.objective = res.objective;
      rec.converged = res.converged;
      if (res.ambiguous_searches > 0) {
        log << "note: " << res.ambiguous_searches << " parameter searches had tied grid minima\n";
      }
      break;
    }
    case Method::Baseline1: {
      const BaselineReport res = baseline1(problem, solver);
      x_hat = res.x_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
    case Method::Baseline2: {
      const BaselineReport res = baseline2(problem, solver, alt);
      x_hat = res.x_hat;
      delta_hat = res.delta_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
    case Method::Linearized: {
      if (!groups.empty()) throw ConfigError("method 'linearized' needs one perturbation per measurement (no groups)");
      const CompressiveSolution res = solve_linearized_compressive(y, u, n, r, solver, alt, basis);
      x_hat = res.x_hat;
      delta_hat = res.delta_hat;
      rec.objective = res.objective;
      rec.converged = res.converged;
      break;
    }
  }
  if (perturbation_may_alias(problem.freq, r)) {
    log << "warning: r exceeds half the smallest base-frequency gap; perturbed frequencies may cross\n";
  }
  rec.n = n;
  rec.basis = to_string(basis);
  rec.m = m;
  rec.r = r;
  rec.delta_u = groups.empty() ? "M" : std::to_string(groups.size());
  rec.method = to_string(method);
  rec.seed = seed;
  rec.rrmse = std::numeric_limits<double>::quiet_NaN();
  if (!truth_path.empty()) {
    const Vector truth = read_real_vector(truth_path);
    rec.s = static_cast<int>((truth.array() != 0.0).count());
    rec.rrmse = rrmse(truth, x_hat);
    log << "rrmse=" << format_double(rec.rrmse) << "\n";
  }
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_record(out, rec, opts.timing);
  write_vector_csv(companion_path(out, "x_hat"), x_hat);
  if (delta_hat.size()) write_vector_csv(companion_path(out, "delta_hat"), delta_hat);
  log << "objective=" << format_double(rec.objective) << " converged=" << rec.converged << "\n";
  return kOk;
}

}  // namespace

std::string companion_path(const std::string& out, const std::string& name) {
  const std::filesystem::path p(out);
  const std::filesystem::path dir = p.parent_path();
  return (dir / (p.stem().string() + "_" + name + ".csv")).string();
}

int cmd_recover(const Json& config, const CommonOptions& opts, std::ostream& log) {
  Section root(config, "");
  if (root.has("input")) return recover_from_files(root, root.child("input"), opts, log);

  ExperimentSpec spec;
  spec.n = root.require<int>("n");
  spec.basis = parse_basis_kind(root.get<std::string>("basis", "canonical"));
  const int s = root.get("s", 5);
  const int m = root.get("m", std::min(spec.n, 70));
  spec.s_list = {s};
  spec.m_list = {m};
  spec.r = root.get("r", spec.r);
  if (root.has("delta_u")) spec.delta_u = parse_delta_u(root.get<Json>("delta_u", Json()), root.path_of("delta_u"));
  spec.noise_pct = root.get("noise_pct", spec.noise_pct);
  spec.seed = root.get("seed", spec.seed);
  if (opts.seed) spec.seed = *opts.seed;
  spec.lambda_factor = root.get("lambda_factor", spec.lambda_factor);
  const Method method = parse_method(root.get<std::string>("method", "altmin"));
  spec.methods = {method};
  spec.trials = 1;
  spec.solver = parse_solver(root.child("solver"));
  spec.altmin = parse_altmin(root.child("altmin"));
  const std::string out = resolve_out(root, opts, "recover.csv");
  root.finish();
  spec.validate();

  const MethodRun run = execute_method(spec, s, m, method, 0, spec.lambda_factor);
  if (perturbation_may_alias(FrequencySet::line(run.instance.u), spec.r)) {
    log << "warning: r exceeds half the smallest base-frequency gap ("
        << format_double(min_frequency_gap(run.instance.u)) << "); perturbed frequencies may cross\n";
  }
  write_record(out, run.record, opts.timing);
  write_vector_csv(companion_path(out, "x_hat"), run.x_hat);
  write_vector_csv(companion_path(out, "x_true"), run.instance.signal.x);
  if (run.delta_hat.size()) write_vector_csv(companion_path(out, "delta_hat"), run.delta_hat);
  write_vector_csv(companion_path(out, "delta_true"), run.instance.delta);
  log << "method=" << run.record.method << " rrmse=" << format_double(run.record.rrmse)
      << " objective=" << format_double(run.record.objective) << " converged=" << run.record.converged << "\n";
  return kOk;
}

int cmd_sweep(const Json& config, const CommonOptions& opts, std::ostream& log) {
  Section root(config, "");
  ExperimentSpec spec = parse_experiment(root, true);
  if (opts.seed) spec.seed = *opts.seed;
  const std::string out = resolve_out(root, opts, "sweep.csv");
  root.finish();
  spec.validate();

  SweepOptions sweep;
  sweep.csv_path = out;
  sweep.resume = opts.resume;
  sweep.timing = opts.timing;
  sweep.workers = opts.workers ? *opts.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const SweepOutcome res = run_sweep(spec, sweep);
  for (const auto& f : res.failures) log << "failed: " << f << "\n";
  log << "rows written: " << res.records.size() << ", skipped (already present): " << res.skipped
      << ", failed: " << res.failures.size() << "\n";
  return res.failures.empty() ? kOk : kCellsFailed;
}

int cmd_analyze(const Json& config, const CommonOptions& opts, std::ostream& log) {
  Section root(config, "");
  const int n = root.require<int>("n");
  const int m = root.get("m", std::max(1, n / 2));
  const double r = root.get("r", 0.5);
  const BasisKind basis = parse_basis_kind(root.get<std::string>("basis", "canonical"));
  std::uint64_t seed = root.get<std::uint64_t>("seed", 0);
  if (opts.seed) seed = *opts.seed;
  const int mc_samples = root.get("mc_samples", 10000);
  Section gsec = root.child("g_experiment");
  const int s = gsec.get("s", 5);
  const auto r_values = gsec.get<std::vector<double>>("r_values", {0.0, 0.25, 0.5, 1.0});
  const int trials = gsec.get("trials", 10);
  const double noise_pct = gsec.get("noise_pct", 0.0);
  const double lambda_factor = gsec.get("lambda_factor", kDefaultLambdaFactor);
  SolverConfig solver = parse_solver(gsec.child("solver"));
  gsec.finish();
  const std::string out = resolve_out(root, opts, "analyze.csv");
  root.finish();
  if (mc_samples < 0) throw ConfigError("key 'mc_samples' must be >= 0");
  if (trials < 1) throw ConfigError("key 'g_experiment.trials' must be >= 1");

  const Vector u = gen_frequencies(m, n, mix_seed({seed, 1}));
  const SparsityBasis psi(basis, Grid::line(n));
  const CoherenceReport rep = verify_coherence_bound(u, r, n, psi, mc_samples, mix_seed({seed, 2}));
  write_table(out,
              {"N", "M", "r", "basis", "mu", "mu_t", "bound", "max_sinc", "chain_holds", "mc_samples",
               "mc_max_abs_dev", "mc_max_z", "realized_coherence_mean", "realized_coherence_max"},
              {{std::to_string(n), std::to_string(m), format_double(r), to_string(basis), format_double(rep.mu),
                format_double(rep.mu_t), format_double(rep.bound), format_double(rep.max_sinc),
                rep.chain_holds ? "1" : "0", std::to_string(rep.mc_samples), format_double(rep.mc_max_abs_dev),
                format_double(rep.mc_max_z), format_double(rep.realized_coherence_mean),
                format_double(rep.realized_coherence_max)}});
  log << "mu=" << format_double(rep.mu) << " mu_t=" << format_double(rep.mu_t)
      << " bound=" << format_double(rep.bound) << "\n";
  log << "bound chain mu_t <= bound <= mu: " << (rep.chain_holds ? "holds" : "violated") << "\n";
  if (rep.mc_samples > 0) {
    log << "monte-carlo max deviation=" << format_double(rep.mc_max_abs_dev)
        << " (" << format_double(rep.mc_max_z) << " standard errors)\n";
  }

  // Recovery when perturbations are ignored, on paired signals across r.
  solver.lambda = lambda_factor * std::sqrt(static_cast<double>(m));
  std::vector<std::vector<std::string>> rows;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t tseed = mix_seed({seed, 3, static_cast<std::uint64_t>(t)});
    const Vector x = gen_sparse_signal(n, s, BasisKind::Canonical, tseed);
    for (double rv : r_values) {
      CVector noise;
      if (noise_pct > 0.0) {
        const CVector clean = forward(build_G(n, rv).g.cwiseProduct(x), FrequencySet::line(u), n);
        noise = add_noise(clean, noise_pct, mix_seed({tseed, 4})) - clean;
      }
      const ExpectationRecoveryReport g = expectation_recovery_experiment(x, u, rv, noise, solver);
      rows.push_back({format_double(rv), std::to_string(t), std::to_string(tseed), format_double(g.recovery_error),
                      format_double(g.model_discrepancy)});
    }
  }
  write_table(companion_path(out, "g_experiment"), {"r", "trial", "seed", "recovery_error", "model_discrepancy"},
              rows);
  if (!rep.chain_holds && basis == BasisKind::Canonical) return kCheckFailed;
  return kOk;
}

int cmd_linearized(const Json& config, const CommonOptions& opts, std::ostream& log) {
  Section root(config, "");
  const int n = root.require<int>("n");
  const std::string mode = root.get<std::string>("mode", "exact");
  std::uint64_t seed = root.get<std::uint64_t>("seed", 0);
  if (opts.seed) seed = *opts.seed;

  if (mode == "exact") {
    const double delta_max = root.get("delta_max", 0.5);
    const std::string parity = root.get<std::string>("parity", "mixed");
    const std::string out = resolve_out(root, opts, "linearized.csv");
    root.finish();
    if (parity != "mixed" && parity != "even" && parity != "odd") {
      throw ConfigError("key 'parity' must be one of mixed, even, odd");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> draw(-delta_max, delta_max);
    Vector u(n), x(n), delta(n);
    for (int i = 0; i < n; ++i) u[i] = centered_index(i, n);
    for (int i = 0; i < n; ++i) x[i] = normal(rng);
    for (int i = 0; i < n; ++i) delta[i] = draw(rng);
    if (parity != "mixed") {
      const double sign = parity == "even" ? 1.0 : -1.0;
      const Vector mirrored = x.reverse();
      x = 0.5 * (x + sign * mirrored);
    }
    const CVector y = forward_linearized(x, delta, u);
    const LinearizedSolution sol = solve_linearized_exact(y, u);
    const double x_err = (sol.x_hat - x).norm() / x.norm();
    const double d_err = (sol.delta_hat - delta).cwiseAbs().maxCoeff();
    write_table(out, {"N", "seed", "x_rel_err", "delta_max_err", "h_condition"},
                {{std::to_string(n), std::to_string(seed), format_double(x_err), format_double(d_err),
                  format_double(sol.h_condition)}});
    write_vector_csv(companion_path(out, "x_hat"), sol.x_hat);
    write_vector_csv(companion_path(out, "delta_hat"), sol.delta_hat);
    const bool exact = x_err < 1e-8 && d_err < 1e-6;
    log << (exact ? "exact recovery" : "inexact recovery") << ": x_rel_err=" << format_double(x_err)
        << " delta_max_err=" << format_double(d_err) << " cond(H)=" << format_double(sol.h_condition) << "\n";
    return exact ? kOk : kCheckFailed;
  }
  if (mode != "compressive") throw ConfigError("key 'mode' must be exact or compressive");

  ExperimentSpec spec;
  spec.n = n;
  spec.basis = parse_basis_kind(root.get<std::string>("basis", "canonical"));
  const int s = root.get("s", 20);
  const int m = root.get("m", n);
  spec.s_list = {s};
  spec.m_list = {m};
  spec.r = root.get("r", spec.r);
  spec.seed = seed;
  spec.lambda_factor = root.get("lambda_factor", spec.lambda_factor);
  spec.methods = {Method::Linearized};
  spec.trials = 1;
  spec.solver = parse_solver(root.child("solver"));
  spec.altmin = parse_altmin(root.child("altmin"));
  const std::string out = resolve_out(root, opts, "linearized.csv");
  root.finish();
  spec.validate();
  const MethodRun run = execute_method(spec, s, m, Method::Linearized, 0, spec.lambda_factor);
  write_record(out, run.record, opts.timing);
  write_vector_csv(companion_path(out, "x_hat"), run.x_hat);
  write_vector_csv(companion_path(out, "delta_hat"), run.delta_hat);
  log << "linearized compressive recovery: M=" << m << " rrmse=" << format_double(run.record.rrmse) << "\n";
  return kOk;
}

int cmd_tomo2d(const Json& config, const CommonOptions& opts, std::ostream& log) {
  Section root(config, "");
  Tomo2dSpec spec = parse_tomo2d(root);
  if (opts.seed) spec.seed = *opts.seed;
  const std::string out = resolve_out(root, opts, "tomo2d.csv");
  root.finish();
  const Tomo2dReport rep = run_tomo2d(spec);
  write_table(out,
              {"seed", "n_spokes", "per_spoke", "image_size", "sparsity", "angle_err_deg", "noise_pct",
               "rrmse_altmin", "rrmse_baseline1", "objective", "converged"},
              {{std::to_string(spec.seed), std::to_string(spec.n_spokes), std::to_string(spec.per_spoke),
                std::to_string(spec.image_size), std::to_string(spec.sparsity), format_double(spec.angle_err_deg),
                format_double(spec.noise_pct), format_double(rep.rrmse_altmin), format_double(rep.rrmse_baseline1),
                format_double(rep.objective), rep.converged ? "1" : "0"}});
  write_vector_csv(companion_path(out, "image_true"), rep.image_true);
  write_vector_csv(companion_path(out, "image_altmin"), rep.image_altmin);
  write_vector_csv(companion_path(out, "image_baseline1"), rep.image_baseline1);
  write_vector_csv(companion_path(out, "beta_true"), rep.beta_true);
  write_vector_csv(companion_path(out, "beta_hat"), rep.beta_hat);
  log << "altmin rrmse=" << format_double(rep.rrmse_altmin)
      << " baseline1 rrmse=" << format_double(rep.rrmse_baseline1) << "\n";
  return kOk;
}

int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Blind calibration of perturbed Fourier sensing matrices"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::uint64_t seed = 0;
  int workers = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Json&, const CommonOptions&, std::ostream&);
  };
  const Command commands[] = {
      {"recover", "Recover one signal and its perturbations (multistart)", cmd_recover},
      {"sweep", "Run an experiment sweep and stream results to CSV", cmd_sweep},
      {"analyze", "Expected-coherence bound and expectation-model experiment", cmd_analyze},
      {"linearized", "Exact or compressive recovery under the first-order model", cmd_linearized},
      {"tomo2d", "Radial tomography demo with spoke-angle errors", cmd_tomo2d},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opts.config_path, "JSON configuration document")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "Result CSV path (companions are written next to it)");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads (sweep; default: all cores)")->check(CLI::PositiveNumber);
    sub->add_flag("--resume", opts.resume, "Skip cells already present in the output CSV (sweep)");
    sub->add_flag("--timing", opts.timing, "Record measured wall times instead of 0");
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, log, err);
  }
  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--workers")) opts.workers = workers;
    try {
      const Json config = opts.config_path.empty() ? Json::object() : load_config(opts.config_path);
      return cmd->run(config, opts, log);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << "\n";
      return kUsageError;
    } catch (const DegenerateMeasurements& e) {
      err << "error: DegenerateMeasurements: " << e.what() << "\n";
      return kSolveError;
    } catch (const SingularH& e) {
      err << "error: SingularH: " << e.what() << "\n";
      return kSolveError;
    } catch (const InvalidArgument& e) {
      err << "invalid argument: " << e.what() << "\n";
      return kUsageError;
    } catch (const DimensionError& e) {
      err << "dimension error: " << e.what() << "\n";
      return kUsageError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kSolveError;
    }
  }
  return kUsageError;
}

}  // namespace blindcal::cli
