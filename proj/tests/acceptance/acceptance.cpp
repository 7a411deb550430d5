// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Supporting numbers go to stdout on
// indented lines.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <blindcal/analysis.hpp>
#include <blindcal/experiments.hpp>
#include <blindcal/fourier.hpp>
#include <blindcal/linearized.hpp>
#include <blindcal/sqlasso.hpp>

#include "oracles.hpp"

using namespace blindcal;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Objective traces collected from every recovery run made by the other checks.
struct TraceLog {
  struct Entry {
    std::string origin;
    std::vector<double> trace;
    double start = 0.0;
  };
  std::vector<Entry> entries;

  void add(const std::string& origin, const std::vector<std::vector<double>>& traces, double start) {
    for (const auto& t : traces) entries.push_back({origin, t, start});
  }
};

TraceLog g_traces;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

Vector gaussian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

Vector uniform(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = ud(rng);
  return v;
}

Outcome check_operators() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = rng_for(101);
  double adj_err = 0.0;
  double brute_err = 0.0;
  double mod_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8 + trial % 25;
    const int m = 3 + trial % 17;
    const Vector u = uniform(m, -n / 2.0, n / 2.0, rng);
    const Vector d = uniform(m, -0.7, 0.7, rng);
    const Vector x = gaussian(n, rng);
    const FrequencySet freq(u, d, 0.7);
    const CVector y = forward(x, freq, n);

    const CVector z = gaussian(m, rng).cast<Complex>() + Complex(0, 1) * gaussian(m, rng).cast<Complex>();
    const CVector az = adjoint(z, freq, n);
    const Complex lhs = z.dot(y);
    const Complex rhs = az.dot(x.cast<Complex>());
    adj_err = std::max(adj_err, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));

    const Vector f = u + d;
    const CVector ref = oracle::dft_1d(x, f, 1.0 / std::sqrt(static_cast<double>(m)));
    brute_err = std::max(brute_err, (y - ref).cwiseAbs().maxCoeff());
    const CMatrix dense = build_matrix(freq, n).entries;
    brute_err = std::max(brute_err, (dense - oracle::dft_matrix(f, n, 1.0 / std::sqrt(double(m)))).cwiseAbs().maxCoeff());

    const double shift = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const CVector v = modulation(n, shift);
    const CVector lhs_mod = build_matrix(freq, n).entries * v.cwiseProduct(x.cast<Complex>());
    const FrequencySet shifted(u, (d.array() + shift).matrix(), 0.7 + std::abs(shift));
    mod_err = std::max(mod_err, (lhs_mod - forward(x, shifted, n)).cwiseAbs().maxCoeff());
  }
  // Two-dimensional transform against the double sum.
  for (int trial = 0; trial < 5; ++trial) {
    const int n1 = 4 + 2 * trial;
    const int n2 = 8 + trial;
    const Grid grid = Grid::image(n1, n2);
    const int m = 12;
    Matrix f(m, 2);
    f.col(0) = uniform(m, -n1 / 2.0, n1 / 2.0, rng);
    f.col(1) = uniform(m, -n2 / 2.0, n2 / 2.0, rng);
    const Vector x = gaussian(grid.size(), rng);
    const CVector y = forward(x, FrequencySet(f, 0.0), grid);
    brute_err = std::max(brute_err, (y - oracle::dft_2d(x, n1, n2, f, 1.0 / std::sqrt(double(m)))).cwiseAbs().maxCoeff());
  }
  const double sec = seconds_since(t0);
  Outcome out;
  out.pass = adj_err < 1e-10 && brute_err < 1e-12 && mod_err < 1e-10 && sec < 10.0;
  out.detail = "adjoint " + fmt(adj_err) + ", brute force " + fmt(brute_err) + ", modulation " + fmt(mod_err) +
               ", " + fmt(sec) + " s";
  return out;
}

Outcome check_solver() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = rng_for(202);
  double worst_kkt = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 16 + trial % 49;
    const int m = std::max(8, n / 2 + trial % 7);
    const Vector x0 = [&] {
      Vector v = Vector::Zero(n);
      for (int k = 0; k < 4; ++k) v[std::uniform_int_distribution<int>(0, n - 1)(rng)] = gaussian(1, rng)[0];
      return v;
    }();
    double viol = 0.0;
    if (trial % 2 == 0) {
      const Matrix a = gaussian(m * n, rng).reshaped(m, n) / std::sqrt(static_cast<double>(m));
      const Vector b = a * x0 + 0.01 * gaussian(m, rng);
      SolverConfig cfg;
      cfg.lambda = 3.0 * b.norm() / (a.transpose() * b).cwiseAbs().maxCoeff();
      const SolveReport rep = solve_sqlasso(a, b, cfg);
      viol = kkt_residual(a, b, cfg.lambda, rep.x_hat).violation;
    } else {
      const Vector u = gen_frequencies(m, n, 7000 + trial);
      const Vector d = uniform(m, -0.3, 0.3, rng);
      const CMatrix a = build_matrix(FrequencySet(u, d, 0.3), n).entries;
      // Noise keeps the residual away from zero, where the certificate is defined.
      const CVector clean = a * x0.cast<Complex>();
      const CVector y = add_noise(clean, 1.0, 7100 + trial);
      SolverConfig cfg;
      cfg.lambda = std::sqrt(static_cast<double>(m));
      const SolveReport rep = solve_sqlasso(a, y, cfg);
      viol = kkt_residual(a, y, cfg.lambda, rep.x_hat).violation;
    }
    worst_kkt = std::max(worst_kkt, viol);
  }

  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    const int m = n + 4;
    const Matrix a = gaussian(m * n, rng).reshaped(m, n);
    const Vector b = a * gaussian(n, rng) + 0.3 * gaussian(m, rng);
    const double lambda = (0.5 + trial % 4) * b.norm() / (a.transpose() * b).cwiseAbs().maxCoeff();
    SolverConfig cfg;
    cfg.lambda = lambda;
    const SolveReport rep = solve_sqlasso(a, b, cfg);
    const Vector ref = oracle::coordinate_descent_sqlasso(a, b, lambda);
    const double j_ref = oracle::sqlasso_objective(a, b, lambda, ref);
    const double j = oracle::sqlasso_objective(a, b, lambda, rep.x_hat);
    worst_rel = std::max(worst_rel, std::abs(j - j_ref) / j_ref);
  }
  const double sec = seconds_since(t0);
  Outcome out;
  out.pass = worst_kkt <= 1e-4 && worst_rel <= 1e-6 && sec < 120.0;
  out.detail = "worst KKT " + fmt(worst_kkt) + ", worst relative objective gap " + fmt(worst_rel) + ", " +
               fmt(sec) + " s";
  return out;
}

ExperimentSpec base_spec(int n, double r, int delta_u, double noise) {
  ExperimentSpec spec;
  spec.n = n;
  spec.r = r;
  spec.delta_u = delta_u;
  spec.noise_pct = noise;
  spec.trials = 5;
  spec.seed = 2024;
  return spec;
}

std::vector<double> run_trials(const ExperimentSpec& spec, int s, int m, Method method, const std::string& origin) {
  std::vector<double> errs;
  for (int t = 0; t < spec.trials; ++t) {
    const MethodRun run = execute_method(spec, s, m, method, t, spec.lambda_factor);
    g_traces.add(origin, run.traces, run.initial_objective);
    errs.push_back(run.record.rrmse);
  }
  return errs;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

Outcome check_noiseless_1d() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = base_spec(101, 1.0, 2, 0.0);
  spec.altmin.num_starts = 10;
  const auto errs = run_trials(spec, 5, 70, Method::AltMin, "noiseless 1D");
  const double mean = Eigen::Map<const Vector>(errs.data(), static_cast<Index>(errs.size())).mean();
  const double sec = seconds_since(t0);
  return {mean < 0.05 && sec < 600.0, "mean RRMSE " + fmt(mean) + " [" + list(errs) + "], " + fmt(sec) + " s"};
}

// Shared with the degradation check: altmin at s = 20, delta_u = 10.
std::vector<double> g_altmin_du10;

Outcome check_noisy_comparison() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentSpec spec = base_spec(100, 1.0, 10, 5.0);
  g_altmin_du10 = run_trials(spec, 20, 60, Method::AltMin, "noisy altmin");
  const auto b1 = run_trials(spec, 20, 60, Method::Baseline1, "noisy baseline1");
  const auto b2 = run_trials(spec, 20, 60, Method::Baseline2, "noisy baseline2");
  const double ma = oracle::median(g_altmin_du10);
  const double m1 = oracle::median(b1);
  const double m2 = oracle::median(b2);
  const double sec = seconds_since(t0);
  return {ma < m1 / 2 && ma < m2 / 2 && ma < 0.2 && sec < 1200.0,
          "medians altmin " + fmt(ma) + ", baseline1 " + fmt(m1) + ", baseline2 " + fmt(m2) + ", " + fmt(sec) + " s"};
}

Outcome check_independent_degradation() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentSpec spec = base_spec(100, 1.0, 0, 5.0);
  const auto hi = run_trials(spec, 20, 60, Method::AltMin, "independent s=20");
  const auto lo = run_trials(spec, 2, 60, Method::AltMin, "independent s=2");
  const double m_hi = oracle::median(hi);
  const double m_ref = oracle::median(g_altmin_du10);
  const double m_lo = oracle::median(lo);
  const double sec = seconds_since(t0);
  return {m_hi >= 1.5 * m_ref && m_lo < 0.15 && sec < 1200.0,
          "s=20 median " + fmt(m_hi) + " vs " + fmt(m_ref) + " at delta_u=10 (ratio " + fmt(m_hi / m_ref) +
              "), s=2 median " + fmt(m_lo) + ", " + fmt(sec) + " s"};
}

Outcome check_exact_linearized() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 41;
  Vector u(n);
  for (int i = 0; i < n; ++i) u[i] = i - n / 2;
  auto rng = rng_for(303);
  double x_err = 0.0;
  double d_err = 0.0;
  int singular = 0;
  int other = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = gaussian(n, rng);
    // Mixed parity is generic for Gaussian draws; the mirrored difference is
    // forced away from zero anyway.
    x[n / 2 + 1] = x[n / 2 - 1] + 1.0;
    const Vector delta = uniform(n, -0.5, 0.5, rng);
    const CVector y = oracle::taylor_1d(x, u, delta);
    try {
      const LinearizedSolution sol = solve_linearized_exact(y, u);
      x_err = std::max(x_err, (sol.x_hat - x).norm() / x.norm());
      d_err = std::max(d_err, (sol.delta_hat - delta).cwiseAbs().maxCoeff());
    } catch (const SingularH&) {
      ++singular;
    } catch (const Error&) {
      ++other;
    }
  }

  // Assumption violations.
  auto raises_degenerate = [&](const Vector& x, const Vector& delta) {
    try {
      solve_linearized_exact(oracle::taylor_1d(x, u, delta), u);
    } catch (const DegenerateMeasurements&) {
      return true;
    } catch (...) {
      return false;
    }
    return false;
  };
  Vector even = gaussian(n, rng);
  Vector odd = gaussian(n, rng);
  for (int k = 1; k <= n / 2; ++k) {
    even[n / 2 + k] = even[n / 2 - k];
    odd[n / 2 + k] = -odd[n / 2 - k];
  }
  odd[n / 2] = 0.0;
  const Vector delta = uniform(n, -0.5, 0.5, rng);
  Vector mirrored = delta;
  mirrored[n / 2 + 3] = -mirrored[n / 2 - 3];
  const bool v_even = raises_degenerate(even, delta);
  const bool v_odd = raises_degenerate(odd, delta);
  const bool v_mirror = raises_degenerate(gaussian(n, rng), mirrored);
  const double sec = seconds_since(t0);
  return {x_err < 1e-8 && d_err < 1e-6 && singular == 0 && other == 0 && v_even && v_odd && v_mirror && sec < 60.0,
          "max x error " + fmt(x_err) + ", max delta error " + fmt(d_err) + ", singular " + std::to_string(singular) +
              ", other errors " + std::to_string(other) + ", violations raised even/odd/mirrored " +
              std::to_string(v_even) + "/" + std::to_string(v_odd) + "/" + std::to_string(v_mirror) + ", " +
              fmt(sec) + " s"};
}

Outcome check_expected_coherence() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 32;
  const int m = 16;
  const double r = 0.5;
  const Vector u = gen_frequencies(m, n, 404);
  const GramMonteCarlo mc = monte_carlo_gram(u, r, n, 100000, 405);
  // Analytic expectation from the definition: E[e^{-i 2 pi d (l1 - l2)/n}] for
  // d ~ U[-r, r] is sinc(2 pi r (l1 - l2) / n).
  const CMatrix f = oracle::dft_matrix(u, n, 1.0 / std::sqrt(static_cast<double>(m)));
  CMatrix b = f.adjoint() * f;
  for (int a = 0; a < n; ++a) {
    for (int c = 0; c < n; ++c) b(a, c) *= oracle::sinc(oracle::kTwoPi * r * (a - c) / n);
  }
  const CMatrix lib = expected_gram(u, r, n);
  double worst_z = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int c = 0; c < n; ++c) {
      const Complex dev = mc.mean(a, c) - b(a, c);
      const double zr = std::abs(dev.real()) / std::max(mc.se_real(a, c), 1e-13);
      const double zi = std::abs(dev.imag()) / std::max(mc.se_imag(a, c), 1e-13);
      worst_z = std::max({worst_z, zr, zi});
    }
  }
  const double lib_err = (lib - b).cwiseAbs().maxCoeff();

  auto rng = rng_for(406);
  int chain_ok = 0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const int nn = std::uniform_int_distribution<int>(12, 64)(rng);
    const int mm = std::uniform_int_distribution<int>(4, nn)(rng);
    const double rr = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const Vector uu = gen_frequencies(mm, nn, 500 + cfg);
    const CoherenceReport rep = verify_coherence_bound(uu, rr, nn, SparsityBasis::canonical(Grid::line(nn)));
    if (rep.chain_holds && rep.mu_t <= rep.bound + 1e-9 && rep.bound <= rep.mu + 1e-9) ++chain_ok;
  }
  const double sec = seconds_since(t0);
  return {worst_z <= 4.0 && lib_err < 1e-12 && chain_ok == 20 && sec < 120.0,
          "worst entry deviation " + fmt(worst_z) + " standard errors, analytic mismatch " + fmt(lib_err) +
              ", chain held on " + std::to_string(chain_ok) + "/20, " + fmt(sec) + " s"};
}

Outcome check_expectation_model() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 64;
  const int m = 40;
  const double r = 0.5;
  const Vector u = gen_frequencies(m, n, 601);
  const Vector x = gen_sparse_signal(n, 5, BasisKind::Canonical, 602);
  const MeasurementMonteCarlo mc = monte_carlo_measurements(x, u, r, 100000, 603);
  Vector gx(n);
  for (int p = 0; p < n; ++p) gx[p] = oracle::sinc(oracle::kTwoPi * oracle::centered(p, n) * r / n) * x[p];
  const CVector expect = oracle::dft_1d(gx, u, 1.0 / std::sqrt(static_cast<double>(m)));
  double worst_z = 0.0;
  for (int i = 0; i < m; ++i) {
    const Complex dev = mc.mean[i] - expect[i];
    worst_z = std::max({worst_z, std::abs(dev.real()) / std::max(mc.se_real[i], 1e-13),
                        std::abs(dev.imag()) / std::max(mc.se_imag[i], 1e-13)});
  }

  const std::vector<double> rs{0.0, 0.25, 0.5, 1.0};
  std::vector<std::vector<double>> errs(rs.size());
  for (int trial = 0; trial < 9; ++trial) {
    const Vector uu = gen_frequencies(m, n, 700 + trial);
    const Vector xx = gen_sparse_signal(n, 5, BasisKind::Canonical, 800 + trial);
    SolverConfig cfg;
    cfg.lambda = std::sqrt(static_cast<double>(m));
    for (std::size_t k = 0; k < rs.size(); ++k) {
      errs[k].push_back(expectation_recovery_experiment(xx, uu, rs[k], CVector(), cfg).recovery_error);
    }
  }
  std::vector<double> medians;
  for (const auto& e : errs) medians.push_back(oracle::median(e));
  bool monotone = true;
  for (std::size_t k = 1; k < medians.size(); ++k) monotone = monotone && medians[k] >= medians[k - 1];
  const double sec = seconds_since(t0);
  return {worst_z <= 4.0 && monotone && sec < 300.0,
          "worst measurement deviation " + fmt(worst_z) + " standard errors, medians over r = 0, 0.25, 0.5, 1: " +
              list(medians) + ", " + fmt(sec) + " s"};
}

Outcome check_tomography() {
  const auto t0 = std::chrono::steady_clock::now();
  int wins = 0;
  std::vector<double> alt;
  std::vector<double> b1;
  for (int seed = 0; seed < 5; ++seed) {
    Tomo2dSpec spec;
    spec.seed = static_cast<std::uint64_t>(seed);
    const Tomo2dReport rep = run_tomo2d(spec);
    g_traces.add("tomography", rep.traces, rep.initial_objective);
    alt.push_back(rep.rrmse_altmin);
    b1.push_back(rep.rrmse_baseline1);
    if (rep.rrmse_altmin < rep.rrmse_baseline1) ++wins;
  }
  const double med = oracle::median(alt);
  const double sec = seconds_since(t0);
  return {wins >= 4 && med < 0.2 && sec < 1800.0,
          "altmin better on " + std::to_string(wins) + "/5, altmin [" + list(alt) + "], baseline1 [" + list(b1) +
              "], " + fmt(sec) + " s"};
}

Outcome check_linearized_curve() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentSpec spec = base_spec(100, 0.5, 0, 0.0);
  const std::vector<int> ms{100, 80, 60, 40};
  std::vector<double> medians;
  for (int m : ms) medians.push_back(oracle::median(run_trials(spec, 20, m, Method::Linearized, "linearized")));
  // Errors at roundoff level are treated as equal.
  bool monotone = true;
  for (std::size_t k = 1; k < medians.size(); ++k) monotone = monotone && medians[k] + 1e-12 >= medians[k - 1];
  const double sec = seconds_since(t0);
  return {monotone && medians[0] < 1e-6 && sec < 600.0,
          "medians at M = 100, 80, 60, 40: " + list(medians) + ", " + fmt(sec) + " s"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome check_determinism() {
  ExperimentSpec spec = base_spec(32, 0.5, 4, 5.0);
  spec.s_list = {2, 4};
  spec.m_list = {16, 24};
  spec.trials = 2;
  spec.methods = {Method::AltMin, Method::Baseline1, Method::Baseline2, Method::Linearized};
  spec.altmin.num_starts = 3;
  const auto dir = std::filesystem::temp_directory_path() / "blindcal_acceptance";
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (int workers : {1, 4, 4}) {
    const auto path = dir / ("sweep_" + std::to_string(files.size()) + ".csv");
    std::filesystem::remove(path);
    SweepOptions opts;
    opts.csv_path = path.string();
    opts.workers = workers;
    run_sweep(spec, opts);
    files.push_back(slurp(path));
  }
  std::filesystem::remove_all(dir);
  const bool same = !files[0].empty() && files[0] == files[1] && files[1] == files[2];
  return {same, std::string(same ? "identical" : "different") + " CSVs over three runs (1, 4 and 4 workers), " +
                    std::to_string(files[0].size()) + " bytes"};
}

Outcome check_traces() {
  int bad = 0;
  std::string first_bad;
  for (const auto& e : g_traces.entries) {
    if (!oracle::non_increasing_from(e.trace, e.start, 1e-9) || e.trace.empty()) {
      if (bad++ == 0) first_bad = e.origin;
    }
  }
  return {bad == 0 && !g_traces.entries.empty(),
          std::to_string(g_traces.entries.size()) + " traces checked, " + std::to_string(bad) + " violations" +
              (bad ? " (first in " + first_bad + ")" : "")};
}

}  // namespace

int main() {
  std::map<int, Outcome> results;
  const std::vector<std::pair<int, std::function<Outcome()>>> checks{
      {1, check_operators},         {2, check_solver},
      {4, check_noiseless_1d},      {5, check_noisy_comparison},
      {6, check_independent_degradation}, {7, check_exact_linearized},
      {8, check_expected_coherence}, {9, check_expectation_model},
      {10, check_tomography},       {11, check_linearized_curve},
      {12, check_determinism},      {3, check_traces},
  };
  for (const auto& [id, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "  [" << id << "] " << o.detail << std::endl;
    results[id] = o;
  }
  bool all = true;
  for (const auto& [id, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
