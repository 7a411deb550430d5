#include "blindcal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "blindcal/fourier.hpp"

namespace blindcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

CMatrix unperturbed(const Vector& u, int n) {
  return fourier_rows(Matrix(u), Grid::line(n), 1.0 / std::sqrt(static_cast<double>(u.size())));
}

void check_inputs(const Vector& u, double r, int n) {
  if (n < 1) throw InvalidArgument("N must be positive");
  if (u.size() < 1) throw InvalidArgument("need at least one frequency");
  if (!u.allFinite()) throw InvalidArgument("non-finite frequency");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("r must be >= 0");
}

double standard_error(double sum, double sum_sq, int n) {
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - mean * mean)) * n / std::max(1, n - 1);
  return std::sqrt(var / n);
}

}  // namespace

double sinc(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

CMatrix expected_gram(const Vector& u, double r, int n) {
  check_inputs(u, r, n);
  const CMatrix f = unperturbed(u, n);
  CMatrix b = f.adjoint() * f;
  for (int j1 = 0; j1 < n; ++j1) {
    for (int j2 = 0; j2 < n; ++j2) {
      if (j1 == j2) continue;
      b(j1, j2) *= sinc(kTwoPi * (j1 - j2) * r / n);
    }
  }
  return b;
}

double coherence(const CMatrix& a) {
  if (a.cols() < 2) return 0.0;
  const Vector norms = a.colwise().norm().transpose();
  if (norms.minCoeff() == 0.0) throw InvalidArgument("matrix has a zero column");
  const CMatrix g = a.adjoint() * a;
  double mu = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      if (i != j) mu = std::max(mu, std::abs(g(i, j)) / (norms[i] * norms[j]));
    }
  }
  return mu;
}

double coherence(const Matrix& a) { return coherence(CMatrix(a.cast<Complex>())); }

GramMonteCarlo monte_carlo_gram(const Vector& u, double r, int n, int samples, std::uint64_t seed) {
  check_inputs(u, r, n);
  if (samples < 2) throw InvalidArgument("need at least two Monte-Carlo samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-r, r);
  Matrix sum_re = Matrix::Zero(n, n), sum_im = Matrix::Zero(n, n);
  Matrix sq_re = Matrix::Zero(n, n), sq_im = Matrix::Zero(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(u.size()));
  Matrix f(u.size(), 1);
  for (int k = 0; k < samples; ++k) {
    for (Index i = 0; i < u.size(); ++i) f(i, 0) = u[i] + (r > 0.0 ? draw(rng) : 0.0);
    const CMatrix ft = fourier_rows(f, Grid::line(n), scale);
    const CMatrix g = ft.adjoint() * ft;
    sum_re += g.real();
    sum_im += g.imag();
    sq_re += g.real().cwiseAbs2();
    sq_im += g.imag().cwiseAbs2();
  }
  GramMonteCarlo out;
  out.mean.resize(n, n);
  out.se_real.resize(n, n);
  out.se_imag.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.mean(i, j) = Complex(sum_re(i, j), sum_im(i, j)) / static_cast<double>(samples);
      out.se_real(i, j) = standard_error(sum_re(i, j), sq_re(i, j), samples);
      out.se_imag(i, j) = standard_error(sum_im(i, j), sq_im(i, j), samples);
    }
  }
  return out;
}

CoherenceReport verify_coherence_bound(const Vector& u, double r, int n, const SparsityBasis& psi, int mc_samples,
                                       std::uint64_t seed) {
  check_inputs(u, r, n);
  if (psi.size() != n || psi.grid().ndim != 1) throw DimensionError("basis must be a 1D basis of length N");
  CoherenceReport rep;
  const CMatrix f = unperturbed(u, n);
  rep.mu = coherence(psi.apply_right(f));

  const Matrix p = psi.dense();
  const CMatrix bp = p.transpose() * expected_gram(u, r, n) * p;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double denom = std::sqrt(std::abs(bp(i, i)) * std::abs(bp(j, j)));
      if (denom > 0.0) rep.mu_t = std::max(rep.mu_t, std::abs(bp(i, j)) / denom);
    }
  }
  for (int d = 1; d < n; ++d) rep.max_sinc = std::max(rep.max_sinc, std::abs(sinc(kTwoPi * d * r / n)));
  if (n == 1) rep.max_sinc = 1.0;
  rep.bound = rep.mu * rep.max_sinc;
  rep.chain_holds = rep.mu_t <= rep.bound + 1e-9 && rep.bound <= rep.mu + 1e-9;

  if (mc_samples > 0) {
    rep.mc_samples = mc_samples;
    const GramMonteCarlo mc = monte_carlo_gram(u, r, n, mc_samples, seed);
    const CMatrix b = expected_gram(u, r, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Complex dev = mc.mean(i, j) - b(i, j);
        rep.mc_max_abs_dev = std::max(rep.mc_max_abs_dev, std::abs(dev));
        if (mc.se_real(i, j) > 0.0) rep.mc_max_z = std::max(rep.mc_max_z, std::abs(dev.real()) / mc.se_real(i, j));
        if (mc.se_imag(i, j) > 0.0) rep.mc_max_z = std::max(rep.mc_max_z, std::abs(dev.imag()) / mc.se_imag(i, j));
      }
    }
    // A handful of realizations shows how far single draws stray from the bound.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> draw(-r, r);
    const int draws = 20;
    Matrix fr(u.size(), 1);
    double total = 0.0;
    for (int k = 0; k < draws; ++k) {
      for (Index i = 0; i < u.size(); ++i) fr(i, 0) = u[i] + (r > 0.0 ? draw(rng) : 0.0);
      const double c = coherence(psi.apply_right(fourier_rows(fr, Grid::line(n), 1.0 / std::sqrt(double(u.size())))));
      total += c;
      rep.realized_coherence_max = std::max(rep.realized_coherence_max, c);
    }
    rep.realized_coherence_mean = total / draws;
  }
  return rep;
}

ExpectationModel build_G(int n, double r) {
  if (n < 1) throw InvalidArgument("N must be positive");
  if (!(r >= 0.0)) throw InvalidArgument("r must be >= 0");
  ExpectationModel g;
  g.r = r;
  g.g.resize(n);
  for (int p = 0; p < n; ++p) g.g[p] = sinc(kTwoPi * centered_index(p, n) * r / n);
  return g;
}

MeasurementMonteCarlo monte_carlo_measurements(const Vector& x, const Vector& u, double r, int samples,
                                               std::uint64_t seed) {
  const int n = static_cast<int>(x.size());
  check_inputs(u, r, n);
  if (samples < 2) throw InvalidArgument("need at least two Monte-Carlo samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-r, r);
  const Index m = u.size();
  Vector sum_re = Vector::Zero(m), sum_im = Vector::Zero(m);
  Vector sq_re = Vector::Zero(m), sq_im = Vector::Zero(m);
  const Grid grid = Grid::line(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int k = 0; k < samples; ++k) {
    for (Index i = 0; i < m; ++i) {
      const double f = u[i] + (r > 0.0 ? draw(rng) : 0.0);
      const Complex v = row_response(&f, x, grid, scale);
      sum_re[i] += v.real();
      sum_im[i] += v.imag();
      sq_re[i] += v.real() * v.real();
      sq_im[i] += v.imag() * v.imag();
    }
  }
  MeasurementMonteCarlo out;
  out.mean.resize(m);
  out.se_real.resize(m);
  out.se_imag.resize(m);
  for (Index i = 0; i < m; ++i) {
    out.mean[i] = Complex(sum_re[i], sum_im[i]) / static_cast<double>(samples);
    out.se_real[i] = standard_error(sum_re[i], sq_re[i], samples);
    out.se_imag[i] = standard_error(sum_im[i], sq_im[i], samples);
  }
  return out;
}

ExpectationRecoveryReport expectation_recovery_experiment(const Vector& x, const Vector& u, double r,
                                                          const CVector& noise, const SolverConfig& solver_cfg) {
  const int n = static_cast<int>(x.size());
  check_inputs(u, r, n);
  if (noise.size() != 0 && noise.size() != u.size()) throw DimensionError("noise length must equal M");
  const CMatrix f = unperturbed(u, n);
  const ExpectationModel g = build_G(n, r);
  const CVector fx = f * x;
  CVector y = f * g.g.cwiseProduct(x);
  ExpectationRecoveryReport rep;
  rep.model_discrepancy = (y - fx).norm();
  if (noise.size() != 0) y += noise;
  rep.x_star = solve_bp(f, y, solver_cfg).x_hat;
  rep.recovery_error = (rep.x_star - x).norm();
  return rep;
}

}  // namespace blindcal
