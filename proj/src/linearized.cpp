#include "blindcal/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "blindcal/fourier.hpp"

namespace blindcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTiny = 1e-12;
// Reciprocal condition numbers below this make the block system unusable.
constexpr double kMinRcond = 1e-13;
// Coefficients below this fraction of the largest one are left out of the
// support used by the final refinement.
constexpr double kSupportFraction = 1e-3;
constexpr int kPolishIters = 50;

// Levenberg-Marquardt on the support of `coeffs` for the smooth residual
// y - (F + diag(delta) D) Psi_S theta_S. Alternation converges sublinearly
// near the solution; this joint step removes the remaining bias in a few
// iterations once the support is right. Returns false if nothing was done.
bool polish_on_support(const Problem& problem, const CMatrix& f, const CMatrix& d, double r, Vector& coeffs,
                       Vector& delta) {
  const Index m = problem.y.size();
  std::vector<Index> support;
  const double peak = coeffs.cwiseAbs().maxCoeff();
  if (peak == 0.0) return false;
  for (Index j = 0; j < coeffs.size(); ++j) {
    if (std::abs(coeffs[j]) > kSupportFraction * peak) support.push_back(j);
  }
  const auto cap = static_cast<std::size_t>(m / 2);
  if (support.size() > cap) {
    std::partial_sort(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(cap), support.end(),
                      [&](Index a, Index b) { return std::abs(coeffs[a]) > std::abs(coeffs[b]); });
    support.resize(cap);
  }
  const Index k = static_cast<Index>(support.size());
  const Matrix psi = problem.basis.dense();
  Matrix psi_s(psi.rows(), k);
  for (Index j = 0; j < k; ++j) psi_s.col(j) = psi.col(support[static_cast<std::size_t>(j)]);
  const CMatrix f_s = f * psi_s;
  const CMatrix d_s = d * psi_s;

  Vector theta(k);
  for (Index j = 0; j < k; ++j) theta[j] = coeffs[support[static_cast<std::size_t>(j)]];
  Vector dl = delta;
  auto residual = [&](const Vector& th, const Vector& de) -> CVector {
    return problem.y - f_s * th - de.asDiagonal() * (d_s * th);
  };
  CVector res = residual(theta, dl);
  double cost = res.squaredNorm();
  double damping = 1e-6;
  for (int it = 0; it < kPolishIters && cost > 0.0; ++it) {
    // Jacobian of the residual, real and imaginary parts stacked.
    const CMatrix jt = -(f_s + dl.asDiagonal() * d_s);
    const CVector slope = -(d_s * theta);
    Matrix jac = Matrix::Zero(2 * m, k + m);
    jac.topLeftCorner(m, k) = jt.real();
    jac.bottomLeftCorner(m, k) = jt.imag();
    for (Index i = 0; i < m; ++i) {
      jac(i, k + i) = slope[i].real();
      jac(m + i, k + i) = slope[i].imag();
    }
    Vector rhs(2 * m);
    rhs << res.real(), res.imag();
    const Matrix normal = jac.transpose() * jac;
    const Vector grad = jac.transpose() * rhs;
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Matrix damped = normal;
      damped.diagonal().array() += damping * (1.0 + normal.diagonal().array());
      const Vector step = -damped.ldlt().solve(grad);
      const Vector th_new = theta + step.head(k);
      const Vector de_new = (dl + step.tail(m)).cwiseMax(-r).cwiseMin(r);
      const CVector res_new = residual(th_new, de_new);
      const double cost_new = res_new.squaredNorm();
      if (cost_new < cost) {
        const double gain = cost - cost_new;
        theta = th_new;
        dl = de_new;
        res = res_new;
        cost = cost_new;
        damping = std::max(damping / 10.0, 1e-15);
        improved = gain > 1e-30 * (1.0 + cost);
        break;
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }
  coeffs.setZero();
  for (Index j = 0; j < k; ++j) coeffs[support[static_cast<std::size_t>(j)]] = theta[j];
  delta = dl;
  return true;
}

}  // namespace

Matrix BlockDecomposition::c_block(int row_part, int col_part) const {
  const int rows = row_part == 0 ? 1 : half;
  const int cols = col_part == 0 ? 1 : half;
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = C(position(row_part, i + 1), position(col_part, j + 1));
  }
  return out;
}

Matrix BlockDecomposition::s_block(int row_part, int col_part) const {
  const int rows = row_part == 0 ? 1 : half;
  const int cols = col_part == 0 ? 1 : half;
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = S(position(row_part, i + 1), position(col_part, j + 1));
  }
  return out;
}

void require_antisymmetric(const Vector& u, int n) {
  if (n < 3 || n % 2 == 0) throw InvalidArgument("exact linearized recovery needs odd N >= 3");
  if (u.size() != n) throw DimensionError("exact linearized recovery needs M = N");
  if (!u.allFinite()) throw InvalidArgument("non-finite frequency");
  const int mid = n / 2;
  const double tol = kTiny * std::max(1.0, u.cwiseAbs().maxCoeff());
  if (std::abs(u[mid]) > tol) throw InvalidArgument("center frequency must be 0 for an anti-symmetric set");
  for (int k = 1; k <= mid; ++k) {
    if (std::abs(u[mid - k] + u[mid + k]) > tol) {
      throw InvalidArgument("frequencies are not anti-symmetric at pair " + std::to_string(k));
    }
  }
}

BlockDecomposition build_blocks(const Vector& u, int n) {
  require_antisymmetric(u, n);
  BlockDecomposition b;
  b.n = n;
  b.half = n / 2;
  b.C.resize(n, n);
  b.S.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < n; ++p) {
      const double angle = kTwoPi * u[i] * centered_index(p, n) / n;
      b.C(i, p) = std::cos(angle);
      b.S(i, p) = -std::sin(angle);
    }
  }
  b.x1.resize(b.half);
  for (int k = 1; k <= b.half; ++k) b.x1[k - 1] = kTwoPi * k / n;
  return b;
}

BlockDecomposition decompose(const CVector& y, const Vector& u) {
  const int n = static_cast<int>(u.size());
  BlockDecomposition b = build_blocks(u, n);
  if (y.size() != n) throw DimensionError("measurement count must equal N");
  if (!y.allFinite()) throw InvalidArgument("measurements have non-finite entries");
  // Work on the unnormalized kernel so that the center row of C is all ones.
  const CVector ys = std::sqrt(static_cast<double>(n)) * y;
  const int h = b.half;
  b.a_minus.resize(h);
  b.a_plus.resize(h);
  b.b_minus.resize(h);
  b.b_plus.resize(h);
  for (int k = 1; k <= h; ++k) {
    const int lo = b.position(-1, k);
    const int hi = b.position(1, k);
    b.a_minus[k - 1] = ys[lo].real() - ys[h].real();
    b.a_plus[k - 1] = ys[hi].real() - ys[h].real();
    b.b_minus[k - 1] = ys[lo].imag();
    b.b_plus[k - 1] = -ys[hi].imag();
  }
  const double scale = std::max(ys.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const Vector a_diff = b.a_plus - b.a_minus;
  const Vector b_diff = b.b_plus - b.b_minus;
  for (int k = 0; k < h; ++k) {
    if (std::abs(b_diff[k]) < kTiny * scale) {
      throw DegenerateMeasurements("mirrored imaginary parts coincide at pair " + std::to_string(k + 1) +
                                   " (signal purely even or perturbations mirror each other)");
    }
  }
  if (a_diff.cwiseAbs().maxCoeff() < kTiny * scale) {
    throw DegenerateMeasurements("mirrored real parts coincide everywhere (signal purely odd)");
  }
  b.z = a_diff.cwiseQuotient(b_diff);
  return b;
}

CVector taylor_forward(const Vector& x, const Vector& u, const Vector& delta, int n) {
  if (x.size() != n) throw DimensionError("signal length does not match N");
  if (delta.size() != u.size()) throw DimensionError("need one perturbation per frequency");
  if (!x.allFinite() || !delta.allFinite()) throw InvalidArgument("non-finite input");
  const Grid grid = Grid::line(n);
  const CMatrix f = fourier_rows(Matrix(u), grid, 1.0 / std::sqrt(static_cast<double>(u.size())));
  const CVector fx = f * x;
  const CVector fpx = f * spatial_weights(n).cwiseProduct(x);
  return fx - Complex(0.0, 1.0) * delta.cast<Complex>().cwiseProduct(fpx);
}

CVector forward_linearized(const Vector& x, const Vector& delta, const Vector& u) {
  require_antisymmetric(u, static_cast<int>(x.size()));
  return taylor_forward(x, u, delta, static_cast<int>(x.size()));
}

LinearizedSolution solve_linearized_exact(const CVector& y, const Vector& u) {
  const BlockDecomposition b = decompose(y, u);
  const int n = b.n;
  const int h = b.half;
  const Matrix c1 = b.c_block(1, 1);
  const Matrix s1 = b.s_block(1, 1);
  const Matrix cr = 2.0 * (c1 - Matrix::Ones(h, h));

  Matrix hm(2 * h, 2 * h);
  hm.topLeftCorner(h, h) = cr;
  hm.topRightCorner(h, h) = 2.0 * b.z.asDiagonal() * s1;
  hm.bottomLeftCorner(h, h) = 2.0 * s1 * b.x1.asDiagonal();
  hm.bottomRightCorner(h, h) = -2.0 * b.z.asDiagonal() * c1 * b.x1.asDiagonal();
  Vector g = Vector::Zero(2 * h);
  g.head(h) = b.a_minus - b.z.cwiseProduct(b.b_minus);

  Eigen::JacobiSVD<Matrix> svd(hm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double rcond = sv[sv.size() - 1] / sv[0];
  if (!(rcond > kMinRcond)) {
    throw SingularH("reduced block system is singular (reciprocal condition " + std::to_string(rcond) + ")");
  }
  const Vector w = svd.solve(g);

  LinearizedSolution out;
  out.h_condition = 1.0 / rcond;
  out.e1 = w.head(h);
  out.o1 = w.tail(h);
  const double ys0 = std::sqrt(static_cast<double>(n)) * y[h].real();
  out.e0 = ys0 - 2.0 * out.e1.sum();
  out.x_hat.resize(n);
  out.x_hat[h] = out.e0;
  for (int k = 1; k <= h; ++k) {
    out.x_hat[b.position(1, k)] = out.e1[k - 1] + out.o1[k - 1];
    out.x_hat[b.position(-1, k)] = out.e1[k - 1] - out.o1[k - 1];
  }

  // Perturbations from whichever part of each row carries the larger lever arm:
  // Re ys = Cx + delta SXx, Im ys = Sx - delta CXx.
  const CVector ys = std::sqrt(static_cast<double>(n)) * y;
  const Vector xw = spatial_weights(n).cwiseProduct(out.x_hat);
  const Vector cx = b.C * out.x_hat;
  const Vector sx = b.S * out.x_hat;
  const Vector cxw = b.C * xw;
  const Vector sxw = b.S * xw;
  const double scale = std::max(ys.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  out.delta_hat.resize(n);
  out.delta_reliable.assign(static_cast<size_t>(n), true);
  for (int i = 0; i < n; ++i) {
    if (std::abs(cxw[i]) >= std::abs(sxw[i])) {
      out.delta_hat[i] = (sx[i] - ys[i].imag()) / cxw[i];
    } else {
      out.delta_hat[i] = (ys[i].real() - cx[i]) / sxw[i];
    }
    if (std::max(std::abs(cxw[i]), std::abs(sxw[i])) < kTiny * scale) {
      out.delta_hat[i] = 0.0;
      out.delta_reliable[static_cast<size_t>(i)] = false;
    }
  }
  return out;
}

CompressiveSolution solve_linearized_compressive(const CVector& y, const Vector& u, int n, double r,
                                                 const SolverConfig& solver_cfg, const AltMinConfig& cfg,
                                                 BasisKind basis) {
  if (u.size() > n) throw InvalidArgument("compressive linearized recovery needs M <= N");
  const Problem problem(y, FrequencySet::line(u, r), Grid::line(n), SparsityBasis(basis, Grid::line(n)),
                        PerturbationModel::independent(static_cast<int>(u.size()), r));
  cfg.validate(r);
  CompressiveSolution best;
  bool have = false;
  for (int i = 0; i < cfg.num_starts; ++i) {
    Vector beta0 = Vector::Zero(u.size());
    if (i > 0 && r > 0.0) {
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(i));
      std::uniform_real_distribution<double> draw(-r, r);
      for (Index p = 0; p < beta0.size(); ++p) beta0[p] = draw(rng);
    }
    const BaselineReport run = taylor_recovery(problem, solver_cfg, cfg, beta0);
    best.start_traces.push_back(run.objective_trace);
    if (!have || run.objective < best.objective) {
      best.coeffs = run.coeffs;
      best.x_hat = run.x_hat;
      best.delta_hat = run.delta_hat;
      best.objective = run.objective;
      best.converged = run.converged;
      best.start_index = i;
      have = true;
    }
  }
  // The refinement is kept only when it lowers the same objective the
  // alternation minimizes.
  if (cfg.polish && have) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(u.size()));
    const CMatrix f = fourier_rows(u, problem.grid, scale);
    const CMatrix d = Complex(0.0, -1.0) * (f * spatial_weights(n).asDiagonal());
    Vector coeffs = best.coeffs;
    Vector delta = best.delta_hat;
    if (polish_on_support(problem, f, d, r, coeffs, delta)) {
      const double j = taylor_objective(problem, coeffs, delta, solver_cfg.lambda);
      if (j < best.objective) {
        best.coeffs = coeffs;
        best.x_hat = problem.basis.synthesize(coeffs);
        best.delta_hat = delta;
        best.objective = j;
        best.polished = true;
        best.start_traces[static_cast<std::size_t>(best.start_index)].push_back(j);
      }
    }
  }
  return best;
}

}  // namespace blindcal
