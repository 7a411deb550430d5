#include "blindcal/sqlasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace blindcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Smallest t in [0, t_max] with a2 t^2 + a1 t + a0 <= 0, given a0 > 0.
// Returns +inf when the quadratic stays positive on the interval.
double first_crossing(double a2, double a1, double a0, double t_max) {
  if (a0 <= 0.0) return 0.0;
  const double scale = std::abs(a2) * t_max * t_max + std::abs(a1) * t_max + a0;
  if (std::abs(a2) * t_max * t_max <= 1e-15 * scale) {
    if (a1 >= 0.0) return kInf;
    const double t = -a0 / a1;
    return t <= t_max ? t : kInf;
  }
  const double disc = a1 * a1 - 4.0 * a2 * a0;
  if (disc < 0.0) return kInf;
  const double root = std::sqrt(disc);
  const double q = -0.5 * (a1 + (a1 >= 0.0 ? root : -root));
  double t1 = q / a2;
  double t2 = q != 0.0 ? a0 / q : kInf;
  if (t1 > t2) std::swap(t1, t2);
  for (double t : {t1, t2}) {
    if (t >= 0.0 && t <= t_max) return t;
  }
  return kInf;
}

void require_system(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size()) {
    throw DimensionError("matrix has " + std::to_string(A.rows()) + " rows but data has " +
                         std::to_string(b.size()) + " entries");
  }
  if (A.cols() < 1) throw DimensionError("matrix has no columns");
  if (!A.allFinite() || !b.allFinite()) throw InvalidArgument("system has non-finite entries");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(smoothing_eps >= 0.0)) throw InvalidArgument("smoothing_eps must be >= 0");
}

RealSystem real_stack(const CMatrix& A, const CVector& y) {
  if (A.rows() != y.size()) throw DimensionError("matrix rows do not match measurement count");
  const Index m = A.rows();
  RealSystem out{Matrix(2 * m, A.cols()), Vector(2 * m)};
  out.A.topRows(m) = A.real();
  out.A.bottomRows(m) = A.imag();
  out.b.head(m) = y.real();
  out.b.tail(m) = y.imag();
  return out;
}

double sqlasso_objective(const Matrix& A, const Vector& b, double lambda, const Vector& x) {
  return x.lpNorm<1>() + lambda * (b - A * x).norm();
}

double sqlasso_objective(const CMatrix& A, const CVector& y, double lambda, const Vector& x) {
  return x.lpNorm<1>() + lambda * (y - A * x.cast<Complex>()).norm();
}

SolveReport solve_sqlasso(const Matrix& A, const Vector& b, const SolverConfig& cfg) {
  cfg.validate();
  require_system(A, b);
  const Index m = A.rows();
  const Index n = A.cols();
  const double lambda = cfg.lambda;
  const double bnorm = b.norm();

  SolveReport rep;
  rep.x_hat = Vector::Zero(n);
  rep.objective = lambda * bnorm;
  rep.objective_trace.push_back(rep.objective);

  const Vector atb = A.transpose() * b;
  Index first = 0;
  const double tau0 = bnorm > 0.0 ? atb.cwiseAbs().maxCoeff(&first) : 0.0;
  if (bnorm == 0.0 || lambda * tau0 <= bnorm) {
    // x = 0 satisfies the optimality conditions.
    rep.converged = true;
    rep.kkt_violation = kkt_residual(A, b, lambda, rep.x_hat, cfg.smoothing_eps).violation;
    return rep;
  }

  // Active set in insertion order; Aa and G hold its columns and Gram block.
  std::vector<Index> active;
  std::vector<char> is_active(static_cast<size_t>(n), 0);
  Vector signs(n);
  Matrix Aa(m, std::min<Index>(n, m + 1));
  Matrix G(Aa.cols(), Aa.cols());

  auto add_column = [&](Index j, double s) {
    const Index k = static_cast<Index>(active.size());
    if (k == Aa.cols()) return false;
    Aa.col(k) = A.col(j);
    if (k > 0) {
      const Vector g = Aa.leftCols(k).transpose() * A.col(j);
      G.block(0, k, k, 1) = g;
      G.block(k, 0, 1, k) = g.transpose();
    }
    G(k, k) = A.col(j).squaredNorm();
    signs[k] = s;
    active.push_back(j);
    is_active[static_cast<size_t>(j)] = 1;
    return true;
  };
  auto remove_position = [&](Index p) {
    const Index k = static_cast<Index>(active.size());
    const Index last = k - 1;
    if (p != last) {
      Aa.col(p).swap(Aa.col(last));
      G.block(0, p, k, 1).swap(G.block(0, last, k, 1));
      G.block(p, 0, 1, k).swap(G.block(last, 0, 1, k));
      std::swap(signs[p], signs[last]);
      std::swap(active[static_cast<size_t>(p)], active[static_cast<size_t>(last)]);
    }
    is_active[static_cast<size_t>(active.back())] = 0;
    active.pop_back();
  };

  add_column(first, sign_of(atb[first]));
  double tau = tau0;
  Index last_removed = -1;
  Vector xa;
  Vector r = b;
  bool finished = false;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    rep.iterations = iter + 1;
    const Index k = static_cast<Index>(active.size());
    Eigen::LLT<Matrix> llt(G.topLeftCorner(k, k));
    if (llt.info() != Eigen::Success) break;

    // Path point at tau for the current signs, then the descent direction.
    Vector rhs(k);
    for (Index a = 0; a < k; ++a) rhs[a] = atb[active[static_cast<size_t>(a)]] - tau * signs[a];
    xa = llt.solve(rhs);
    const Vector v = llt.solve(signs.head(k));
    if (!xa.allFinite() || !v.allFinite()) break;
    r = b - Aa.leftCols(k) * xa;
    const Vector c = A.transpose() * r;
    const Vector w = Aa.leftCols(k) * v;
    const Vector q = A.transpose() * w;

    for (Index a = 0; a < k; ++a) rep.x_hat[active[static_cast<size_t>(a)]] = xa[a];
    rep.objective_trace.push_back(xa.lpNorm<1>() + lambda * r.norm());

    // Next breakpoint along decreasing tau (step t = tau_old - tau_new).
    double t_enter = kInf;
    Index j_enter = -1;
    for (Index j = 0; j < n; ++j) {
      if (is_active[static_cast<size_t>(j)] || j == last_removed) continue;
      const double d1 = 1.0 - q[j];
      const double d2 = 1.0 + q[j];
      if (d1 > 1e-14) {
        const double t = std::max(0.0, (tau - c[j]) / d1);
        if (t < t_enter) { t_enter = t; j_enter = j; }
      }
      if (d2 > 1e-14) {
        const double t = std::max(0.0, (tau + c[j]) / d2);
        if (t < t_enter) { t_enter = t; j_enter = j; }
      }
    }
    double t_leave = kInf;
    Index p_leave = -1;
    for (Index a = 0; a < k; ++a) {
      // Only coefficients moving toward zero can leave. A column that just
      // entered sits at roundoff level and must not be dropped on its sign.
      if (v[a] * signs[a] >= 0.0) continue;
      const double t = -xa[a] / v[a];
      if (t > 0.0 && t < t_leave) { t_leave = t; p_leave = a; }
    }
    const double t_step = std::min({t_enter, t_leave, tau});

    // Square-root stationarity: ||r - t w|| = lambda (tau - t).
    const double lam2 = lambda * lambda;
    const double a2 = lam2 - w.squaredNorm();
    const double a1 = 2.0 * (r.dot(w) - lam2 * tau);
    const double a0 = lam2 * tau * tau - r.squaredNorm();
    const double t_stop = first_crossing(a2, a1, a0, t_step);
    if (t_stop <= t_step) {
      xa += t_stop * v;
      finished = true;
      break;
    }

    xa += t_step * v;
    if (t_step >= tau) {
      // Reached the end of the path with the residual still inside the
      // lambda * tau ball: the interpolating solution is optimal.
      tau = 0.0;
      finished = true;
      break;
    }
    tau -= t_step;
    for (Index a = 0; a < k; ++a) rep.x_hat[active[static_cast<size_t>(a)]] = xa[a];

    if (t_leave <= t_enter) {
      rep.x_hat[active[static_cast<size_t>(p_leave)]] = 0.0;
      last_removed = active[static_cast<size_t>(p_leave)];
      remove_position(p_leave);
    } else {
      const double cj = c[j_enter] - t_step * q[j_enter];
      if (!add_column(j_enter, sign_of(cj))) break;
      last_removed = -1;
    }
    if (active.empty()) break;
  }

  const Index k = static_cast<Index>(active.size());
  rep.x_hat.setZero();
  for (Index a = 0; a < k && a < xa.size(); ++a) rep.x_hat[active[static_cast<size_t>(a)]] = xa[a];
  rep.converged = finished;
  rep.objective = sqlasso_objective(A, b, lambda, rep.x_hat);
  rep.objective_trace.push_back(rep.objective);
  rep.kkt_violation = kkt_residual(A, b, lambda, rep.x_hat, cfg.smoothing_eps).violation;
  return rep;
}

SolveReport solve_sqlasso(const CMatrix& A, const CVector& y, const SolverConfig& cfg) {
  const RealSystem sys = real_stack(A, y);
  return solve_sqlasso(sys.A, sys.b, cfg);
}

SolveReport solve_bp(const CMatrix& A, const CVector& y, const SolverConfig& cfg) {
  if (A.rows() != y.size()) {
    throw DimensionError("basis pursuit: matrix has " + std::to_string(A.rows()) +
                         " rows but " + std::to_string(y.size()) + " measurements");
  }
  return solve_sqlasso(A, y, cfg);
}

KktCertificate kkt_residual(const Matrix& A, const Vector& b, double lambda, const Vector& x_hat,
                            double smoothing_eps) {
  require_system(A, b);
  if (x_hat.size() != A.cols()) throw DimensionError("iterate length does not match matrix columns");
  const Vector rho = b - A * x_hat;
  const double rn = rho.norm();
  KktCertificate out;
  if (rn > smoothing_eps * std::max(1.0, b.norm())) {
    const Vector g = lambda * (A.transpose() * rho) / rn;
    double v = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
      v = std::max(v, std::abs(g[i]) - 1.0);
      if (x_hat[i] != 0.0) v = std::max(v, std::abs(g[i] - sign_of(x_hat[i])));
    }
    out.violation = v;
    return out;
  }

  // Zero residual: need z with ||z|| <= 1, lambda A_S^T z = sign(x_S) and
  // |lambda a_j^T z| <= 1 off the support. The least-norm z is checked.
  out.zero_residual = true;
  std::vector<Index> support;
  for (Index i = 0; i < x_hat.size(); ++i) {
    if (x_hat[i] != 0.0) support.push_back(i);
  }
  if (support.empty()) return out;
  Matrix As(A.rows(), static_cast<Index>(support.size()));
  Vector s(static_cast<Index>(support.size()));
  for (size_t a = 0; a < support.size(); ++a) {
    As.col(static_cast<Index>(a)) = A.col(support[a]);
    s[static_cast<Index>(a)] = sign_of(x_hat[support[a]]);
  }
  const Vector z = As * (As.transpose() * As).ldlt().solve(s) / lambda;
  const Vector g = lambda * (A.transpose() * z);
  double v = std::max(0.0, z.norm() - 1.0);
  for (Index i = 0; i < g.size(); ++i) {
    v = std::max(v, std::abs(g[i]) - 1.0);
    if (x_hat[i] != 0.0) v = std::max(v, std::abs(g[i] - sign_of(x_hat[i])));
  }
  out.violation = std::isfinite(v) ? v : kInf;
  return out;
}

KktCertificate kkt_residual(const CMatrix& A, const CVector& y, double lambda, const Vector& x_hat,
                            double smoothing_eps) {
  const RealSystem sys = real_stack(A, y);
  return kkt_residual(sys.A, sys.b, lambda, x_hat, smoothing_eps);
}

}  // namespace blindcal
