#include "blindcal/fourier.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace blindcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

void require_grid_match(const FrequencySet& freq, const Grid& grid) {
  grid.validate();
  freq.validate();
  if (freq.dims() != grid.ndim) {
    throw DimensionError("frequency set has " + std::to_string(freq.dims()) +
                         " axes but grid has " + std::to_string(grid.ndim));
  }
}

double row_scale(Index m) { return 1.0 / std::sqrt(static_cast<double>(m)); }

}  // namespace

void Grid::validate() const {
  if (ndim != 1 && ndim != 2) throw InvalidArgument("grid must be 1D or 2D");
  if (n1 < 1 || n2 < 1) throw InvalidArgument("grid extents must be positive");
  if (ndim == 1 && n2 != 1) throw InvalidArgument("1D grid must have n2 == 1");
}

FrequencySet::FrequencySet(Matrix base, double bound)
    : u(std::move(base)), delta(Matrix::Zero(u.rows(), u.cols())), r(bound) {}

FrequencySet::FrequencySet(Matrix base, Matrix perturbation, double bound)
    : u(std::move(base)), delta(std::move(perturbation)), r(bound) {}

FrequencySet FrequencySet::line(const Vector& base, double bound) {
  return FrequencySet(Matrix(base), bound);
}

FrequencySet FrequencySet::with_delta(Matrix perturbation) const {
  FrequencySet out(u, std::move(perturbation), r);
  return out;
}

void FrequencySet::validate() const {
  if (u.rows() < 1) throw InvalidArgument("frequency set needs at least one measurement");
  if (u.cols() != 1 && u.cols() != 2) throw InvalidArgument("frequencies must have 1 or 2 axes");
  if (delta.rows() != u.rows() || delta.cols() != u.cols()) {
    throw DimensionError("perturbation shape does not match base frequencies");
  }
  if (!u.allFinite() || !delta.allFinite()) throw InvalidArgument("non-finite frequency");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("perturbation bound r must be >= 0");
  // Small slack absorbs the rounding of parameter-to-frequency maps.
  const double slack = 1e-12 * std::max(1.0, r);
  if (delta.size() > 0 && delta.cwiseAbs().maxCoeff() > r + slack) {
    throw InvalidArgument("perturbation exceeds bound r");
  }
}

std::vector<std::array<int, 2>> centered_index_map(const Grid& grid) {
  std::vector<std::array<int, 2>> map(static_cast<size_t>(grid.size()));
  for (int i2 = 0; i2 < grid.n2; ++i2) {
    for (int i1 = 0; i1 < grid.n1; ++i1) {
      map[static_cast<size_t>(i1 + grid.n1 * i2)] = {
          centered_index(i1, grid.n1), grid.ndim == 2 ? centered_index(i2, grid.n2) : 0};
    }
  }
  return map;
}

CMatrix fourier_rows(const Matrix& frequencies, const Grid& grid, double scale) {
  grid.validate();
  if (frequencies.cols() != grid.ndim) throw DimensionError("frequency axes do not match grid");
  if (!frequencies.allFinite()) throw InvalidArgument("non-finite frequency");
  const Index m = frequencies.rows();
  const auto map = centered_index_map(grid);
  CMatrix out(m, grid.size());
  for (Index i = 0; i < m; ++i) {
    const double f1 = frequencies(i, 0);
    const double f2 = grid.ndim == 2 ? frequencies(i, 1) : 0.0;
    for (Index p = 0; p < grid.size(); ++p) {
      const auto& l = map[static_cast<size_t>(p)];
      double angle = -kTwoPi * f1 * l[0] / grid.n1;
      if (grid.ndim == 2) angle += -kTwoPi * f2 * l[1] / grid.n2;
      out(i, p) = scale * unit_phase(angle);
    }
  }
  return out;
}

FourierMatrix build_matrix(const FrequencySet& freq, const Grid& grid) {
  require_grid_match(freq, grid);
  FourierMatrix out;
  out.grid = grid;
  out.index_map = centered_index_map(grid);
  out.entries = fourier_rows(freq.effective(), grid, row_scale(freq.size()));
  return out;
}

FourierMatrix build_matrix(const FrequencySet& freq, int n) {
  return build_matrix(freq, Grid::line(n));
}

Complex row_response(const double* f, const Vector& x, const Grid& grid, double scale) {
  if (grid.ndim == 1) {
    const int n = grid.n1;
    Complex acc(0.0, 0.0);
    for (int p = 0; p < n; ++p) {
      const double v = x[p];
      if (v == 0.0) continue;
      acc += v * unit_phase(-kTwoPi * f[0] * centered_index(p, n) / n);
    }
    return scale * acc;
  }
  // Separable kernel: sum_{l1,l2} e1(l1) e2(l2) x(l1,l2) = e1^T X e2.
  const int n1 = grid.n1;
  const int n2 = grid.n2;
  Complex acc(0.0, 0.0);
  thread_local CVector e1;
  e1.resize(n1);
  for (int p = 0; p < n1; ++p) e1[p] = unit_phase(-kTwoPi * f[0] * centered_index(p, n1) / n1);
  for (int q = 0; q < n2; ++q) {
    Complex col(0.0, 0.0);
    const double* xc = x.data() + static_cast<Index>(q) * n1;
    for (int p = 0; p < n1; ++p) col += e1[p] * xc[p];
    acc += col * unit_phase(-kTwoPi * f[1] * centered_index(q, n2) / n2);
  }
  return scale * acc;
}

CVector forward(const Vector& x, const FrequencySet& freq, const Grid& grid) {
  require_grid_match(freq, grid);
  if (x.size() != grid.size()) {
    throw DimensionError("signal length " + std::to_string(x.size()) + " does not match grid size " +
                         std::to_string(grid.size()));
  }
  if (!x.allFinite()) throw InvalidArgument("signal has non-finite entries");
  const Matrix f = freq.effective();
  const double scale = row_scale(freq.size());
  CVector y(freq.size());
  double row[2] = {0.0, 0.0};
  for (Index i = 0; i < freq.size(); ++i) {
    row[0] = f(i, 0);
    if (grid.ndim == 2) row[1] = f(i, 1);
    y[i] = row_response(row, x, grid, scale);
  }
  return y;
}

CVector forward(const Vector& x, const FrequencySet& freq, int n) {
  return forward(x, freq, Grid::line(n));
}

CVector adjoint(const CVector& y, const FrequencySet& freq, const Grid& grid) {
  require_grid_match(freq, grid);
  if (y.size() != freq.size()) throw DimensionError("measurement length does not match frequency count");
  const Matrix f = freq.effective();
  const auto map = centered_index_map(grid);
  const double scale = row_scale(freq.size());
  CVector x = CVector::Zero(grid.size());
  for (Index i = 0; i < freq.size(); ++i) {
    const double f1 = f(i, 0);
    const double f2 = grid.ndim == 2 ? f(i, 1) : 0.0;
    for (Index p = 0; p < grid.size(); ++p) {
      const auto& l = map[static_cast<size_t>(p)];
      double angle = -kTwoPi * f1 * l[0] / grid.n1;
      if (grid.ndim == 2) angle += -kTwoPi * f2 * l[1] / grid.n2;
      x[p] += std::conj(unit_phase(angle)) * y[i];
    }
  }
  return scale * x;
}

CVector adjoint(const CVector& y, const FrequencySet& freq, int n) {
  return adjoint(y, freq, Grid::line(n));
}

Vector spatial_weights(int n) {
  if (n < 1) throw InvalidArgument("length must be positive");
  Vector w(n);
  for (int p = 0; p < n; ++p) w[p] = kTwoPi * centered_index(p, n) / n;
  return w;
}

FourierMatrix derivative_matrix(const Vector& u, int n) {
  FourierMatrix out = build_matrix(FrequencySet::line(u), n);
  out.entries = out.entries * spatial_weights(n).asDiagonal();
  return out;
}

CVector forward_2d(const Matrix& image, const FrequencySet& freq) {
  const Grid grid = Grid::image(static_cast<int>(image.rows()), static_cast<int>(image.cols()));
  if (grid.size() > kDenseLimit) {
    throw InvalidArgument("image has " + std::to_string(grid.size()) + " pixels; dense limit is " +
                          std::to_string(kDenseLimit));
  }
  const Vector x = Eigen::Map<const Vector>(image.data(), image.size());
  return forward(x, freq, grid);
}

CVector modulation(int n, double shift) {
  CVector v(n);
  for (int p = 0; p < n; ++p) v[p] = unit_phase(-kTwoPi * shift * centered_index(p, n) / n);
  return v;
}

}  // namespace blindcal
