#include "blindcal/bases.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace blindcal {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}  // namespace

bool is_dyadic(int n) { return n >= 1 && (n & (n - 1)) == 0; }

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Canonical: return "canonical";
    case BasisKind::Haar1D: return "haar1d";
    case BasisKind::Haar2D: return "haar2d";
  }
  return "unknown";
}

BasisKind parse_basis_kind(const std::string& name) {
  if (name == "canonical") return BasisKind::Canonical;
  if (name == "haar1d" || name == "haar") return BasisKind::Haar1D;
  if (name == "haar2d") return BasisKind::Haar2D;
  throw InvalidArgument("unknown basis '" + name + "' (expected canonical, haar1d or haar2d)");
}

void haar_forward(double* data, int n, int stride) {
  std::vector<double> tmp(static_cast<size_t>(n));
  for (int len = n; len > 1; len /= 2) {
    const int half = len / 2;
    for (int i = 0; i < half; ++i) {
      const double a = data[(2 * i) * stride];
      const double b = data[(2 * i + 1) * stride];
      tmp[static_cast<size_t>(i)] = (a + b) * kInvSqrt2;
      tmp[static_cast<size_t>(half + i)] = (a - b) * kInvSqrt2;
    }
    for (int i = 0; i < len; ++i) data[i * stride] = tmp[static_cast<size_t>(i)];
  }
}

void haar_inverse(double* data, int n, int stride) {
  std::vector<double> tmp(static_cast<size_t>(n));
  for (int len = 2; len <= n; len *= 2) {
    const int half = len / 2;
    for (int i = 0; i < half; ++i) {
      const double s = data[i * stride];
      const double d = data[(half + i) * stride];
      tmp[static_cast<size_t>(2 * i)] = (s + d) * kInvSqrt2;
      tmp[static_cast<size_t>(2 * i + 1)] = (s - d) * kInvSqrt2;
    }
    for (int i = 0; i < len; ++i) data[i * stride] = tmp[static_cast<size_t>(i)];
  }
}

SparsityBasis::SparsityBasis(BasisKind kind, Grid grid) : kind_(kind), grid_(grid) {
  grid_.validate();
  switch (kind_) {
    case BasisKind::Canonical:
      break;
    case BasisKind::Haar1D:
      if (grid_.ndim != 1) throw InvalidArgument("haar1d basis needs a 1D grid");
      if (!is_dyadic(grid_.n1)) {
        throw InvalidArgument("haar1d basis needs a dyadic length, got " + std::to_string(grid_.n1));
      }
      break;
    case BasisKind::Haar2D:
      if (grid_.ndim != 2) throw InvalidArgument("haar2d basis needs a 2D grid");
      if (!is_dyadic(grid_.n1) || !is_dyadic(grid_.n2)) {
        throw InvalidArgument("haar2d basis needs dyadic extents, got " + std::to_string(grid_.n1) +
                              "x" + std::to_string(grid_.n2));
      }
      break;
  }
}

void SparsityBasis::check(const Vector& v) const {
  if (v.size() != grid_.size()) {
    throw DimensionError("basis of size " + std::to_string(grid_.size()) + " applied to vector of size " +
                         std::to_string(v.size()));
  }
}

Vector SparsityBasis::synthesize(const Vector& theta) const {
  check(theta);
  Vector x = theta;
  if (kind_ == BasisKind::Haar1D) {
    haar_inverse(x.data(), grid_.n1);
  } else if (kind_ == BasisKind::Haar2D) {
    for (int q = 0; q < grid_.n2; ++q) haar_inverse(x.data() + static_cast<Index>(q) * grid_.n1, grid_.n1);
    for (int p = 0; p < grid_.n1; ++p) haar_inverse(x.data() + p, grid_.n2, grid_.n1);
  }
  return x;
}

Vector SparsityBasis::analyze(const Vector& x) const {
  check(x);
  Vector theta = x;
  if (kind_ == BasisKind::Haar1D) {
    haar_forward(theta.data(), grid_.n1);
  } else if (kind_ == BasisKind::Haar2D) {
    for (int p = 0; p < grid_.n1; ++p) haar_forward(theta.data() + p, grid_.n2, grid_.n1);
    for (int q = 0; q < grid_.n2; ++q) haar_forward(theta.data() + static_cast<Index>(q) * grid_.n1, grid_.n1);
  }
  return theta;
}

CMatrix SparsityBasis::apply_right(const CMatrix& A) const {
  if (A.cols() != grid_.size()) throw DimensionError("matrix columns do not match basis size");
  if (kind_ == BasisKind::Canonical) return A;
  // Row i of A Psi is (Psi^T a_i^T)^T, i.e. the analysis transform of the row.
  CMatrix out(A.rows(), A.cols());
  Vector re(A.cols());
  Vector im(A.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    re = A.row(i).real().transpose();
    im = A.row(i).imag().transpose();
    const Vector ar = analyze(re);
    const Vector ai = analyze(im);
    for (Index j = 0; j < A.cols(); ++j) out(i, j) = Complex(ar[j], ai[j]);
  }
  return out;
}

Matrix SparsityBasis::dense() const {
  const int n = grid_.size();
  Matrix psi(n, n);
  Vector e = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    psi.col(j) = synthesize(e);
    e[j] = 0.0;
  }
  return psi;
}

}  // namespace blindcal
