#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace blindcal {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Spatial sampling grid of the unknown signal: a line of n1 samples or an
/// n1 x n2 image stored column-major (index = i1 + n1 * i2).
struct Grid {
  int ndim = 1;
  int n1 = 1;
  int n2 = 1;

  static Grid line(int n) { return Grid{1, n, 1}; }
  static Grid image(int rows, int cols) { return Grid{2, rows, cols}; }

  int size() const { return n1 * n2; }
  int extent(int axis) const { return axis == 0 ? n1 : n2; }
  void validate() const;
};

/// Centered spatial index of storage position `pos` along an axis of length n:
/// {-(n-1)/2 .. (n-1)/2} for odd n, {-n/2 .. n/2-1} for even n.
inline int centered_index(int pos, int n) { return pos - n / 2; }

/// Base frequencies (in DFT-bin units) with their perturbations. One row per
/// measurement; one column per frequency axis.
struct FrequencySet {
  Matrix u;
  Matrix delta;
  double r = 0.0;

  FrequencySet() = default;
  FrequencySet(Matrix base, double bound);
  FrequencySet(Matrix base, Matrix perturbation, double bound);

  static FrequencySet line(const Vector& base, double bound = 0.0);

  Index size() const { return u.rows(); }
  int dims() const { return static_cast<int>(u.cols()); }
  /// u + delta
  Matrix effective() const { return u + delta; }
  /// Copy with the perturbations replaced.
  FrequencySet with_delta(Matrix perturbation) const;
  void validate() const;
};

}  // namespace blindcal
