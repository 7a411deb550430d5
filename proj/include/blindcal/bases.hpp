#pragma once

#include <string>

#include "blindcal/types.hpp"

namespace blindcal {

enum class BasisKind { Canonical, Haar1D, Haar2D };

std::string to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);

/// Orthonormal sparsifying basis Psi. Coefficients theta and signal x relate as
/// x = Psi theta, theta = Psi^T x. Haar kinds use orthonormal filters at full
/// decomposition depth and require dyadic extents.
class SparsityBasis {
 public:
  SparsityBasis(BasisKind kind, Grid grid);

  static SparsityBasis canonical(const Grid& grid) { return {BasisKind::Canonical, grid}; }

  BasisKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  int size() const { return grid_.size(); }

  Vector synthesize(const Vector& theta) const;
  Vector analyze(const Vector& x) const;

  /// A Psi for a sensing matrix A with one row per measurement.
  CMatrix apply_right(const CMatrix& A) const;
  /// Dense Psi (columns are the basis vectors); desk-scale use only.
  Matrix dense() const;

 private:
  void check(const Vector& v) const;

  BasisKind kind_;
  Grid grid_;
};

/// In-place full-depth orthonormal Haar analysis/synthesis of a dyadic-length
/// strided sequence.
void haar_forward(double* data, int n, int stride = 1);
void haar_inverse(double* data, int n, int stride = 1);

bool is_dyadic(int n);

}  // namespace blindcal
