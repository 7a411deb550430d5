#pragma once

#include <array>
#include <vector>

#include "blindcal/types.hpp"

namespace blindcal {

/// Dense nonuniform Fourier matrix, entry (i, l) = exp(-i 2 pi f_i . l / N) / sqrt(M)
/// over centered spatial indices.
struct FourierMatrix {
  CMatrix entries;
  Grid grid;
  /// Centered spatial index (l1, l2) of every column.
  std::vector<std::array<int, 2>> index_map;
};

/// Largest number of unknowns the dense paths accept.
inline constexpr int kDenseLimit = 4096;

/// Centered index map of a grid, one entry per storage position.
std::vector<std::array<int, 2>> centered_index_map(const Grid& grid);

/// Rows of the Fourier operator evaluated at the given absolute frequencies
/// (one row per frequency), each scaled by `scale`.
CMatrix fourier_rows(const Matrix& frequencies, const Grid& grid, double scale);

FourierMatrix build_matrix(const FrequencySet& freq, const Grid& grid);
FourierMatrix build_matrix(const FrequencySet& freq, int n);

/// Inner product of one Fourier row at absolute frequency `f` with `x`, scaled
/// by `scale`. Zero entries of x are skipped on 1D grids; 2D grids use the
/// separable factorization of the kernel.
Complex row_response(const double* f, const Vector& x, const Grid& grid, double scale);

/// y = F(u + delta) x without materializing F.
CVector forward(const Vector& x, const FrequencySet& freq, const Grid& grid);
CVector forward(const Vector& x, const FrequencySet& freq, int n);

/// Conjugate-transpose apply: x = F(u + delta)^H y.
CVector adjoint(const CVector& y, const FrequencySet& freq, const Grid& grid);
CVector adjoint(const CVector& y, const FrequencySet& freq, int n);

/// Diagonal of X: X_ll = 2 pi l / N over the centered index.
Vector spatial_weights(int n);

/// F' = F X at delta = 0 (1D). d/d(delta_i) of row i equals -i F'_i.
FourierMatrix derivative_matrix(const Vector& u, int n);

/// 2D transform of an n1 x n2 image at the perturbed frequencies of `freq`
/// (dense path, n1 * n2 <= kDenseLimit).
CVector forward_2d(const Matrix& image, const FrequencySet& freq);

/// v(l) = exp(-i 2 pi shift l / N): multiplying x by v shifts every frequency by
/// `shift`.
CVector modulation(int n, double shift);

}  // namespace blindcal
