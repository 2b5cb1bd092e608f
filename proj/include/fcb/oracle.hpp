#pragma once

#include <vector>

#include "fcb/discretize.hpp"

namespace fcb {

/// Tensor grid for the two-dimensional check: the axial grid times a periodic theta grid.
struct Grid2D {
  Grid axial;
  int theta_points = 64;
};

struct Oracle2DOptions {
  double shift = -0.01;
  int extra_vectors = 20;
  double residual_target = 1e-8;
  int max_iterations = 400;
};

struct Oracle2DResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  int iterations = 0;
  std::size_t unknowns = 0;
};

/// Smallest `count` eigenvalues of the five-point finite-volume discretization of
/// e^{-2 phi}(-d_s^2 - d_theta^2) with the axial grid's end conditions. A CapRule end is
/// a single node shared by the whole end ring. Uses shift-invert block subspace iteration
/// with a sparse LDL^T factorization. Throws std::runtime_error on non-convergence.
Oracle2DResult low_eigenvalues_2d(const MetricProfile& profile, const Grid2D& grid, int count,
                                  const Oracle2DOptions& options = {});

/// det(a, b) = prod a_i / prod b_i, the value exp(-zeta'(0)) for zeta(s) = sum a_i^{-s} - b_i^{-s}.
/// Uses exact rational arithmetic for lists shorter than 20 entries.
/// Throws std::invalid_argument on unequal lengths or non-positive entries.
double finite_matrix_relative_det(const std::vector<double>& a, const std::vector<double>& b);

/// log of finite_matrix_relative_det, accurate when the determinant itself would overflow.
double finite_matrix_log_relative_det(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fcb
