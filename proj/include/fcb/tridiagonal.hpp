#pragma once

#include <span>
#include <vector>

namespace fcb {

/// Symmetric-definite pencil (K, M) with K symmetric tridiagonal and M positive diagonal.
struct TridiagonalPencil {
  std::span<const double> diag;  // K_ii, size n
  std::span<const double> off;   // K_{i,i+1}, size n-1
  std::span<const double> mass;  // M_ii, size n

  std::size_t size() const { return diag.size(); }
};

/// Number of generalized eigenvalues strictly below sigma (inertia of K - sigma M).
int sturm_count(const TridiagonalPencil& pencil, double sigma);

struct BisectionTolerance {
  double relative = 4e-15;
  double absolute = 1e-13;
};

/// All generalized eigenvalues in [lo, hi), ascending, by batched bisection on the
/// inertia of K - sigma M. The pencil is never symmetrized, so tiny mass entries
/// do not degrade accuracy of the small eigenvalues.
std::vector<double> pencil_eigenvalues(const TridiagonalPencil& pencil, double lo, double hi,
                                       BisectionTolerance tol = {});

/// Mass-orthonormal eigenvectors for the given (ascending) eigenvalues by inverse
/// iteration, with re-orthogonalisation inside clusters. Column-major, n x k.
/// `residuals` receives ||K u - lambda M u|| / max(lambda, 1) per vector when non-null.
std::vector<double> pencil_eigenvectors(const TridiagonalPencil& pencil, std::span<const double> eigenvalues,
                                        std::vector<double>* residuals = nullptr);

}  // namespace fcb
