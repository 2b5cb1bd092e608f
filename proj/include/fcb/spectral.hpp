#pragma once

#include <string>
#include <vector>

#include "fcb/discretize.hpp"

namespace fcb {

/// Eigenvalues below this are treated as kernel.
inline constexpr double kKernelThreshold = 1e-10;

struct TraceValue {
  double value = 0.0;
  /// Weyl estimate of the contribution of eigenvalues above lambda_cut.
  double tail_bound = 0.0;
};

struct TraceSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> tail_bound;
  std::string pair_id;

  std::size_t size() const { return times.size(); }
};

/// 2*pi * sum of w_i times the dual cell lengths over all grid nodes.
double discrete_area(const Eigensystem& sys);

/// Estimate of sum_{lambda > cut} e^{-lambda t} for a spectrum whose counting function
/// grows like area * lambda / (4 pi).
double weyl_tail(double area, double lambda_cut, double t);

/// sum of multiplicity * e^{-lambda t} over the stored spectrum. Throws on t <= 0.
TraceValue heat_trace(const Eigensystem& sys, double t);

/// Mode-matched relative trace Tr(e^{-t A} - e^{-t B}) summed in ascending mode, then index.
/// Throws std::invalid_argument if the systems are not compatible.
TraceSeries relative_trace_series(const Eigensystem& a, const Eigensystem& b, const std::vector<double>& times);
TraceValue relative_trace(const Eigensystem& a, const Eigensystem& b, double t);

/// n log-spaced times on [t0, t1].
std::vector<double> log_time_grid(double t0, double t1, int n);

/// Smallest eigenvalue above the kernel threshold. Throws if there is none.
double spectral_gap(const Eigensystem& sys);
double spectral_gap(const std::vector<double>& eigenvalues);
/// Number of stored eigenvalues below the kernel threshold, with multiplicity.
std::size_t kernel_dimension(const Eigensystem& sys);

/// A point of the cylinder (s, theta).
struct CylinderPoint {
  double s = 0.0;
  double theta = 0.0;
};

struct OffDiagonalResult {
  double value = 0.0;
  double tail_bound = 0.0;
  /// Axial distance from the region to the nearer of y, y'.
  double distance = 0.0;
};

/// Integral over region x S^1 of |K(t, x, y) K(t, x, y')| dvol(x), with K the mode-sum heat
/// kernel built from stored eigenvectors. y and y' are moved to the nearest grid nodes.
/// Throws if vectors are missing, y or y' lies inside the region, or the truncation tail
/// exceeds 1e-6 of the value.
OffDiagonalResult offdiag_l2_integral(const Eigensystem& sys, const MetricProfile& profile, double t,
                                      const Interval& region, CylinderPoint y, CylinderPoint y_prime,
                                      int theta_points = 64);

}  // namespace fcb
