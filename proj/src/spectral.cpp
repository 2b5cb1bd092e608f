#include "fcb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fcb {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("heat trace needs t > 0");
}

double cell_length(const Grid& grid, std::size_t i) {
  const auto& s = grid.nodes;
  const double hl = i > 0 ? s[i] - s[i - 1] : 0.0;
  const double hr = i + 1 < s.size() ? s[i + 1] - s[i] : 0.0;
  return 0.5 * (hl + hr);
}

// Value of the stored vector of `mode` for eigenvalue j at grid node i (0 at Dirichlet nodes).
double vector_at(const ModeSpectrum& mode, std::size_t j, std::size_t node) {
  if (node < mode.first_node) return 0.0;
  const std::size_t r = node - mode.first_node;
  if (r >= mode.unknowns) return 0.0;
  return mode.vectors[j * mode.unknowns + r];
}

std::size_t nearest_node(const Grid& grid, double s) {
  const auto it = std::lower_bound(grid.nodes.begin(), grid.nodes.end(), s);
  if (it == grid.nodes.begin()) return 0;
  if (it == grid.nodes.end()) return grid.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - grid.nodes.begin());
  return (s - grid.nodes[hi - 1] <= grid.nodes[hi] - s) ? hi - 1 : hi;
}

}  // namespace

double discrete_area(const Eigensystem& sys) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sys.grid->size(); ++i) acc += sys.node_weights[i] * cell_length(*sys.grid, i);
  return 2.0 * kPi * acc;
}

double weyl_tail(double area, double lambda_cut, double t) {
  require_positive_time(t);
  return std::abs(area) / (4.0 * kPi) * (1.0 + lambda_cut * t) * std::exp(-lambda_cut * t) / t;
}

TraceValue heat_trace(const Eigensystem& sys, double t) {
  require_positive_time(t);
  TraceValue out;
  for (const auto& mode : sys.modes) {
    double partial = 0.0;
    for (double lambda : mode.eigenvalues) partial += std::exp(-lambda * t);
    out.value += mode.multiplicity * partial;
  }
  out.tail_bound = weyl_tail(discrete_area(sys), sys.lambda_cut, t);
  return out;
}

TraceValue relative_trace(const Eigensystem& a, const Eigensystem& b, double t) {
  require_positive_time(t);
  TraceValue out;
  const std::size_t modes = std::max(a.modes.size(), b.modes.size());
  static const std::vector<double> none;
  for (std::size_t m = 0; m < modes; ++m) {
    const auto& la = m < a.modes.size() ? a.modes[m].eigenvalues : none;
    const auto& lb = m < b.modes.size() ? b.modes[m].eigenvalues : none;
    const double mult = m == 0 ? 1.0 : 2.0;
    const std::size_t k = std::max(la.size(), lb.size());
    double partial = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double ea = j < la.size() ? std::exp(-la[j] * t) : 0.0;
      const double eb = j < lb.size() ? std::exp(-lb[j] * t) : 0.0;
      partial += ea - eb;
    }
    out.value += mult * partial;
  }
  out.tail_bound = weyl_tail(discrete_area(a) - discrete_area(b), a.lambda_cut, t);
  return out;
}

TraceSeries relative_trace_series(const Eigensystem& a, const Eigensystem& b, const std::vector<double>& times) {
  if (!compatible(a, b))
    throw std::invalid_argument("relative trace: eigensystems use different grids or cutoffs");
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("relative trace: times must be ascending");
  TraceSeries series;
  series.pair_id = a.label + "|" + b.label;
  series.times = times;
  series.values.reserve(times.size());
  series.tail_bound.reserve(times.size());
  for (double t : times) {
    const TraceValue v = relative_trace(a, b, t);
    series.values.push_back(v.value);
    series.tail_bound.push_back(v.tail_bound);
  }
  return series;
}

std::vector<double> log_time_grid(double t0, double t1, int n) {
  if (!(t0 > 0.0 && t1 > t0) || n < 2) throw std::invalid_argument("log_time_grid: need 0 < t0 < t1 and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double l0 = std::log(t0);
  const double l1 = std::log(t1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  out.front() = t0;
  out.back() = t1;
  return out;
}

double spectral_gap(const std::vector<double>& eigenvalues) {
  double gap = INFINITY;
  for (double lambda : eigenvalues)
    if (lambda > kKernelThreshold) gap = std::min(gap, lambda);
  if (!std::isfinite(gap)) throw std::invalid_argument("spectral_gap: no eigenvalue above the kernel threshold");
  return gap;
}

double spectral_gap(const Eigensystem& sys) {
  double gap = INFINITY;
  for (const auto& mode : sys.modes)
    for (double lambda : mode.eigenvalues)
      if (lambda > kKernelThreshold) {
        gap = std::min(gap, lambda);
        break;
      }
  if (!std::isfinite(gap)) throw std::invalid_argument("spectral_gap: no eigenvalue above the kernel threshold");
  return gap;
}

std::size_t kernel_dimension(const Eigensystem& sys) {
  std::size_t count = 0;
  for (const auto& mode : sys.modes)
    for (double lambda : mode.eigenvalues)
      if (lambda <= kKernelThreshold) count += static_cast<std::size_t>(mode.multiplicity);
  return count;
}

OffDiagonalResult offdiag_l2_integral(const Eigensystem& sys, const MetricProfile& profile, double t,
                                      const Interval& region, CylinderPoint y, CylinderPoint y_prime,
                                      int theta_points) {
  require_positive_time(t);
  if (theta_points < 8) throw std::invalid_argument("offdiag: need at least 8 theta points");
  if (!(region.hi > region.lo)) throw std::invalid_argument("offdiag: empty region");
  for (const auto& mode : sys.modes)
    if (!mode.eigenvalues.empty() && mode.vectors.empty())
      throw std::invalid_argument("offdiag: eigensystem was solved without eigenvectors");
  if (region.contains(y.s) || region.contains(y_prime.s))
    throw std::invalid_argument("offdiag: y and y' must lie outside the region");

  const Grid& grid = *sys.grid;
  const std::size_t iy = nearest_node(grid, y.s);
  const std::size_t iyp = nearest_node(grid, y_prime.s);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (region.contains(grid.nodes[i])) nodes.push_back(i);
  if (nodes.empty()) throw std::invalid_argument("offdiag: region contains no grid node");

  // Per-mode radial kernels A_m(x) = sum_j e^{-lambda t} u_j(x) u_j(y), likewise B_m for y'.
  const std::size_t modes = sys.modes.size();
  const std::size_t nr = nodes.size();
  std::vector<double> a(modes * nr, 0.0), b(modes * nr, 0.0);
  double diag_y = 0.0, diag_yp = 0.0;
  for (std::size_t m = 0; m < modes; ++m) {
    const ModeSpectrum& mode = sys.modes[m];
    const double angular = m == 0 ? 1.0 / (2.0 * kPi) : 1.0 / kPi;
    for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j) {
      const double decay = std::exp(-mode.eigenvalues[j] * t);
      if (decay == 0.0) continue;
      const double uy = vector_at(mode, j, iy);
      const double uyp = vector_at(mode, j, iyp);
      diag_y += angular * decay * decay * uy * uy;
      diag_yp += angular * decay * decay * uyp * uyp;
      for (std::size_t r = 0; r < nr; ++r) {
        const double ux = vector_at(mode, j, nodes[r]);
        a[m * nr + r] += decay * ux * uy;
        b[m * nr + r] += decay * ux * uyp;
      }
    }
  }

  const double dtheta = 2.0 * kPi / theta_points;
  std::vector<double> cy(modes), cyp(modes);
  double total = 0.0;
  for (int q = 0; q < theta_points; ++q) {
    const double theta = dtheta * q;
    for (std::size_t m = 0; m < modes; ++m) {
      const double md = static_cast<double>(m);
      cy[m] = m == 0 ? 1.0 / (2.0 * kPi) : std::cos(md * (theta - y.theta)) / kPi;
      cyp[m] = m == 0 ? 1.0 / (2.0 * kPi) : std::cos(md * (theta - y_prime.theta)) / kPi;
    }
    for (std::size_t r = 0; r < nr; ++r) {
      double k1 = 0.0, k2 = 0.0;
      for (std::size_t m = 0; m < modes; ++m) {
        k1 += cy[m] * a[m * nr + r];
        k2 += cyp[m] * b[m * nr + r];
      }
      const std::size_t i = nodes[r];
      total += std::abs(k1 * k2) * sys.node_weights[i] * cell_length(grid, i) * dtheta;
    }
  }

  OffDiagonalResult out;
  out.value = total;
  const double lc = sys.lambda_cut;
  const double tail_point = (1.0 + 2.0 * lc * t) * std::exp(-2.0 * lc * t) / (8.0 * kPi * t);
  out.tail_bound = std::sqrt(tail_point) * (std::sqrt(diag_yp + tail_point) + std::sqrt(diag_y + tail_point));
  if (out.tail_bound > 1e-6 * out.value)
    throw std::runtime_error("offdiag: mode sum not converged at lambda_cut for t = " + std::to_string(t));
  const double sy = grid.nodes[iy];
  const double syp = grid.nodes[iyp];
  auto gap_to = [&](double s) {
    const double edge = s < region.lo ? region.lo : region.hi;
    return axial_distance(profile, s, edge);
  };
  out.distance = std::min(gap_to(sy), gap_to(syp));
  return out;
}

}  // namespace fcb
