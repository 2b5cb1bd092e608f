#include "fcb/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fcb/parallel.hpp"

namespace fcb {

Grid Grid::uniform(const Interval& chart, int n, BoundaryCondition left, BoundaryCondition right) {
  if (n < 3) throw std::invalid_argument("grid needs at least three nodes");
  if (!(chart.hi > chart.lo)) throw std::invalid_argument("grid chart is empty");
  Grid g;
  g.bc_left = left;
  g.bc_right = right;
  g.nodes.resize(static_cast<std::size_t>(n));
  const double h = chart.length() / (n - 1);
  for (int i = 0; i < n; ++i) g.nodes[static_cast<std::size_t>(i)] = chart.lo + h * i;
  g.nodes.back() = chart.hi;
  return g;
}

Grid Grid::graded(const MetricProfile& reference, int n, double beta) {
  if (n < 3) throw std::invalid_argument("grid needs at least three nodes");
  if (!(beta > 0.0)) throw std::invalid_argument("graded grid: beta must be positive");
  const Interval chart = reference.chart();
  const std::size_t fine = static_cast<std::size_t>(n) * 64;
  const double hf = chart.length() / static_cast<double>(fine);
  std::vector<double> xi(fine + 1, 0.0);
  auto density = [&](double s) { return std::exp(0.5 * reference.log_weight(s)) + beta; };
  double prev = density(chart.lo);
  for (std::size_t j = 1; j <= fine; ++j) {
    const double s = j == fine ? chart.hi : chart.lo + hf * static_cast<double>(j);
    const double mid = density(s - 0.5 * hf);
    const double cur = density(s);
    xi[j] = xi[j - 1] + hf * (prev + 4.0 * mid + cur) / 6.0;
    prev = cur;
  }
  Grid g;
  g.bc_left = reference.truncation().left.bc;
  g.bc_right = reference.truncation().right.bc;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.nodes.front() = chart.lo;
  g.nodes.back() = chart.hi;
  std::size_t j = 0;
  for (int k = 1; k + 1 < n; ++k) {
    const double target = xi.back() * k / (n - 1);
    while (xi[j + 1] < target) ++j;
    const double frac = (target - xi[j]) / (xi[j + 1] - xi[j]);
    g.nodes[static_cast<std::size_t>(k)] = chart.lo + hf * (static_cast<double>(j) + frac);
  }
  g.validate(chart);
  return g;
}

bool Grid::is_uniform(double tol) const {
  if (nodes.size() < 2) return false;
  const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (std::abs((nodes[i + 1] - nodes[i]) - h) > tol * std::max(1.0, std::abs(nodes[i + 1]))) return false;
  return true;
}

double Grid::spacing() const {
  if (!is_uniform()) throw std::logic_error("grid is not uniform");
  return (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
}

double Grid::min_spacing() const {
  double h = INFINITY;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) h = std::min(h, nodes[i + 1] - nodes[i]);
  return h;
}

void Grid::validate(const Interval& chart) const {
  if (nodes.size() < 3) throw std::invalid_argument("grid needs at least three nodes");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i + 1] > nodes[i])) throw std::invalid_argument("grid nodes must increase strictly");
  const double scale = 1e-12 * std::max({1.0, std::abs(chart.lo), std::abs(chart.hi)});
  if (std::abs(nodes.front() - chart.lo) > scale || std::abs(nodes.back() - chart.hi) > scale)
    throw std::invalid_argument("grid endpoints do not match the profile chart");
}

ModeOperator assemble_mode_operator(const MetricProfile& profile, int m, const Grid& grid) {
  if (m < 0) throw std::invalid_argument("mode must be nonnegative");
  grid.validate(profile.chart());
  const std::size_t n = grid.size();
  const auto& s = grid.nodes;
  const BoundaryCondition left = resolve_for_mode(grid.bc_left, m);
  const BoundaryCondition right = resolve_for_mode(grid.bc_right, m);
  const std::size_t first = left == BoundaryCondition::Dirichlet ? 1 : 0;
  const std::size_t last = right == BoundaryCondition::Dirichlet ? n - 2 : n - 1;
  const double m2 = static_cast<double>(m) * static_cast<double>(m);

  ModeOperator op;
  op.mode = m;
  op.multiplicity = m == 0 ? 1 : 2;
  op.first_node = first;
  const std::size_t k = last - first + 1;
  op.diag.resize(k);
  op.mass.resize(k);
  op.off.resize(k - 1);
  for (std::size_t i = first; i <= last; ++i) {
    const double hl = i > 0 ? s[i] - s[i - 1] : 0.0;
    const double hr = i + 1 < n ? s[i + 1] - s[i] : 0.0;
    const double cell = 0.5 * (hl + hr);
    const double w = profile.weight(s[i]);
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("weight is not positive at s = " + std::to_string(s[i]));
    const std::size_t r = i - first;
    op.diag[r] = (hl > 0.0 ? 1.0 / hl : 0.0) + (hr > 0.0 ? 1.0 / hr : 0.0) + m2 * cell;
    op.mass[r] = w * cell;
    if (i < last) op.off[r] = -1.0 / hr;
  }
  return op;
}

std::size_t Eigensystem::count() const {
  std::size_t total = 0;
  for (const auto& mode : modes) total += mode.eigenvalues.size() * static_cast<std::size_t>(mode.multiplicity);
  return total;
}

std::vector<double> Eigensystem::flattened() const {
  std::vector<double> out;
  out.reserve(count());
  for (const auto& mode : modes)
    for (double lambda : mode.eigenvalues)
      for (int c = 0; c < mode.multiplicity; ++c) out.push_back(lambda);
  std::sort(out.begin(), out.end());
  return out;
}

Eigensystem solve_modes(const MetricProfile& profile, std::shared_ptr<const Grid> grid, double lambda_cut,
                        const SolveOptions& options) {
  if (!grid) throw std::invalid_argument("solve_modes: grid is null");
  if (!(lambda_cut > 0.0)) throw std::invalid_argument("solve_modes: lambda_cut must be positive");
  grid->validate(profile.chart());

  Eigensystem sys;
  sys.grid = grid;
  sys.lambda_cut = lambda_cut;
  sys.label = options.label;
  sys.node_weights.resize(grid->size());
  double max_w = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    sys.node_weights[i] = profile.weight(grid->nodes[i]);
    max_w = std::max(max_w, sys.node_weights[i]);
  }
  // The lumped scheme keeps K >= m^2 H and M <= max(w) H, so lambda_{m,1} >= m^2 / max(w) holds discretely.
  sys.mode_cutoff = static_cast<int>(std::floor(std::sqrt(lambda_cut * max_w))) + 1;
  while (static_cast<double>(sys.mode_cutoff - 1) * (sys.mode_cutoff - 1) / max_w > lambda_cut) --sys.mode_cutoff;
  sys.modes.resize(static_cast<std::size_t>(sys.mode_cutoff));

  parallel_for(
      sys.modes.size(),
      [&](std::size_t index) {
        const int m = static_cast<int>(index);
        const ModeOperator op = assemble_mode_operator(profile, m, *grid);
        ModeSpectrum& out = sys.modes[index];
        out.mode = m;
        out.multiplicity = op.multiplicity;
        out.first_node = op.first_node;
        out.unknowns = op.unknowns();
        const TridiagonalPencil pencil = op.pencil();
        const int below = sturm_count(pencil, lambda_cut);
        if (below > options.capacity_fraction * static_cast<double>(op.unknowns()))
          throw std::runtime_error("mode " + std::to_string(m) + " has " + std::to_string(below) +
                                   " eigenvalues below lambda_cut on " + std::to_string(op.unknowns()) +
                                   " unknowns; refine the grid or lower lambda_cut");
        const double lo = -1e-6;
        out.eigenvalues = pencil_eigenvalues(pencil, lo, lambda_cut, options.tolerance);
        if (options.store_vectors && !out.eigenvalues.empty()) {
          std::vector<double> residuals;
          out.vectors = pencil_eigenvectors(pencil, out.eigenvalues, &residuals);
          out.max_residual = *std::max_element(residuals.begin(), residuals.end());
        }
      },
      options.workers);
  return sys;
}

bool compatible(const Eigensystem& a, const Eigensystem& b) {
  if (!a.grid || !b.grid) return false;
  if (a.lambda_cut != b.lambda_cut) return false;
  return a.grid == b.grid || *a.grid == *b.grid;
}

}  // namespace fcb
