#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fcb/geometry.hpp"
#include "fcb/tridiagonal.hpp"

namespace fcb {

/// Nodes along the cylinder axis, endpoints on the chart ends. Dirichlet ends
/// drop their endpoint from the unknowns; Neumann and CapRule ends keep it.
struct Grid {
  std::vector<double> nodes;
  BoundaryCondition bc_left = BoundaryCondition::Dirichlet;
  BoundaryCondition bc_right = BoundaryCondition::Dirichlet;

  /// n equally spaced nodes on the chart.
  static Grid uniform(const Interval& chart, int n, BoundaryCondition left, BoundaryCondition right);
  /// n nodes equally spaced in xi, where d xi / ds = sqrt(w_ref(s)) + beta. The boundary
  /// conditions are taken from the profile's truncation note. Build it from one reference
  /// profile and share it across a family so that every member uses identical nodes.
  static Grid graded(const MetricProfile& reference, int n, double beta = 0.1);

  std::size_t size() const { return nodes.size(); }
  Interval chart() const { return {nodes.front(), nodes.back()}; }
  /// Uniform spacing; throws std::logic_error if the grid is not uniform to 1e-14.
  double spacing() const;
  bool is_uniform(double tol = 1e-14) const;
  double min_spacing() const;

  /// Throws std::invalid_argument unless nodes increase strictly and the endpoints match `chart`.
  void validate(const Interval& chart) const;

  bool operator==(const Grid& other) const = default;
};

/// Lumped finite-volume discretization of -u'' + m^2 u = lambda w u on the unknown nodes.
/// On a uniform grid it is the central-difference scheme scaled by the spacing.
struct ModeOperator {
  int mode = 0;
  int multiplicity = 1;
  std::size_t first_node = 0;  // grid index of the first unknown
  std::vector<double> diag;    // stiffness K_ii
  std::vector<double> off;     // stiffness K_{i,i+1}
  std::vector<double> mass;    // w_i times the dual cell length

  std::size_t unknowns() const { return diag.size(); }
  TridiagonalPencil pencil() const { return {diag, off, mass}; }
};

/// Throws std::invalid_argument on m < 0, a grid that does not match the chart, or w <= 0 at a node.
ModeOperator assemble_mode_operator(const MetricProfile& profile, int m, const Grid& grid);

struct ModeSpectrum {
  int mode = 0;
  int multiplicity = 1;
  std::size_t first_node = 0;
  std::size_t unknowns = 0;
  std::vector<double> eigenvalues;  // ascending, all below lambda_cut
  std::vector<double> vectors;      // optional, column-major unknowns x eigenvalues, mass-orthonormal
  double max_residual = 0.0;        // only filled when vectors are stored
};

struct Eigensystem {
  std::shared_ptr<const Grid> grid;
  std::vector<double> node_weights;
  double lambda_cut = 0.0;
  /// First mode not stored: m^2 / max(w) > lambda_cut for every m >= mode_cutoff.
  int mode_cutoff = 0;
  std::string label;
  std::vector<ModeSpectrum> modes;

  /// Number of eigenvalues counted with multiplicity.
  std::size_t count() const;
  /// All eigenvalues with multiplicity, sorted ascending.
  std::vector<double> flattened() const;
};

struct SolveOptions {
  bool store_vectors = false;
  /// A mode may hold at most this fraction of its unknowns below lambda_cut.
  double capacity_fraction = 0.25;
  BisectionTolerance tolerance{};
  int workers = 0;
  std::string label;
};

/// Solve every Fourier mode with eigenvalues below lambda_cut. Results do not depend on the
/// number of workers. Throws std::runtime_error when a mode exceeds the grid capacity.
Eigensystem solve_modes(const MetricProfile& profile, std::shared_ptr<const Grid> grid, double lambda_cut,
                        const SolveOptions& options = {});

/// True when both systems were built on identical grids with the same cutoff.
bool compatible(const Eigensystem& a, const Eigensystem& b);

}  // namespace fcb
