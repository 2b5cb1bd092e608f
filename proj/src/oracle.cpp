#include "fcb/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace fcb {

namespace {

struct Layout {
  // Index of the unknown at (axial node i, theta q); -1 when the node is pinned to zero.
  std::vector<long> index;
  int theta = 0;
  long unknowns = 0;
  long at(std::size_t i, int q) const { return index[i * static_cast<std::size_t>(theta) + static_cast<std::size_t>(q)]; }
};

Layout build_layout(const Grid& g, int theta) {
  Layout lay;
  lay.theta = theta;
  const std::size_t n = g.size();
  lay.index.assign(n * static_cast<std::size_t>(theta), -1);
  long next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool end = i == 0 || i + 1 == n;
    const BoundaryCondition bc = i == 0 ? g.bc_left : g.bc_right;
    if (end && bc == BoundaryCondition::Dirichlet) continue;
    if (end && bc == BoundaryCondition::CapRule) {
      for (int q = 0; q < theta; ++q) lay.index[i * static_cast<std::size_t>(theta) + static_cast<std::size_t>(q)] = next;
      ++next;
      continue;
    }
    for (int q = 0; q < theta; ++q) lay.index[i * static_cast<std::size_t>(theta) + static_cast<std::size_t>(q)] = next++;
  }
  lay.unknowns = next;
  return lay;
}

}  // namespace

Oracle2DResult low_eigenvalues_2d(const MetricProfile& profile, const Grid2D& grid, int count,
                                  const Oracle2DOptions& options) {
  if (count < 1 || count > 50) throw std::invalid_argument("oracle: count must lie in [1, 50]");
  if (grid.theta_points < 4) throw std::invalid_argument("oracle: need at least 4 theta points");
  const Grid& g = grid.axial;
  g.validate(profile.chart());
  const int nt = grid.theta_points;
  const double dtheta = 2.0 * std::numbers::pi / nt;
  const Layout lay = build_layout(g, nt);
  const long n = lay.unknowns;
  const int p = count + options.extra_vectors;
  if (n < 2 * p) throw std::invalid_argument("oracle: grid too small for the requested count");

  // Assemble K and the lumped mass. Collapsed ring entries accumulate into one row.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  const std::size_t ns = g.size();
  for (std::size_t i = 0; i < ns; ++i) {
    const double hl = i > 0 ? g.nodes[i] - g.nodes[i - 1] : 0.0;
    const double hr = i + 1 < ns ? g.nodes[i + 1] - g.nodes[i] : 0.0;
    const double cell = 0.5 * (hl + hr);
    const double w = profile.weight(g.nodes[i]);
    if (!(w > 0.0)) throw std::invalid_argument("oracle: weight is not positive");
    for (int q = 0; q < nt; ++q) {
      const long row = lay.at(i, q);
      if (row < 0) continue;
      mass(row) += w * cell * dtheta;
      // Axial fluxes.
      if (i > 0) {
        const double c = dtheta / hl;
        trip.emplace_back(row, row, c);
        const long col = lay.at(i - 1, q);
        if (col >= 0) trip.emplace_back(row, col, -c);
      }
      if (i + 1 < ns) {
        const double c = dtheta / hr;
        trip.emplace_back(row, row, c);
        const long col = lay.at(i + 1, q);
        if (col >= 0) trip.emplace_back(row, col, -c);
      }
      // Angular fluxes; they cancel inside a collapsed ring.
      const double c = cell / dtheta;
      for (int dq : {-1, 1}) {
        const long col = lay.at(i, (q + dq + nt) % nt);
        if (col == row) continue;
        trip.emplace_back(row, row, c);
        if (col >= 0) trip.emplace_back(row, col, -c);
      }
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> shifted = K;
  for (long r = 0; r < n; ++r) shifted.coeffRef(r, r) -= options.shift * mass(r);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) throw std::runtime_error("oracle: factorization failed");

  Eigen::MatrixXd X(n, p);
  std::uint64_t state = 0x2545F4914F6CDD1DULL;
  for (long r = 0; r < n; ++r)
    for (int c = 0; c < p; ++c) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      X(r, c) = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }

  Oracle2DResult out;
  out.unknowns = static_cast<std::size_t>(n);
  Eigen::VectorXd theta;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::MatrixXd Y = solver.solve(mass.asDiagonal() * X);
    const Eigen::MatrixXd KY = K * Y;
    const Eigen::MatrixXd MY = mass.asDiagonal() * Y;
    Eigen::MatrixXd kr = Y.transpose() * KY;
    Eigen::MatrixXd mr = Y.transpose() * MY;
    kr = 0.5 * (kr + kr.transpose()).eval();
    mr = 0.5 * (mr + mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(kr, mr);
    if (rr.info() != Eigen::Success) throw std::runtime_error("oracle: Rayleigh-Ritz failed");
    theta = rr.eigenvalues();
    X = Y * rr.eigenvectors();
    const Eigen::MatrixXd KX = KY * rr.eigenvectors();
    const Eigen::MatrixXd MX = MY * rr.eigenvectors();
    out.residuals.assign(static_cast<std::size_t>(count), 0.0);
    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
      const Eigen::VectorXd r = KX.col(j) - theta(j) * MX.col(j);
      const double norm = std::sqrt((r.array().square() / mass.array()).sum());
      const double scale = std::sqrt(X.col(j).dot(MX.col(j)));
      out.residuals[static_cast<std::size_t>(j)] = norm / (scale * std::max(std::abs(theta(j)), 1e-12));
      worst = std::max(worst, out.residuals[static_cast<std::size_t>(j)]);
    }
    out.iterations = iter;
    if (worst <= options.residual_target) {
      out.eigenvalues.assign(theta.data(), theta.data() + count);
      return out;
    }
  }
  throw std::runtime_error("oracle: subspace iteration did not converge");
}

double finite_matrix_log_relative_det(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("finite spectra must have equal length");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !(b[i] > 0.0)) throw std::invalid_argument("finite spectra must be positive");
    acc += std::log(static_cast<long double>(a[i])) - std::log(static_cast<long double>(b[i]));
  }
  return static_cast<double>(acc);
}

double finite_matrix_relative_det(const std::vector<double>& a, const std::vector<double>& b) {
  const double log_det = finite_matrix_log_relative_det(a, b);
  if (a.size() >= 20) return std::exp(log_det);
  // Doubles are dyadic rationals, so the product ratio is exact before the final rounding.
  using boost::multiprecision::cpp_rational;
  cpp_rational num = 1, den = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num *= cpp_rational(a[i]);
    den *= cpp_rational(b[i]);
  }
  return static_cast<double>(cpp_rational(num / den));
}

}  // namespace fcb
