#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "fcb/discretize.hpp"

using namespace fcb;

namespace {

MetricProfile flat_strip() {
  // Dirichlet collars on both sides with unit weight: the chart has length pi.
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.right_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.core_length = std::numbers::pi - 1.0;
  spec.core_blend = 0.25;
  spec.bump = {spec.core_length / 2, 0.25, 0.0};
  return build_weight(spec);
}

SurfaceSpec cusp_funnel() {
  SurfaceSpec spec;
  spec.left_end = {EndKind::Funnel, 1.0, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 8.0;
  spec.bump = {4.0, 1.0, 0.5};
  return spec;
}

std::shared_ptr<const Grid> uniform_grid(const MetricProfile& p, int n) {
  const auto& note = p.truncation();
  return std::make_shared<const Grid>(Grid::uniform(p.chart(), n, note.left.bc, note.right.bc));
}

}  // namespace

TEST_CASE("sturm count and bisection on the discrete Dirichlet Laplacian") {
  const int n = 200;
  std::vector<double> d(n, 2.0), e(n - 1, -1.0), m(n, 1.0);
  const TridiagonalPencil p{d, e, m};
  CHECK(sturm_count(p, 0.0) == 0);
  CHECK(sturm_count(p, 4.0) == n);
  const auto ev = pencil_eigenvalues(p, 0.0, 4.0);
  REQUIRE(ev.size() == static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double exact = 2.0 - 2.0 * std::cos(k * std::numbers::pi / (n + 1));
    CHECK(ev[k - 1] == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("pencil eigenpairs agree with a dense generalized solver") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const int n = 60;
  std::vector<double> d(n), e(n - 1), m(n);
  for (int i = 0; i < n - 1; ++i) e[i] = -u(rng);
  for (int i = 0; i < n; ++i) {
    d[i] = (i > 0 ? -e[i - 1] : 0.0) + (i + 1 < n ? -e[i] : 0.0) + u(rng);
    m[i] = u(rng) * (i % 7 == 0 ? 1e-4 : 1.0);
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n), M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = d[i];
    M(i, i) = m[i];
    if (i + 1 < n) K(i, i + 1) = K(i + 1, i) = e[i];
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(K, M);
  const TridiagonalPencil p{d, e, m};
  const auto ev = pencil_eigenvalues(p, 0.0, 1e9);
  REQUIRE(ev.size() == static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) CHECK(ev[i] == doctest::Approx(dense.eigenvalues()(i)).epsilon(1e-9));

  std::vector<double> res;
  const auto vec = pencil_eigenvectors(p, std::span<const double>(ev.data(), 10), &res);
  for (int a = 0; a < 10; ++a) {
    CHECK(res[a] < 1e-9);
    for (int b = 0; b < 10; ++b) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += vec[a * n + i] * m[i] * vec[b * n + i];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("flat strip: first eigenvalue and mode shift") {
  const MetricProfile p = flat_strip();
  const auto grid = uniform_grid(p, 2000);
  const ModeOperator a0 = assemble_mode_operator(p, 0, *grid);
  const ModeOperator a3 = assemble_mode_operator(p, 3, *grid);
  const auto e0 = pencil_eigenvalues(a0.pencil(), 0.0, 50.0);
  const auto e3 = pencil_eigenvalues(a3.pencil(), 0.0, 59.0);
  CHECK(e0.front() == doctest::Approx(1.0).epsilon(1e-5));
  REQUIRE(e3.size() == e0.size());
  for (std::size_t i = 0; i < e0.size(); ++i) CHECK(e3[i] - e0[i] == doctest::Approx(9.0).epsilon(1e-11));
}

TEST_CASE("flat cylinder eigensystem") {
  const MetricProfile p = flat_strip();
  const Eigensystem sys = solve_modes(p, uniform_grid(p, 4000), 40.0);
  const auto all = sys.flattened();
  // k^2 + m^2 <= 10 with multiplicity two for m >= 1
  CHECK(std::count_if(all.begin(), all.end(), [](double l) { return l <= 10.0 + 1e-6; }) == 15);
  const double expected[] = {1, 2, 2, 4, 5, 5, 5, 5, 8, 8, 9, 10};
  for (int i = 0; i < 12; ++i) CHECK(all[i] == doctest::Approx(expected[i]).epsilon(1e-5));
  for (double l : all) CHECK(l < 40.0);
}

TEST_CASE("first eigenvalue of a cusp converges at second order") {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 2.0;
  spec.bump = {1.0, 0.25, 0.0};
  const MetricProfile p = build_weight(spec);
  double lam[3];
  for (int k = 0; k < 3; ++k) {
    const auto grid = uniform_grid(p, 1000 * (1 << k) + 1);
    lam[k] = pencil_eigenvalues(assemble_mode_operator(p, 0, *grid).pencil(), 0.0, 1.0).front();
  }
  const double order = std::log2((lam[0] - lam[1]) / (lam[1] - lam[2]));
  CHECK(order == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("eigensystem invariants on a graded grid") {
  const MetricProfile p = build_weight(cusp_funnel());
  const auto grid = std::make_shared<const Grid>(Grid::graded(p, 1500));
  SolveOptions opts;
  opts.store_vectors = true;
  const Eigensystem sys = solve_modes(p, grid, 200.0, opts);
  double max_w = 0.0;
  for (double w : sys.node_weights) max_w = std::max(max_w, w);
  for (const auto& mode : sys.modes) {
    CHECK(mode.multiplicity == (mode.mode == 0 ? 1 : 2));
    CHECK(std::is_sorted(mode.eigenvalues.begin(), mode.eigenvalues.end()));
    if (!mode.eigenvalues.empty()) CHECK(mode.eigenvalues.front() >= mode.mode * mode.mode / max_w * (1 - 1e-12));
    for (double l : mode.eigenvalues) CHECK(l < 200.0);
    CHECK(mode.max_residual < 1e-9);
  }
  CHECK(sys.mode_cutoff * sys.mode_cutoff / max_w > 200.0);

  const ModeSpectrum& m0 = sys.modes.front();
  const ModeOperator op = assemble_mode_operator(p, 0, *grid);
  const std::size_t n = m0.unknowns;
  for (std::size_t a = 0; a < std::min<std::size_t>(8, m0.eigenvalues.size()); ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += m0.vectors[a * n + i] * op.mass[i] * m0.vectors[b * n + i];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
  }
}

TEST_CASE("generalized and symmetrized problems agree") {
  const MetricProfile p = build_weight(cusp_funnel());
  const auto grid = uniform_grid(p, 400);
  const ModeOperator op = assemble_mode_operator(p, 1, *grid);
  const int n = static_cast<int>(op.unknowns());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    S(i, i) = op.diag[i] / op.mass[i];
    if (i + 1 < n) S(i, i + 1) = S(i + 1, i) = op.off[i] / std::sqrt(op.mass[i] * op.mass[i + 1]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(S, Eigen::EigenvaluesOnly);
  const auto ev = pencil_eigenvalues(op.pencil(), 0.0, 50.0);
  for (std::size_t i = 0; i < ev.size(); ++i)
    CHECK(std::abs(ev[i] - dense.eigenvalues()(static_cast<int>(i))) <= 1e-10 * std::max(1.0, ev[i]));
}

TEST_CASE("enlarging a Dirichlet truncation never raises an eigenvalue") {
  SurfaceSpec spec = cusp_funnel();
  Truncation short_cut, long_cut;
  short_cut.cusp_cut = 20.0;
  long_cut.cusp_cut = 30.0;
  const MetricProfile ps = build_weight(spec, short_cut), pl = build_weight(spec, long_cut);
  const Grid gs = Grid::uniform(ps.chart(), 1200, BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet);
  Grid gl = gs;
  const double h = gs.nodes[1] - gs.nodes[0];
  while (gl.nodes.back() + 1.5 * h < pl.chart().hi) gl.nodes.push_back(gl.nodes.back() + h);
  gl.nodes.push_back(pl.chart().hi);
  for (int m : {0, 2}) {
    const auto es = pencil_eigenvalues(assemble_mode_operator(ps, m, gs).pencil(), 0.0, 30.0);
    const auto el = pencil_eigenvalues(assemble_mode_operator(pl, m, gl).pencil(), 0.0, 30.0);
    REQUIRE(el.size() >= es.size());
    for (std::size_t i = 0; i < es.size(); ++i) CHECK(el[i] <= es[i] * (1 + 1e-13));
  }
}

TEST_CASE("results do not depend on the worker count") {
  const MetricProfile p = build_weight(cusp_funnel());
  const auto grid = std::make_shared<const Grid>(Grid::graded(p, 800));
  SolveOptions one, three;
  one.workers = 1;
  three.workers = 3;
  CHECK(solve_modes(p, grid, 100.0, one).flattened() == solve_modes(p, grid, 100.0, three).flattened());
}

TEST_CASE("errors are reported") {
  const MetricProfile p = build_weight(cusp_funnel());
  const auto grid = uniform_grid(p, 200);
  CHECK_THROWS_AS(solve_modes(p, grid, 1e6), std::runtime_error);
  CHECK_THROWS_AS(assemble_mode_operator(p, -1, *grid), std::invalid_argument);
  const Grid wrong = Grid::uniform({0.0, 1.0}, 10, BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet);
  CHECK_THROWS_AS(assemble_mode_operator(p, 0, wrong), std::invalid_argument);
  CHECK_THROWS_AS(grid->spacing() + Grid::graded(p, 300).spacing(), std::logic_error);
}
