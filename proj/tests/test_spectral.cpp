#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fcb/spectral.hpp"

using namespace fcb;

namespace {

Eigensystem listed(std::vector<double> eigenvalues) {
  Eigensystem sys;
  sys.grid = std::make_shared<const Grid>(
      Grid::uniform({0.0, 1.0}, 3, BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet));
  sys.node_weights = {1.0, 1.0, 1.0};
  sys.lambda_cut = 100.0;
  ModeSpectrum m;
  m.eigenvalues = std::move(eigenvalues);
  sys.modes.push_back(m);
  return sys;
}

MetricProfile flat_strip() {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.right_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.core_length = std::numbers::pi - 1.0;
  spec.core_blend = 0.25;
  spec.bump = {spec.core_length / 2, 0.25, 0.0};
  return build_weight(spec);
}

SurfaceSpec cusp_funnel(double amplitude) {
  SurfaceSpec spec;
  spec.left_end = {EndKind::Funnel, 1.0, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 8.0;
  spec.bump = {4.0, 1.0, amplitude};
  return spec;
}

struct BumpPair {
  Eigensystem a, b, c;
};

const BumpPair& bump_pair() {
  static const BumpPair pair = [] {
    const MetricProfile pb = build_weight(cusp_funnel(0.0));
    const auto grid = std::make_shared<const Grid>(Grid::graded(pb, 1200));
    return BumpPair{solve_modes(build_weight(cusp_funnel(0.5)), grid, 300.0), solve_modes(pb, grid, 300.0),
                    solve_modes(build_weight(cusp_funnel(-0.3)), grid, 300.0)};
  }();
  return pair;
}

}  // namespace

TEST_CASE("heat trace of a two-point spectrum") {
  const Eigensystem sys = listed({1.0, 2.0});
  CHECK(heat_trace(sys, 1.0).value == doctest::Approx(0.50321472440).epsilon(1e-10));
  CHECK(heat_trace(listed({0.0, 1.0, 2.0}), 200.0).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(heat_trace(sys, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(heat_trace(sys, -1.0), std::invalid_argument);
}

TEST_CASE("flat cylinder heat trace matches direct summation") {
  const MetricProfile p = flat_strip();
  const auto grid = std::make_shared<const Grid>(
      Grid::uniform(p.chart(), 4000, BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet));
  const Eigensystem sys = solve_modes(p, grid, 30.0);
  // Same truncation: all k^2 + m^2 below the cut.
  double direct = 0.0;
  for (int k = 1; k * k < 30; ++k)
    for (int m = -6; m <= 6; ++m)
      if (k * k + m * m < 30) direct += std::exp(-0.5 * (k * k + m * m));
  CHECK(heat_trace(sys, 0.5).value == doctest::Approx(direct).epsilon(1e-5));
  CHECK(spectral_gap(sys) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("spectral gap ignores kernel eigenvalues") {
  CHECK(spectral_gap(std::vector<double>{0.0, 0.7, 1.0}) == 0.7);
  CHECK(spectral_gap(std::vector<double>{0.7, 1.0}) == 0.7);
  CHECK(spectral_gap(listed({0.0, 0.7})) == 0.7);
  CHECK(kernel_dimension(listed({0.0, 0.7})) == 1);
  CHECK_THROWS_AS(spectral_gap(std::vector<double>{0.0}), std::invalid_argument);
}

TEST_CASE("relative trace algebra") {
  const auto& p = bump_pair();
  const auto times = log_time_grid(0.02, 20.0, 40);
  const TraceSeries ab = relative_trace_series(p.a, p.b, times);
  const TraceSeries ba = relative_trace_series(p.b, p.a, times);
  const TraceSeries aa = relative_trace_series(p.a, p.a, times);
  const TraceSeries ac = relative_trace_series(p.a, p.c, times);
  const TraceSeries bc = relative_trace_series(p.b, p.c, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(aa.values[i] == 0.0);
    CHECK(ab.values[i] == -ba.values[i]);
    CHECK(ac.values[i] == doctest::Approx(ab.values[i] + bc.values[i]).epsilon(1e-12));
    CHECK(std::isfinite(ab.values[i]));
    CHECK(ab.tail_bound[i] >= 0.0);
    if (i > 0) CHECK(ab.tail_bound[i] <= ab.tail_bound[i - 1]);
  }
}

TEST_CASE("relative trace of a bump pair decays at least at the gap") {
  const auto& p = bump_pair();
  const double mu = std::min(spectral_gap(p.a), spectral_gap(p.b));
  const double r10 = relative_trace(p.a, p.b, 10.0).value;
  const double r2000 = relative_trace(p.a, p.b, 2000.0).value;
  const double r4000 = relative_trace(p.a, p.b, 4000.0).value;
  CHECK(std::abs(r2000) < std::abs(r10));
  // Once the lowest pair dominates, R ~ e^{-mu t}(1 - e^{-delta t}); the second factor biases
  // the observed rate by about e^{-delta t} / t, well below the margin at these times.
  CHECK(std::log(std::abs(r2000 / r4000)) / 2000.0 >= mu * (1 - 1e-3));
}

TEST_CASE("incompatible systems are rejected") {
  const auto& p = bump_pair();
  const MetricProfile pb = build_weight(cusp_funnel(0.0));
  const Eigensystem other = solve_modes(pb, std::make_shared<const Grid>(Grid::graded(pb, 1000)), 300.0);
  CHECK_THROWS_AS(relative_trace_series(p.a, other, {1.0}), std::invalid_argument);
  const Eigensystem cut = solve_modes(pb, p.b.grid, 200.0);
  CHECK_THROWS_AS(relative_trace_series(p.a, cut, {1.0}), std::invalid_argument);
}

TEST_CASE("off-diagonal integral in a flat region follows the Gaussian estimate") {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 1.0, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 4.0;
  spec.bump = {2.0, 0.5, 0.0};
  Truncation trunc;
  trunc.cusp_cut = 10.0;
  const MetricProfile p = build_weight(spec, trunc);
  SolveOptions opts;
  opts.store_vectors = true;
  const Eigensystem sys = solve_modes(p, std::make_shared<const Grid>(Grid::graded(p, 2000)), 1000.0, opts);
  const Interval region{1.5, 2.5};
  const CylinderPoint y{0.75, 0.0}, yp{3.25, 0.5};
  const double t = 0.05;
  const OffDiagonalResult r = offdiag_l2_integral(sys, p, t, region, y, yp);
  // Plane heat kernels: the product is a Gaussian centred between y and y' with variance t per axis.
  const double d2 = 2.5 * 2.5 + 0.5 * 0.5;
  const double captured = std::erf(0.5 / std::sqrt(2.0 * t));
  const double expected = std::exp(-d2 / (8.0 * t)) / (8.0 * std::numbers::pi * t) * captured;
  CHECK(r.value == doctest::Approx(expected).epsilon(0.03));
  CHECK(r.distance == doctest::Approx(0.75).epsilon(0.01));
  CHECK(r.tail_bound < 1e-6 * r.value);

  // large t: bounded by the product of diagonal values
  const OffDiagonalResult late = offdiag_l2_integral(sys, p, 50.0, region, y, yp);
  CHECK(late.value < 1.0);
  CHECK(late.value > 0.0);

  CHECK_THROWS_AS(offdiag_l2_integral(sys, p, t, region, CylinderPoint{2.0, 0.0}, yp), std::invalid_argument);
  const Eigensystem bare = solve_modes(p, sys.grid, 100.0);
  CHECK_THROWS_AS(offdiag_l2_integral(bare, p, t, region, y, yp), std::invalid_argument);
}

TEST_CASE("log time grid") {
  const auto g = log_time_grid(0.02, 20.0, 60);
  CHECK(g.size() == 60);
  CHECK(g.front() == 0.02);
  CHECK(g.back() == 20.0);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK_THROWS_AS(log_time_grid(1.0, 0.5, 10), std::invalid_argument);
}
