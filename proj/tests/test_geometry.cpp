#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>

#include "fcb/geometry.hpp"
#include "fcb/quadrature.hpp"

using namespace fcb;

namespace {

SurfaceSpec cusp_funnel(double amplitude) {
  SurfaceSpec spec;
  spec.left_end = {EndKind::Funnel, 1.0, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 8.0;
  spec.bump = {4.0, 1.0, amplitude};
  return spec;
}

}  // namespace

TEST_CASE("point surgery factor equals one outside the cutoff and at epsilon zero") {
  CHECK(surgery_factor_point(0.3, 0.6) == 1.0);
  CHECK(surgery_factor_point(0.0, 0.1) == 1.0);
  for (double r : {1e-8, 0.01, 0.2, 0.3, 0.45, 0.7, 2.0}) CHECK(surgery_factor_point(0.0, r) == 1.0);
  for (double eps : {0.01, 0.3, 1.0}) CHECK(surgery_factor_point(eps, 0.5 + 1e-9) == 1.0);
}

TEST_CASE("point surgery factor matches a multiprecision evaluation at (0.1, 0.1)") {
  using mp = boost::multiprecision::cpp_bin_float_50;
  const mp eps("0.1"), r("0.1");
  const mp half_log = 0.5 * log(eps * eps + r * r);
  const mp expected = r * r * log(r) * log(r) / (eps * eps + (eps * eps + r * r) * half_log * half_log);
  const double value = surgery_factor_point(0.1, 0.1);
  CHECK(value == doctest::Approx(expected.convert_to<double>()).epsilon(1e-14));
  // regression pin
  CHECK(value == doctest::Approx(0.61279720276287363).epsilon(1e-15));
}

TEST_CASE("point surgery rejects the cusp tip") {
  CHECK_THROWS_AS(surgery_factor_point(0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(surgery_factor_point(1.5, 0.1), std::domain_error);
  CHECK_THROWS_AS(surgery_factor_point(0.1, -1.0), std::domain_error);
  CHECK(std::isfinite(surgery_factor_point(0.2, 0.0)));
}

TEST_CASE("log point factor agrees with the direct factor") {
  for (double eps : {0.05, 0.3, 0.9})
    for (double r : {1e-3, 0.1, 0.3, 0.4})
      CHECK(std::exp(log_surgery_factor_point(eps, r)) == doctest::Approx(surgery_factor_point(eps, r)).epsilon(1e-13));
}

TEST_CASE("boundary surgery factor examples") {
  CHECK(surgery_factor_boundary(0.6, 0.1, 0.7) == 1.0);
  CHECK(surgery_factor_boundary(0.1, 0.6, 0.7) == 1.0);
  CHECK(std::abs(surgery_factor_boundary(0.05, 0.05, 0.0) - 200.0) <= 1e-10 * 200.0);
  CHECK_THROWS_AS(surgery_factor_boundary(0.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("boundary surgery factor satisfies its defining conditions on a grid") {
  const double f = 0.7;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const double eps = 0.025 * i, r = 0.025 * j;
      if (eps == 0.0 && r == 0.0) continue;
      const double psi = surgery_factor_boundary(eps, r, f);
      if (eps > 0.5 || r > 0.5) CHECK(psi == 1.0);
      if (eps * eps + r * r < 1.0 / 16.0 && eps <= 0.25 && r <= 0.25)
        CHECK((eps * eps + r * r) * psi == doctest::Approx(std::exp(-f)).epsilon(1e-12));
    }
  }
  // (eps^2 + r^2) psi is smooth across r = 0: bounded second differences.
  for (double eps : {0.1, 0.3, 0.45}) {
    const double h = 1e-3;
    auto g = [&](double r) { return (eps * eps + r * r) * surgery_factor_boundary(eps, std::abs(r), f); };
    double worst = 0.0;
    for (int k = -50; k <= 50; ++k) {
      const double r = k * h;
      worst = std::max(worst, std::abs(g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h));
    }
    CHECK(worst < 100.0);
  }
}

TEST_CASE("zero-amplitude bump leaves the pure model weight") {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 1.0, 0.0, 0.0};
  spec.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
  spec.core_length = 4.0;
  spec.bump = {2.0, 0.5, 0.0};
  const MetricProfile p = build_weight(spec);
  for (const auto& [s, w] : p.sample(4001)) {
    if (s <= 0.0) CHECK(w == 1.0);
    if (s >= spec.core_length) CHECK(w == doctest::Approx(std::exp(p.end_model_log_weight(false, s))).epsilon(1e-15));
  }
}

TEST_CASE("bump amplitude changes the weight only inside the core") {
  const MetricProfile a = build_weight(cusp_funnel(0.5));
  const MetricProfile b = build_weight(cusp_funnel(0.0));
  REQUIRE(a.chart().lo == b.chart().lo);
  REQUIRE(a.chart().hi == b.chart().hi);
  double worst_outside = 0.0;
  for (const auto& [s, w] : a.sample(20001))
    if (s < 3.0 || s > 5.0) worst_outside = std::max(worst_outside, std::abs(w - b.weight(s)) / w);
  CHECK(worst_outside == 0.0);
  CHECK(a.weight(4.0) == doctest::Approx(b.weight(4.0) * std::exp(0.5)));
}

TEST_CASE("filled cap at epsilon zero is bitwise the cusp") {
  SurfaceSpec cusp = cusp_funnel(0.5);
  SurfaceSpec cap = cusp;
  cap.right_end.kind = EndKind::FilledCap;
  Truncation trunc;
  trunc.cap_cut = trunc.cusp_cut = 14.0;
  const MetricProfile a = build_weight(cusp, trunc), b = build_weight(cap, trunc);
  REQUIRE(a.chart().hi == b.chart().hi);
  for (const auto& [s, w] : a.sample(10001)) CHECK(w == b.weight(s));
}

TEST_CASE("filled cap weight decays like c e^{-2s}") {
  SurfaceSpec spec = cusp_funnel(0.0);
  spec.right_end = {EndKind::FilledCap, 1.0, 0.5, 0.0};
  const MetricProfile p = build_weight(spec);
  const double local = 12.0;
  const double s = spec.core_length + (local - spec.right_end.junction);
  const double eps = 0.5;
  const double c = 1.0 / (eps * eps + eps * eps * std::log(eps) * std::log(eps));
  CHECK(p.weight(s) == doctest::Approx(c * std::exp(-2.0 * local)).epsilon(1e-6));
}

TEST_CASE("funnel weight is e^c / x^2 beyond the blend") {
  SurfaceSpec spec = cusp_funnel(0.0);
  spec.left_end.conformal_constant = 0.3;
  const MetricProfile p = build_weight(spec);
  for (double s : {-0.1, -0.5, -0.9}) {
    const double x = p.local_coordinate(true, s);
    CHECK(p.weight(s) == doctest::Approx(std::exp(0.3) / (x * x)).epsilon(1e-14));
  }
}

TEST_CASE("relative area") {
  const MetricProfile a = build_weight(cusp_funnel(0.5));
  const MetricProfile b = build_weight(cusp_funnel(0.0));
  CHECK(relative_area(a, a) == 0.0);
  const double ab = relative_area(a, b);
  CHECK(relative_area(b, a) == -ab);
  // independent composite Gauss-Legendre sum over the bump support
  const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                             0.2369268850561891};
  double sum = 0.0;
  const int panels = 4000;
  for (int k = 0; k < panels; ++k) {
    const double lo = 3.0 + 2.0 * k / panels, half = 1.0 / panels;
    for (int q = 0; q < 5; ++q) {
      const double s = lo + half * (1.0 + nodes[q]);
      sum += weights[q] * half * b.weight(s) * (std::exp(cusp_funnel(0.5).bump.value(s)) - 1.0);
    }
  }
  CHECK(ab == doctest::Approx(2.0 * std::numbers::pi * sum).epsilon(1e-9));

  SurfaceSpec other = cusp_funnel(0.0);
  other.right_end.conformal_constant = 0.2;
  CHECK_THROWS_AS(relative_area(a, build_weight(other)), std::invalid_argument);
}

TEST_CASE("volume ratio of a surgery family is finite and at least one") {
  SurfaceSpec base = cusp_funnel(0.0);
  base.right_end.kind = EndKind::FilledCap;
  const MetricProfile zero = build_weight(base);
  double worst = 0.0;
  for (double eps : {0.1, 0.5, 1.0}) {
    SurfaceSpec s = base;
    s.right_end.cap_epsilon = eps;
    const double c = volume_ratio(build_weight(s), zero);
    CHECK(std::isfinite(c));
    CHECK(c >= 1.0);
    worst = std::max(worst, c);
  }
  CHECK(worst >= 1.0);
}

TEST_CASE("build_weight validates and is deterministic") {
  SurfaceSpec bad = cusp_funnel(0.5);
  bad.bump.center = 0.2;
  CHECK_THROWS_AS(build_weight(bad), std::invalid_argument);
  Truncation t;
  t.funnel_distance = -1.0;
  CHECK_THROWS_AS(build_weight(cusp_funnel(0.5), t), std::invalid_argument);

  const auto x = build_weight(cusp_funnel(0.5)).sample(5001);
  const auto y = build_weight(cusp_funnel(0.5)).sample(5001);
  CHECK(x == y);
}

TEST_CASE("axial distance in the flat core is the coordinate distance") {
  const MetricProfile p = build_weight(cusp_funnel(0.0));
  CHECK(axial_distance(p, 1.0, 3.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(axial_distance(p, 3.0, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("adaptive Simpson integrates smooth functions") {
  const auto r = adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
}
