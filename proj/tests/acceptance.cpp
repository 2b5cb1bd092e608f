// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include <cmath>
#include <cstdio>
#include <functional>
#include <cstdlib>
#include <random>
#include <set>
#include <string>

#include "fcb/oracle.hpp"
#include "fcb/parallel.hpp"
#include "fcb/scenario.hpp"

using namespace fcb;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const Check& find_check(const Report& r, const std::string& name) {
  for (const Check& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("report " + r.name + " has no check " + name);
}

Report run(ScenarioKind kind) {
  ScenarioConfig c = default_config(kind);
  c.workers = worker_count();
  Report r = run_scenario(c);
  if (r.failure) throw std::runtime_error(*r.failure);
  return r;
}

Outcome from_checks(const Report& r, std::initializer_list<const char*> names) {
  Outcome o{true, {}};
  for (const char* n : names) {
    const Check& c = find_check(r, n);
    o.passed = o.passed && c.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += std::string(n) + fmt(" = %.3g (tol %.3g)", c.value, c.tolerance);
  }
  return o;
}

Outcome criterion_1() {
  const FlatCylinderCheck flat = flat_cylinder_check(4000, 12);
  return {flat.max_relative_error <= 1e-5, fmt("max relative error %.3g over 12 values", flat.max_relative_error)};
}

Outcome criterion_2() {
  const ScenarioConfig c = default_config(ScenarioKind::Validate);
  OracleConfig oracle = c.oracle;
  oracle.enabled = true;
  const OracleComparison cmp = oracle_comparison(c.surface_a, c.discretization, oracle);
  return {cmp.max_extrapolated_error <= 1e-3 && cmp.min_order >= 1.8,
          fmt("extrapolated error %.3g, raw 401x64 error %.3g, observed order %.3g", cmp.max_extrapolated_error,
              cmp.max_raw_error, cmp.min_order)};
}

Outcome criterion_10() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> value(1.0, 5.0);
  std::uniform_int_distribution<int> length(2, 40);
  DeterminantConfig dc;
  dc.times = log_time_grid(1e-4, 20.0, 200);
  dc.order = 4;
  dc.fit.window = {1e-4, 1e-2};
  dc.fit.residual_threshold = 1e-6;
  dc.zeta.split = 1e-2;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = length(rng);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = value(rng);
    for (auto& v : b) v = value(rng);
    const double exact = finite_matrix_relative_det(a, b);
    const double piped = finite_spectrum_determinant(a, b, dc).determinant;
    worst = std::max(worst, std::abs(piped - exact) / std::abs(exact));
  }
  return {worst <= 1e-6, fmt("max relative deviation %.3g over 20 spectra", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const Report* sweep = nullptr;
  Report sweep_report;
  auto sweep_run = [&]() -> const Report& {
    if (!sweep) {
      sweep_report = run(ScenarioKind::SurgerySweep);
      sweep = &sweep_report;
    }
    return *sweep;
  };

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion_1},
      {2, criterion_2},
      {3,
       [] {
         return from_checks(run(ScenarioKind::IsospectralCheck),
                            {"relative_trace_vanishes", "heat_invariants_vanish", "determinant_is_one"});
       }},
      {4, [&] { return from_checks(sweep_run(), {"gap_lower_bound"}); }},
      {5, [&] { return from_checks(sweep_run(), {"a0_drift", "a1_drift", "a0_matches_area"}); }},
      {6,
       [&] {
         Outcome o = from_checks(sweep_run(), {"log_det_drift"});
         const Outcome f = from_checks(run(ScenarioKind::FunnelConformalCheck), {"log_det_unchanged"});
         return Outcome{o.passed && f.passed, o.detail + "; funnel change " + f.detail};
       }},
      {7, [] { return from_checks(run(ScenarioKind::DecayCheck), {"long_time_decay"}); }},
      {8,
       [] {
         return from_checks(run(ScenarioKind::ContinuityCheck),
                            {"dsup_non_increasing", "dsup_baseline_eps0.40", "dsup_baseline_eps0.20",
                             "dsup_baseline_eps0.10", "dsup_baseline_eps0.05"});
       }},
      {9, [] { return from_checks(run(ScenarioKind::OffdiagCheck), {"offdiag_sup_finite", "offdiag_refinement_stable"}); }},
      {10, criterion_10},
  };

  int failures = 0;
  int ran = 0;
  for (const auto& [id, body] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    ++ran;
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::printf("criterion %d: %s  %s\n", id, o.passed ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
