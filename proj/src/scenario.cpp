#include "fcb/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fcb/io.hpp"

namespace fcb {

using nlohmann::json;

namespace {

const std::vector<std::pair<ScenarioKind, std::string>> kKindNames = {
    {ScenarioKind::Validate, "validate"},
    {ScenarioKind::SurgerySweep, "surgery_sweep"},
    {ScenarioKind::IsospectralCheck, "isospectral_check"},
    {ScenarioKind::DecayCheck, "decay_check"},
    {ScenarioKind::ContinuityCheck, "continuity_check"},
    {ScenarioKind::FunnelConformalCheck, "funnel_conformal_check"},
    {ScenarioKind::OffdiagCheck, "offdiag_check"},
};

SurfaceSpec bump_surface(EndKind right_kind) {
  SurfaceSpec spec;
  spec.left_end = {EndKind::Funnel, 1.0, 0.0, 0.0};
  spec.right_end = {right_kind, 1.0, 0.0, 0.0};
  spec.core_length = 8.0;
  spec.bump = {4.0, 1.0, 0.5};
  return spec;
}

SurfaceSpec without_bump(SurfaceSpec spec) {
  spec.bump.amplitude = 0.0;
  return spec;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
  return grid;
}

Check make_check(std::string name, bool passed, double value, double tolerance, std::string detail = {}) {
  return Check{std::move(name), passed, value, tolerance, std::move(detail)};
}

std::string eps_tag(double eps) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << eps;
  return os.str();
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [lo, hi]");
  Interval i{j[0].get<double>(), j[1].get<double>()};
  if (!(i.hi > i.lo)) throw ConfigError(where + ": need lo < hi");
  return i;
}

json point_json(const CylinderPoint& p) { return json::array({p.s, p.theta}); }

CylinderPoint point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [s, theta]");
  return {j[0].get<double>(), j[1].get<double>()};
}

MetricProfile profile_of(const SurfaceSpec& spec, const DiscretizationConfig& disc) {
  return build_weight(spec, disc.truncation);
}

Eigensystem solve(const SurfaceSpec& spec, const std::shared_ptr<const Grid>& grid, const DiscretizationConfig& disc,
                  int workers, const std::string& label, bool vectors = false) {
  SolveOptions opts;
  opts.workers = workers;
  opts.label = label;
  opts.store_vectors = vectors;
  return solve_modes(profile_of(spec, disc), grid, disc.lambda_cut, opts);
}

DeterminantConfig determinant_config(const ScenarioConfig& c) {
  DeterminantConfig dc;
  dc.times = c.times.build();
  dc.order = c.fit.order;
  dc.fit.window = c.fit.window;
  dc.fit.residual_threshold = c.fit.residual_threshold;
  dc.zeta.t_max = c.times.t_max;
  return dc;
}

std::string trace_csv(const TraceSeries& s) {
  std::ostringstream os;
  write_trace_csv(os, s);
  return os.str();
}

std::string weight_csv(const SurfaceSpec& spec, const DiscretizationConfig& disc) {
  std::ostringstream os;
  write_weight_csv(os, profile_of(spec, disc), 2001);
  return os.str();
}

double dsup_between(const TraceSeries& a, const TraceSeries& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

const SweepMember& member_at(const SweepResult& sweep, double eps) {
  for (const auto& m : sweep.members)
    if (std::abs(m.epsilon - eps) < 1e-12) return m;
  throw std::invalid_argument("sweep has no member at epsilon " + std::to_string(eps));
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ConfigError("unknown scenario kind: " + name);
}

ScenarioConfig default_config(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  c.name = to_string(kind);
  c.output_dir = "out/" + c.name;
  switch (kind) {
    case ScenarioKind::Validate:
      c.surface_a = bump_surface(EndKind::Cusp);
      c.surface_b = without_bump(c.surface_a);
      break;
    case ScenarioKind::SurgerySweep:
    case ScenarioKind::DecayCheck:
    case ScenarioKind::ContinuityCheck:
      c.surface_a = bump_surface(EndKind::FilledCap);
      c.surface_b = without_bump(c.surface_a);
      c.epsilon_grid = default_epsilon_grid();
      if (kind == ScenarioKind::ContinuityCheck) {
        c.epsilon_grid = {0.0, 0.05, 0.1, 0.2, 0.4};
        c.dsup_baseline = {{0.4, 0.004586771714484676},
                           {0.2, 0.0034081401300427236},
                           {0.1, 0.0024334525773998944},
                           {0.05, 0.001763617542533888}};
      }
      if (kind == ScenarioKind::DecayCheck) {
        // A constant conformal factor e^{kappa} divides every eigenvalue by e^{kappa}, so the
        // window [10, 20] probes the family at times 20 times longer.
        const double kappa = -std::log(20.0);
        for (SurfaceSpec* s : {&c.surface_a, &c.surface_b}) {
          s->left_end.conformal_constant = kappa;
          s->right_end.conformal_constant = kappa;
          s->core_log_weight = kappa;
        }
      }
      break;
    case ScenarioKind::IsospectralCheck:
      c.surface_a = bump_surface(EndKind::Cusp);
      c.surface_b = c.surface_a;
      break;
    case ScenarioKind::FunnelConformalCheck:
      c.surface_a = bump_surface(EndKind::Cusp);
      c.surface_b = without_bump(c.surface_a);
      c.funnel_change = {true, 0.5, 0.25, 0.5};
      break;
    case ScenarioKind::OffdiagCheck: {
      SurfaceSpec s;
      s.left_end = {EndKind::DirichletBoundary, 1.0, 0.0, 0.0};
      s.right_end = {EndKind::Cusp, 1.0, 0.0, 0.0};
      s.core_length = 4.0;
      s.bump = {2.0, 0.5, 0.0};
      c.surface_a = s;
      c.surface_b = s;
      c.discretization.nodes = 2000;
      c.discretization.truncation.cusp_cut = 10.0;
      break;
    }
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = to_string(c.kind);
  j["name"] = c.name;
  j["surface_a"] = to_json(c.surface_a);
  j["surface_b"] = to_json(c.surface_b);
  j["surgery_end"] = c.surgery_on_left ? "left" : "right";
  j["epsilon_grid"] = c.epsilon_grid;
  j["continuity_grid"] = c.continuity_grid;
  json baseline = json::array();
  for (const auto& [eps, value] : c.dsup_baseline) baseline.push_back({{"epsilon", eps}, {"dsup", value}});
  j["dsup_baseline"] = baseline;
  j["funnel_change"] = {{"side", c.funnel_change.on_left ? "left" : "right"},
                        {"value", c.funnel_change.value},
                        {"inner", c.funnel_change.inner},
                        {"outer", c.funnel_change.outer}};
  j["times"] = {{"t_min", c.times.t_min}, {"t_max", c.times.t_max}, {"count", c.times.count}};
  j["decay_window"] = interval_json(c.decay_window);
  j["discretization"] = {{"nodes", c.discretization.nodes},
                         {"lambda_cut", c.discretization.lambda_cut},
                         {"grid", c.discretization.grid},
                         {"grading_beta", c.discretization.grading_beta},
                         {"truncation", to_json(c.discretization.truncation)}};
  j["fit"] = {{"order", c.fit.order},
              {"window", interval_json(c.fit.window)},
              {"shifted_window", interval_json(c.fit.shifted_window)},
              {"residual_threshold", c.fit.residual_threshold}};
  j["offdiag"] = {{"region", interval_json(c.offdiag.region)},
                  {"y", point_json(c.offdiag.y)},
                  {"y_prime", point_json(c.offdiag.y_prime)},
                  {"t_min", c.offdiag.t_min},
                  {"t_max", c.offdiag.t_max},
                  {"t_count", c.offdiag.t_count},
                  {"theta_points", c.offdiag.theta_points},
                  {"refinement", c.offdiag.refinement}};
  j["oracle"] = {{"enabled", c.oracle.enabled},
                 {"count", c.oracle.count},
                 {"axial_nodes", c.oracle.axial_nodes},
                 {"theta_points", c.oracle.theta_points}};
  const Tolerances& t = c.tolerances;
  j["tolerances"] = {{"flat_spectrum", t.flat_spectrum},       {"oracle", t.oracle},
                     {"invariant_drift", t.invariant_drift},   {"area_match", t.area_match},
                     {"log_det_drift", t.log_det_drift},       {"continuity_monotone", t.continuity_monotone},
                     {"offdiag_stability", t.offdiag_stability}, {"baseline", t.baseline}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

ScenarioConfig scenario_config_from_json(const json& j) {
  try {
    reject_unknown(j,
                   {"scenario", "name", "surface_a", "surface_b", "surgery_end", "epsilon_grid", "continuity_grid",
                    "dsup_baseline", "funnel_change", "times", "decay_window", "discretization", "fit", "offdiag",
                    "oracle", "tolerances", "output_dir", "seed", "workers"},
                   "config");
    if (!j.contains("scenario")) throw ConfigError("config: missing 'scenario'");
    ScenarioConfig c = default_config(scenario_kind_from_string(j.at("scenario").get<std::string>()));
    read(j, "name", c.name);
    if (j.contains("surface_a")) c.surface_a = surface_spec_from_json(j.at("surface_a"));
    if (j.contains("surface_b")) c.surface_b = surface_spec_from_json(j.at("surface_b"));
    if (j.contains("surgery_end")) {
      const auto side = j.at("surgery_end").get<std::string>();
      if (side != "left" && side != "right") throw ConfigError("surgery_end must be left or right");
      c.surgery_on_left = side == "left";
    }
    read(j, "epsilon_grid", c.epsilon_grid);
    read(j, "continuity_grid", c.continuity_grid);
    if (j.contains("dsup_baseline")) {
      c.dsup_baseline.clear();
      for (const auto& e : j.at("dsup_baseline")) {
        reject_unknown(e, {"epsilon", "dsup"}, "dsup_baseline");
        c.dsup_baseline.emplace_back(e.at("epsilon").get<double>(), e.at("dsup").get<double>());
      }
    }
    if (j.contains("funnel_change")) {
      const json& f = j.at("funnel_change");
      reject_unknown(f, {"side", "value", "inner", "outer"}, "funnel_change");
      if (f.contains("side")) c.funnel_change.on_left = f.at("side").get<std::string>() == "left";
      read(f, "value", c.funnel_change.value);
      read(f, "inner", c.funnel_change.inner);
      read(f, "outer", c.funnel_change.outer);
    }
    if (j.contains("times")) {
      const json& t = j.at("times");
      reject_unknown(t, {"t_min", "t_max", "count"}, "times");
      read(t, "t_min", c.times.t_min);
      read(t, "t_max", c.times.t_max);
      read(t, "count", c.times.count);
    }
    if (j.contains("decay_window")) c.decay_window = interval_from(j.at("decay_window"), "decay_window");
    if (j.contains("discretization")) {
      const json& d = j.at("discretization");
      reject_unknown(d, {"nodes", "lambda_cut", "grid", "grading_beta", "truncation"}, "discretization");
      read(d, "nodes", c.discretization.nodes);
      read(d, "lambda_cut", c.discretization.lambda_cut);
      read(d, "grid", c.discretization.grid);
      read(d, "grading_beta", c.discretization.grading_beta);
      if (d.contains("truncation")) c.discretization.truncation = truncation_from_json(d.at("truncation"));
    }
    if (j.contains("fit")) {
      const json& f = j.at("fit");
      reject_unknown(f, {"order", "window", "shifted_window", "residual_threshold"}, "fit");
      read(f, "order", c.fit.order);
      if (f.contains("window")) c.fit.window = interval_from(f.at("window"), "fit.window");
      if (f.contains("shifted_window")) c.fit.shifted_window = interval_from(f.at("shifted_window"), "fit.shifted_window");
      read(f, "residual_threshold", c.fit.residual_threshold);
    }
    if (j.contains("offdiag")) {
      const json& o = j.at("offdiag");
      reject_unknown(o, {"region", "y", "y_prime", "t_min", "t_max", "t_count", "theta_points", "refinement"},
                     "offdiag");
      if (o.contains("region")) c.offdiag.region = interval_from(o.at("region"), "offdiag.region");
      if (o.contains("y")) c.offdiag.y = point_from(o.at("y"), "offdiag.y");
      if (o.contains("y_prime")) c.offdiag.y_prime = point_from(o.at("y_prime"), "offdiag.y_prime");
      read(o, "t_min", c.offdiag.t_min);
      read(o, "t_max", c.offdiag.t_max);
      read(o, "t_count", c.offdiag.t_count);
      read(o, "theta_points", c.offdiag.theta_points);
      read(o, "refinement", c.offdiag.refinement);
    }
    if (j.contains("oracle")) {
      const json& o = j.at("oracle");
      reject_unknown(o, {"enabled", "count", "axial_nodes", "theta_points"}, "oracle");
      read(o, "enabled", c.oracle.enabled);
      read(o, "count", c.oracle.count);
      read(o, "axial_nodes", c.oracle.axial_nodes);
      read(o, "theta_points", c.oracle.theta_points);
    }
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      reject_unknown(t,
                     {"flat_spectrum", "oracle", "invariant_drift", "area_match", "log_det_drift",
                      "continuity_monotone", "offdiag_stability", "baseline"},
                     "tolerances");
      Tolerances& tol = c.tolerances;
      read(t, "flat_spectrum", tol.flat_spectrum);
      read(t, "oracle", tol.oracle);
      read(t, "invariant_drift", tol.invariant_drift);
      read(t, "area_match", tol.area_match);
      read(t, "log_det_drift", tol.log_det_drift);
      read(t, "continuity_monotone", tol.continuity_monotone);
      read(t, "offdiag_stability", tol.offdiag_stability);
      read(t, "baseline", tol.baseline);
    }
    read(j, "output_dir", c.output_dir);
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);

    // Validation of values that would otherwise fail deep inside the pipeline.
    c.surface_a.validate();
    c.surface_b.validate();
    if (c.discretization.nodes < 16) throw ConfigError("discretization.nodes must be at least 16");
    if (!(c.discretization.lambda_cut > 0.0)) throw ConfigError("discretization.lambda_cut must be positive");
    if (c.discretization.grid != "graded" && c.discretization.grid != "uniform")
      throw ConfigError("discretization.grid must be 'graded' or 'uniform'");
    if (!(c.times.t_min > 0.0 && c.times.t_max > c.times.t_min && c.times.count >= 2))
      throw ConfigError("times: need 0 < t_min < t_max and count >= 2");
    if (c.fit.order < 1) throw ConfigError("fit.order must be at least 1");
    for (double e : c.epsilon_grid)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon_grid entries must lie in [0, 1]");
    if (c.offdiag.refinement < 2) throw ConfigError("offdiag.refinement must be at least 2");
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return scenario_config_from_json(j);
}

bool Report::passed() const {
  if (failure) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json Report::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["name"] = name;
  j["passed"] = passed();
  j["failure"] = failure ? json(*failure) : json(nullptr);
  json cs = json::array();
  for (const Check& c : checks)
    cs.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance},
                  {"detail", c.detail}});
  j["checks"] = cs;
  j["summary"] = summary;
  json files = json::array();
  for (const Table& t : tables) files.push_back(t.file);
  j["tables"] = files;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["config"] = config;
  return j;
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Table& t : report.tables) {
    std::ofstream out(dir / t.file, std::ios::binary);
    out << t.body;
  }
  std::ofstream(dir / "summary.json") << report.to_json().dump(2) << '\n';
  const auto marker = dir / "FAILED";
  if (report.failure) {
    std::ofstream(marker) << *report.failure << '\n';
  } else if (std::filesystem::exists(marker)) {
    std::filesystem::remove(marker);
  }
}

std::shared_ptr<const Grid> family_grid(const SurfaceSpec& surface, const DiscretizationConfig& disc) {
  SurfaceSpec ref = without_bump(surface);
  ref.funnel_change.reset();
  if (ref.left_end.kind == EndKind::FilledCap) ref.left_end.cap_epsilon = 0.0;
  if (ref.right_end.kind == EndKind::FilledCap) ref.right_end.cap_epsilon = 0.0;
  const MetricProfile profile = build_weight(ref, disc.truncation);
  if (disc.grid == "uniform") {
    const auto& note = profile.truncation();
    return std::make_shared<const Grid>(Grid::uniform(profile.chart(), disc.nodes, note.left.bc, note.right.bc));
  }
  return std::make_shared<const Grid>(Grid::graded(profile, disc.nodes, disc.grading_beta));
}

SurfaceSpec with_cap_epsilon(SurfaceSpec spec, bool left, double epsilon) {
  EndModel& end = left ? spec.left_end : spec.right_end;
  if (end.kind != EndKind::FilledCap) throw std::invalid_argument("surgery end is not a filled_cap end");
  end.cap_epsilon = epsilon;
  return spec;
}

FlatCylinderCheck flat_cylinder_check(int nodes, int values) {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.right_end = {EndKind::DirichletBoundary, 0.5, 0.0, 0.0};
  spec.core_length = std::numbers::pi - 1.0;
  spec.core_blend = 0.25;
  spec.bump = {spec.core_length / 2, 0.25, 0.0};
  const MetricProfile profile = build_weight(spec);
  auto grid = std::make_shared<const Grid>(
      Grid::uniform(profile.chart(), nodes, BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet));
  const Eigensystem sys = solve_modes(profile, grid, 40.0);
  FlatCylinderCheck out;
  const auto all = sys.flattened();
  std::vector<double> exact;
  for (int k = 1; k <= 7; ++k)
    for (int m = 0; m <= 6; ++m)
      for (int c = 0; c < (m == 0 ? 1 : 2); ++c) exact.push_back(static_cast<double>(k * k + m * m));
  std::sort(exact.begin(), exact.end());
  for (int i = 0; i < values; ++i) {
    out.computed.push_back(all.at(static_cast<std::size_t>(i)));
    out.exact.push_back(exact.at(static_cast<std::size_t>(i)));
    out.max_relative_error =
        std::max(out.max_relative_error, std::abs(out.computed.back() - out.exact.back()) / out.exact.back());
  }
  out.count_below_10 = static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [](double l) { return l <= 10.0 + 1e-6; }));
  return out;
}

OracleComparison oracle_comparison(const SurfaceSpec& surface, const DiscretizationConfig& disc,
                                   const OracleConfig& oracle) {
  const MetricProfile profile = build_weight(surface, disc.truncation);
  auto grid = family_grid(surface, disc);
  const Eigensystem sys = solve_modes(profile, grid, std::max(50.0, 4.0 * oracle.count));
  const auto all = sys.flattened();
  OracleComparison out;
  out.mode_sum.assign(all.begin(), all.begin() + oracle.count);
  SurfaceSpec ref = without_bump(surface);
  const MetricProfile ref_profile = build_weight(ref, disc.truncation);
  const Grid2D fine{Grid::graded(ref_profile, oracle.axial_nodes, disc.grading_beta), oracle.theta_points};
  const Grid2D coarse{Grid::graded(ref_profile, (oracle.axial_nodes + 1) / 2, disc.grading_beta),
                      oracle.theta_points / 2};
  out.fine = low_eigenvalues_2d(profile, fine, oracle.count).eigenvalues;
  out.coarse = low_eigenvalues_2d(profile, coarse, oracle.count).eigenvalues;
  out.min_order = INFINITY;
  for (int i = 0; i < oracle.count; ++i) {
    const double f = out.fine[static_cast<std::size_t>(i)];
    const double c = out.coarse[static_cast<std::size_t>(i)];
    const double ref_value = out.mode_sum[static_cast<std::size_t>(i)];
    // Both sides are second order; halving every spacing removes the leading error term.
    out.extrapolated.push_back((4.0 * f - c) / 3.0);
    out.max_raw_error = std::max(out.max_raw_error, std::abs(f - ref_value) / ref_value);
    out.max_extrapolated_error =
        std::max(out.max_extrapolated_error, std::abs(out.extrapolated.back() - ref_value) / ref_value);
    const double order = std::log2(std::abs(c - ref_value) / std::abs(f - ref_value));
    out.min_order = std::min(out.min_order, order);
  }
  return out;
}

SweepResult surgery_sweep(const ScenarioConfig& c, const std::vector<double>& epsilons, bool determinants) {
  if (std::find(epsilons.begin(), epsilons.end(), 0.0) == epsilons.end())
    throw std::invalid_argument("surgery sweep needs epsilon = 0 in its grid");
  const auto grid = family_grid(c.surface_b, c.discretization);
  const bool left = c.surgery_on_left;
  const DeterminantConfig dc = determinant_config(c);
  const SurfaceSpec a0 = with_cap_epsilon(c.surface_a, left, 0.0);
  const MetricProfile a0_profile = profile_of(a0, c.discretization);

  SweepResult out;
  out.relative_area =
      relative_area(a0_profile, profile_of(with_cap_epsilon(c.surface_b, left, 0.0), c.discretization));
  out.uniform_gap = INFINITY;
  for (double eps : epsilons) {
    const SurfaceSpec sa = with_cap_epsilon(c.surface_a, left, eps);
    const SurfaceSpec sb = with_cap_epsilon(c.surface_b, left, eps);
    const Eigensystem A = solve(sa, grid, c.discretization, c.workers, "A_eps" + eps_tag(eps));
    const Eigensystem B = solve(sb, grid, c.discretization, c.workers, "B_eps" + eps_tag(eps));
    SweepMember m;
    m.epsilon = eps;
    m.gap_a = spectral_gap(A);
    m.gap_b = spectral_gap(B);
    m.volume_ratio = volume_ratio(profile_of(sa, c.discretization), a0_profile, 20001, grid->nodes);
    std::vector<double> decay_times;
    for (int i = 0; i <= 20; ++i)
      decay_times.push_back(c.decay_window.lo + (c.decay_window.hi - c.decay_window.lo) * i / 20.0);
    m.decay = relative_trace_series(A, B, decay_times);
    if (determinants) {
      m.determinant = relative_determinant(A, B, dc);
      m.invariants = m.determinant.invariants;
      FitOptions shifted;
      shifted.window = c.fit.shifted_window;
      shifted.residual_threshold = INFINITY;
      m.shifted_invariants = fit_heat_invariants(m.determinant.series, c.fit.order, shifted);
    }
    out.uniform_gap = std::min({out.uniform_gap, m.gap_a, m.gap_b});
    out.max_volume_ratio = std::max(out.max_volume_ratio, m.volume_ratio);
    out.members.push_back(std::move(m));
  }
  return out;
}

OffdiagStudy offdiag_study(const ScenarioConfig& c) {
  OffdiagStudy out;
  out.times = log_time_grid(c.offdiag.t_min, c.offdiag.t_max, c.offdiag.t_count);
  const MetricProfile profile = profile_of(c.surface_a, c.discretization);
  for (int level = 0; level < 2; ++level) {
    DiscretizationConfig disc = c.discretization;
    if (level == 1) disc.nodes *= c.offdiag.refinement;
    const auto grid = family_grid(c.surface_a, disc);
    const Eigensystem sys = solve(c.surface_a, grid, disc, c.workers, "offdiag", true);
    auto& values = level == 0 ? out.values : out.refined_values;
    double sup = -INFINITY;
    for (double t : out.times) {
      const OffDiagonalResult r =
          offdiag_l2_integral(sys, profile, t, c.offdiag.region, c.offdiag.y, c.offdiag.y_prime, c.offdiag.theta_points);
      values.push_back(r.value);
      out.distance = r.distance;
      sup = std::max(sup, std::log(r.value) + r.distance * r.distance / (8.0 * t));
    }
    (level == 0 ? out.sup_exponent : out.refined_sup_exponent) = sup;
  }
  out.relative_change = std::abs(std::exp(out.refined_sup_exponent - out.sup_exponent) - 1.0);
  return out;
}

namespace {

void add_sweep_tables(Report& r, const SweepResult& sweep) {
  std::ostringstream os;
  os << "epsilon,gap_a,gap_b,volume_ratio,a0,a1,a2,a3,fit_residual,shifted_a0,shifted_a1,log_det,error_budget\n";
  for (const auto& m : sweep.members) {
    os << format_double(m.epsilon) << ',' << format_double(m.gap_a) << ',' << format_double(m.gap_b) << ','
       << format_double(m.volume_ratio);
    for (int k = 0; k < 4; ++k) os << ',' << format_double(m.invariants.coefficient(k));
    os << ',' << format_double(m.invariants.residual) << ',' << format_double(m.shifted_invariants.coefficient(0))
       << ',' << format_double(m.shifted_invariants.coefficient(1)) << ','
       << format_double(-m.determinant.zeta_prime_zero) << ',' << format_double(m.determinant.budget.total()) << '\n';
  }
  r.tables.push_back({"sweep.csv", os.str()});
  for (const auto& m : sweep.members)
    r.tables.push_back({"trace_eps" + eps_tag(m.epsilon) + ".csv", trace_csv(m.determinant.series)});
}

void gap_checks(Report& r, const SweepResult& sweep) {
  const double gap0 = member_at(sweep, 0.0).gap_a;
  double min_gap = INFINITY;
  for (const auto& m : sweep.members) min_gap = std::min(min_gap, m.gap_a);
  const double bound = gap0 / sweep.max_volume_ratio;
  r.checks.push_back(make_check("gap_lower_bound", min_gap >= bound, min_gap, bound,
                                "min_eps gap(eps) >= gap(0) / C with C = " + format_double(sweep.max_volume_ratio)));
  r.summary["gap_at_zero"] = gap0;
  r.summary["min_gap"] = min_gap;
  r.summary["volume_ratio_constant"] = sweep.max_volume_ratio;
}

void invariant_checks(Report& r, const SweepResult& sweep, const Tolerances& tol) {
  const SweepMember& base = member_at(sweep, 0.0);
  for (int k = 0; k <= 1; ++k) {
    double drift = 0.0;
    for (const auto& m : sweep.members)
      drift = std::max(drift, std::abs(m.invariants.coefficient(k) - base.invariants.coefficient(k)));
    r.checks.push_back(make_check("a" + std::to_string(k) + "_drift", drift <= tol.invariant_drift, drift,
                                  tol.invariant_drift, "max_eps |a_k(eps) - a_k(0)|"));
  }
  const double expected = sweep.relative_area / (4.0 * std::numbers::pi);
  const double rel = std::abs(base.invariants.coefficient(0) - expected) / std::abs(expected);
  r.checks.push_back(make_check("a0_matches_area", rel <= tol.area_match, rel, tol.area_match,
                                "a_0 = " + format_double(base.invariants.coefficient(0)) +
                                    ", relative_area / 4pi = " + format_double(expected)));
  double window_shift = 0.0;
  for (int k = 0; k <= 1; ++k)
    window_shift = std::max(window_shift,
                            std::abs(base.invariants.coefficient(k) - base.shifted_invariants.coefficient(k)));
  r.summary["window_shift_a0_a1"] = window_shift;
  r.summary["fit_residual_at_zero"] = base.invariants.residual;
  r.summary["relative_area"] = sweep.relative_area;
}

void determinant_checks(Report& r, const SweepResult& sweep, const Tolerances& tol) {
  const double base = -member_at(sweep, 0.0).determinant.zeta_prime_zero;
  double drift = 0.0;
  for (const auto& m : sweep.members) drift = std::max(drift, std::abs(-m.determinant.zeta_prime_zero - base));
  r.checks.push_back(make_check("log_det_drift", drift <= tol.log_det_drift, drift, tol.log_det_drift,
                                "max_eps |log det(eps) - log det(0)|"));
  r.summary["log_det_at_zero"] = base;
  r.summary["determinant_at_zero"] = member_at(sweep, 0.0).determinant.determinant;
}

}  // namespace

Report run_scenario(const ScenarioConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  r.scenario = to_string(c.kind);
  r.name = c.name;
  r.config = to_json(c);
  std::string stage = "setup";
  try {
    switch (c.kind) {
      case ScenarioKind::Validate: {
        stage = "flat cylinder";
        const FlatCylinderCheck flat = flat_cylinder_check(c.discretization.nodes);
        r.checks.push_back(make_check("flat_cylinder_spectrum", flat.max_relative_error <= c.tolerances.flat_spectrum,
                                      flat.max_relative_error, c.tolerances.flat_spectrum,
                                      "first 12 eigenvalues against k^2 + m^2"));
        r.checks.push_back(make_check("flat_cylinder_count_below_10", flat.count_below_10 == 15,
                                      static_cast<double>(flat.count_below_10), 15.0,
                                      "eigenvalues <= 10 counted with multiplicity"));
        std::ostringstream os;
        os << "index,computed,exact\n";
        for (std::size_t i = 0; i < flat.computed.size(); ++i)
          os << i + 1 << ',' << format_double(flat.computed[i]) << ',' << format_double(flat.exact[i]) << '\n';
        r.tables.push_back({"flat_cylinder.csv", os.str()});
        if (c.oracle.enabled) {
          stage = "oracle";
          const OracleComparison cmp = oracle_comparison(c.surface_a, c.discretization, c.oracle);
          r.checks.push_back(make_check("oracle_agreement", cmp.max_extrapolated_error <= c.tolerances.oracle,
                                        cmp.max_extrapolated_error, c.tolerances.oracle,
                                        "mode sum against the refinement-extrapolated 2D spectrum"));
          r.checks.push_back(make_check("oracle_order", cmp.min_order >= 1.8, cmp.min_order, 1.8,
                                        "observed convergence order of the 2D spectrum"));
          r.summary["oracle_raw_error"] = cmp.max_raw_error;
          std::ostringstream oc;
          oc << "index,mode_sum,oracle_fine,oracle_coarse,oracle_extrapolated\n";
          for (std::size_t i = 0; i < cmp.mode_sum.size(); ++i)
            oc << i + 1 << ',' << format_double(cmp.mode_sum[i]) << ',' << format_double(cmp.fine[i]) << ','
               << format_double(cmp.coarse[i]) << ',' << format_double(cmp.extrapolated[i]) << '\n';
          r.tables.push_back({"oracle.csv", oc.str()});
        }
        break;
      }
      case ScenarioKind::SurgerySweep: {
        stage = "surgery sweep";
        const SweepResult sweep = surgery_sweep(c, c.epsilon_grid);
        gap_checks(r, sweep);
        invariant_checks(r, sweep, c.tolerances);
        determinant_checks(r, sweep, c.tolerances);
        add_sweep_tables(r, sweep);
        r.tables.push_back({"weight_a.csv", weight_csv(with_cap_epsilon(c.surface_a, c.surgery_on_left, 0.0),
                                                       c.discretization)});
        break;
      }
      case ScenarioKind::DecayCheck: {
        stage = "decay sweep";
        const SweepResult sweep = surgery_sweep(c, c.epsilon_grid, false);
        const double mu = sweep.uniform_gap;
        const double t0 = c.decay_window.lo;
        double worst = 0.0;
        std::ostringstream os;
        os << "epsilon,t,value,bound\n";
        for (const auto& m : sweep.members) {
          const auto& s = m.decay;
          const double k_prefactor = std::abs(s.values.front()) * std::exp(0.5 * mu * t0);
          for (std::size_t i = 0; i < s.size(); ++i) {
            const double bound = k_prefactor * std::exp(-0.5 * mu * s.times[i]);
            worst = std::max(worst, std::abs(s.values[i]) / bound);
            os << format_double(m.epsilon) << ',' << format_double(s.times[i]) << ',' << format_double(s.values[i])
               << ',' << format_double(bound) << '\n';
          }
        }
        r.checks.push_back(make_check("long_time_decay", worst <= 1.0, worst, 1.0,
                                      "max over t in window of |RelTr(t)| / (K e^{-mu t / 2})"));
        r.summary["uniform_gap"] = mu;
        r.tables.push_back({"decay.csv", os.str()});
        std::ostringstream gaps;
        gaps << "epsilon,gap_a,gap_b\n";
        for (const auto& m : sweep.members)
          gaps << format_double(m.epsilon) << ',' << format_double(m.gap_a) << ',' << format_double(m.gap_b) << '\n';
        r.tables.push_back({"gaps.csv", gaps.str()});
        break;
      }
      case ScenarioKind::ContinuityCheck: {
        stage = "continuity sweep";
        std::vector<double> eps{0.0};
        eps.insert(eps.end(), c.continuity_grid.begin(), c.continuity_grid.end());
        const SweepResult sweep = surgery_sweep(c, eps);
        const TraceSeries& base = member_at(sweep, 0.0).determinant.series;
        std::vector<double> dsup;
        std::ostringstream os;
        os << "epsilon,dsup\n";
        for (double e : c.continuity_grid) {
          dsup.push_back(dsup_between(member_at(sweep, e).determinant.series, base));
          os << format_double(e) << ',' << format_double(dsup.back()) << '\n';
        }
        double worst_increase = 0.0;
        for (std::size_t i = 1; i < dsup.size(); ++i) worst_increase = std::max(worst_increase, dsup[i] - dsup[i - 1]);
        r.checks.push_back(make_check("dsup_non_increasing", worst_increase <= c.tolerances.continuity_monotone,
                                      worst_increase, c.tolerances.continuity_monotone,
                                      "largest increase of Dsup along the decreasing epsilon grid"));
        for (const auto& [e, pinned] : c.dsup_baseline) {
          const auto it = std::find_if(c.continuity_grid.begin(), c.continuity_grid.end(),
                                       [&](double x) { return std::abs(x - e) < 1e-12; });
          if (it == c.continuity_grid.end()) continue;
          const double value = dsup[static_cast<std::size_t>(it - c.continuity_grid.begin())];
          const double rel = std::abs(value - pinned) / std::abs(pinned);
          r.checks.push_back(make_check("dsup_baseline_eps" + eps_tag(e), rel <= c.tolerances.baseline, rel,
                                        c.tolerances.baseline,
                                        "Dsup = " + format_double(value) + ", pinned " + format_double(pinned)));
        }
        r.summary["dsup"] = dsup;
        r.tables.push_back({"continuity.csv", os.str()});
        break;
      }
      case ScenarioKind::IsospectralCheck: {
        stage = "isospectral solve";
        const auto grid = family_grid(c.surface_b, c.discretization);
        const Eigensystem A = solve(c.surface_a, grid, c.discretization, c.workers, "A");
        const Eigensystem B = solve(c.surface_b, grid, c.discretization, c.workers, "B");
        stage = "relative determinant";
        const DeterminantResult d = relative_determinant(A, B, determinant_config(c));
        double max_trace = 0.0;
        for (double v : d.series.values) max_trace = std::max(max_trace, std::abs(v));
        double max_coeff = 0.0;
        for (double a : d.invariants.coefficients) max_coeff = std::max(max_coeff, std::abs(a));
        r.checks.push_back(make_check("relative_trace_vanishes", max_trace == 0.0, max_trace, 0.0));
        r.checks.push_back(make_check("heat_invariants_vanish", max_coeff == 0.0, max_coeff, 0.0));
        r.checks.push_back(make_check("determinant_is_one", d.determinant == 1.0, d.determinant, 1.0));
        r.summary["determinant"] = json::parse(to_json(d));
        r.tables.push_back({"trace.csv", trace_csv(d.series)});
        std::ostringstream os;
        write_eigensystem_csv(os, A);
        r.tables.push_back({"eigensystem_a.csv", os.str()});
        break;
      }
      case ScenarioKind::FunnelConformalCheck: {
        stage = "funnel conformal solve";
        const auto grid = family_grid(c.surface_b, c.discretization);
        SurfaceSpec at = c.surface_a, bt = c.surface_b;
        at.funnel_change = c.funnel_change;
        bt.funnel_change = c.funnel_change;
        const DeterminantConfig dc = determinant_config(c);
        const DeterminantResult plain =
            relative_determinant(solve(c.surface_a, grid, c.discretization, c.workers, "A"),
                                 solve(c.surface_b, grid, c.discretization, c.workers, "B"), dc);
        const DeterminantResult changed = relative_determinant(solve(at, grid, c.discretization, c.workers, "A_F"),
                                                               solve(bt, grid, c.discretization, c.workers, "B_F"), dc);
        const double diff = std::abs(plain.zeta_prime_zero - changed.zeta_prime_zero);
        r.checks.push_back(make_check("log_det_unchanged", diff <= c.tolerances.log_det_drift, diff,
                                      c.tolerances.log_det_drift, "|log det(A~, B~) - log det(A, B)|"));
        r.summary["plain"] = json::parse(to_json(plain));
        r.summary["changed"] = json::parse(to_json(changed));
        r.tables.push_back({"trace_plain.csv", trace_csv(plain.series)});
        r.tables.push_back({"trace_changed.csv", trace_csv(changed.series)});
        break;
      }
      case ScenarioKind::OffdiagCheck: {
        stage = "off-diagonal study";
        const OffdiagStudy study = offdiag_study(c);
        r.checks.push_back(make_check("offdiag_sup_finite", std::isfinite(study.sup_exponent), study.sup_exponent,
                                      0.0, "sup_t [log I(t) + d^2 / 8t]"));
        r.checks.push_back(make_check("offdiag_refinement_stable",
                                      study.relative_change <= c.tolerances.offdiag_stability, study.relative_change,
                                      c.tolerances.offdiag_stability, "relative change of C_G = e^{sup} under refinement"));
        r.summary["distance"] = study.distance;
        r.summary["sup_exponent"] = study.sup_exponent;
        r.summary["refined_sup_exponent"] = study.refined_sup_exponent;
        std::ostringstream os;
        os << "t,integral,integral_refined\n";
        for (std::size_t i = 0; i < study.times.size(); ++i)
          os << format_double(study.times[i]) << ',' << format_double(study.values[i]) << ','
             << format_double(study.refined_values[i]) << '\n';
        r.tables.push_back({"offdiag.csv", os.str()});
        break;
      }
    }
  } catch (const std::exception& e) {
    r.failure = "stage '" + stage + "' failed: " + e.what();
  }
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace fcb
