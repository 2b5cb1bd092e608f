#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcb/discretize.hpp"
#include "fcb/geometry.hpp"
#include "fcb/oracle.hpp"
#include "fcb/spectral.hpp"
#include "fcb/zeta.hpp"

namespace fcb {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind {
  Validate,
  SurgerySweep,
  IsospectralCheck,
  DecayCheck,
  ContinuityCheck,
  FunnelConformalCheck,
  OffdiagCheck,
};

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct DiscretizationConfig {
  int nodes = 4000;
  double lambda_cut = 1000.0;
  /// "graded" (arc-length adapted) or "uniform".
  std::string grid = "graded";
  double grading_beta = 0.1;
  Truncation truncation;
};

struct TimeGridConfig {
  double t_min = 0.02;
  double t_max = 20.0;
  int count = 60;
  std::vector<double> build() const { return log_time_grid(t_min, t_max, count); }
};

struct FitConfig {
  int order = 3;
  Interval window{0.02, 0.3};
  Interval shifted_window{0.03, 0.4};
  double residual_threshold = 1e-4;
};

struct OffdiagConfig {
  Interval region{1.5, 2.5};
  CylinderPoint y{0.75, 0.0};
  CylinderPoint y_prime{3.25, 0.5};
  double t_min = 0.05;
  double t_max = 1.0;
  int t_count = 20;
  int theta_points = 64;
  /// The check is repeated on a grid with refinement * nodes.
  int refinement = 2;
};

struct OracleConfig {
  bool enabled = false;
  int count = 20;
  int axial_nodes = 401;
  int theta_points = 64;
};

struct Tolerances {
  double flat_spectrum = 1e-5;
  double oracle = 1e-3;
  double invariant_drift = 5e-3;
  double area_match = 1e-3;
  double log_det_drift = 1e-2;
  double continuity_monotone = 1e-4;
  double offdiag_stability = 0.05;
  /// Relative tolerance for regression-pinned baselines.
  double baseline = 1e-6;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Validate;
  std::string name = "scenario";
  SurfaceSpec surface_a;
  SurfaceSpec surface_b;
  /// Which end of the surfaces carries the cusp surgery in sweeps.
  bool surgery_on_left = false;
  std::vector<double> epsilon_grid;
  /// epsilon values, in the order checked, for the continuity scenario.
  std::vector<double> continuity_grid{0.4, 0.2, 0.1, 0.05};
  /// Regression baselines for Dsup, keyed by epsilon; checked when present.
  std::vector<std::pair<double, double>> dsup_baseline;
  FunnelConformalChange funnel_change;
  TimeGridConfig times;
  /// Decay check time interval.
  Interval decay_window{10.0, 20.0};
  DiscretizationConfig discretization;
  FitConfig fit;
  OffdiagConfig offdiag;
  OracleConfig oracle;
  Tolerances tolerances;
  std::string output_dir = "out";
  std::uint64_t seed = 20240601;
  int workers = 0;
};

/// Defaults for each kind: the surfaces used by the acceptance suite.
ScenarioConfig default_config(ScenarioKind kind);

nlohmann::json to_json(const ScenarioConfig& config);
/// Throws ConfigError on malformed documents, unknown fields or invalid values.
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Table {
  std::string file;  // relative to the output directory
  std::string body;  // CSV text including header
};

struct Report {
  std::string scenario;
  std::string name;
  std::vector<Check> checks;
  std::vector<Table> tables;
  nlohmann::json summary;  // scenario-specific numbers
  nlohmann::json config;
  double wall_clock_seconds = 0.0;
  /// Set when a stage threw; the message names the stage.
  std::optional<std::string> failure;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Run a scenario. Stage failures are captured in Report::failure rather than thrown.
Report run_scenario(const ScenarioConfig& config);

/// Write summary.json and all tables into config.output_dir (a FAILED marker file on failure).
void write_report(const Report& report, const std::filesystem::path& dir);

// Building blocks shared by the scenarios and the acceptance suite.

/// Grid built from the unperturbed reference of a surface (bump removed, caps at epsilon 0,
/// no funnel change), so that every member of a family shares it.
std::shared_ptr<const Grid> family_grid(const SurfaceSpec& surface, const DiscretizationConfig& disc);

SurfaceSpec with_cap_epsilon(SurfaceSpec spec, bool left, double epsilon);

struct FlatCylinderCheck {
  std::vector<double> computed;
  std::vector<double> exact;
  double max_relative_error = 0.0;
  std::size_t count_below_10 = 0;
};
/// Dirichlet cylinder [0, pi] x S^1 with unit weight on a uniform grid.
FlatCylinderCheck flat_cylinder_check(int nodes, int values = 12);

struct OracleComparison {
  std::vector<double> mode_sum;
  std::vector<double> fine;        // 2D, axial_nodes x theta_points
  std::vector<double> coarse;      // 2D, about half of both
  std::vector<double> extrapolated;
  double max_raw_error = 0.0;
  double max_extrapolated_error = 0.0;
  double min_order = 0.0;
};
OracleComparison oracle_comparison(const SurfaceSpec& surface, const DiscretizationConfig& disc,
                                   const OracleConfig& oracle);

struct SweepMember {
  double epsilon = 0.0;
  double gap_a = 0.0;
  double gap_b = 0.0;
  double volume_ratio = 1.0;
  HeatInvariants invariants;
  HeatInvariants shifted_invariants;
  DeterminantResult determinant;
  /// Relative trace on 21 equally spaced times of the decay window.
  TraceSeries decay;
};

struct SweepResult {
  std::vector<SweepMember> members;
  double relative_area = 0.0;  // at epsilon = 0
  double uniform_gap = 0.0;
  double max_volume_ratio = 1.0;
};

/// Solve the pair (A_eps, B_eps) for every epsilon; epsilon 0 must be in the grid.
/// Without determinants only the gaps, volume ratios and decay traces are filled in.
SweepResult surgery_sweep(const ScenarioConfig& config, const std::vector<double>& epsilons,
                          bool determinants = true);

struct OffdiagStudy {
  std::vector<double> times;
  std::vector<double> values;         // I(t) on the base grid
  std::vector<double> refined_values; // I(t) on the refined grid
  double distance = 0.0;
  double sup_exponent = 0.0;          // sup_t [log I + d^2 / 8t], base grid
  double refined_sup_exponent = 0.0;
  double relative_change = 0.0;       // |C_G(refined) / C_G(base) - 1|
};
OffdiagStudy offdiag_study(const ScenarioConfig& config);

}  // namespace fcb
