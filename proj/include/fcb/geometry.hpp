#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fcb {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double s) const { return s >= lo && s <= hi; }
  bool overlaps(const Interval& other) const { return lo < other.hi && other.lo < hi; }
};

/// Quintic C^2 step falling from 1 (u <= 0) to 0 (u >= 1).
double smoothstep_down(double u);

/// Cutoff equal to 1 on [0, 1/4] and 0 on [1/2, inf); used for sigma, eta and zeta.
double surgery_cutoff(double r);

/// Conformal factor of the surgery that fills a cusp at a marked point.
/// Throws std::domain_error at (epsilon, r) = (0, 0).
double surgery_factor_point(double epsilon, double r);

/// log of surgery_factor_point, evaluated without underflow for tiny r.
double log_surgery_factor_point(double epsilon, double r);

/// Conformal factor of the surgery that pushes a boundary circle to a funnel.
/// psi = exp(eta(eps) zeta(r) [w - log(eps^2 + r^2)]) with w = -f_value.
double surgery_factor_boundary(double epsilon, double r, double f_value);
double log_surgery_factor_boundary(double epsilon, double r, double f_value);

enum class EndKind { Cusp, Funnel, DirichletBoundary, FilledCap };

std::string to_string(EndKind kind);
EndKind end_kind_from_string(const std::string& name);

/// Boundary condition carried by a truncated chart endpoint. CapRule is the
/// smooth-centre surrogate: Neumann for the m = 0 mode, Dirichlet otherwise.
enum class BoundaryCondition { Dirichlet, Neumann, CapRule };

std::string to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(const std::string& name);

/// Resolve a boundary condition for a given Fourier mode.
BoundaryCondition resolve_for_mode(BoundaryCondition bc, int mode);

/// Model of one end of the cylinder, in the end's own local coordinate:
/// x for funnels (e^c / x^2, infinity at x -> 0), s = -log r for cusps and
/// caps (e^f / s^2, puncture at s -> inf), r for boundary collars (e^f, boundary at r = 0).
struct EndModel {
  EndKind kind = EndKind::Cusp;
  /// Local coordinate at the junction with the core.
  double junction = 1.0;
  /// Surgery parameter for FilledCap ends.
  double cap_epsilon = 0.0;
  /// Locally constant conformal exponent of the end: c for funnels, f otherwise.
  double conformal_constant = 0.0;
};

/// Bump added to 2*phi inside the core: amplitude * chi((s - center) / radius)
/// with chi(u) = exp(1 - 1 / (1 - u^2)) on |u| < 1.
struct BumpSpec {
  double center = 4.0;
  double radius = 1.0;
  double amplitude = 0.0;

  Interval support() const { return {center - radius, center + radius}; }
  double value(double s) const;
};

/// Conformal change e^{psi_F} applied on a funnel end: psi_F equals `value`
/// for x <= inner and vanishes for x >= outer.
struct FunnelConformalChange {
  bool on_left = true;
  double value = 0.0;
  double inner = 0.25;
  double outer = 0.5;
};

struct SurfaceSpec {
  EndModel left_end{EndKind::Funnel, 1.0, 0.0, 0.0};
  EndModel right_end{EndKind::Cusp, 1.0, 0.0, 0.0};
  double core_length = 8.0;
  /// Plateau value of 2*phi in the core.
  double core_log_weight = 0.0;
  /// Width of the blend between an end model and the core plateau.
  double core_blend = 0.5;
  BumpSpec bump;
  /// Surgery at whichever end is a DirichletBoundary collar.
  std::optional<double> boundary_surgery_epsilon;
  std::optional<FunnelConformalChange> funnel_change;

  /// Throws std::invalid_argument when the spec is inconsistent.
  void validate() const;
};

/// Where each end is cut and which condition the cut carries.
struct Truncation {
  /// Geodesic distance from the funnel junction (or from r = 1/4 for a surgered collar) to the cut.
  double funnel_distance = 3.0;
  /// Local cusp coordinate of the cut for Cusp ends.
  double cusp_cut = 40.0;
  /// Local cusp coordinate of the cut for FilledCap ends (any epsilon, including 0).
  double cap_cut = 14.0;
};

struct EndTruncation {
  EndKind kind = EndKind::Cusp;
  double cut_local = 0.0;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
};

struct TruncationNote {
  EndTruncation left;
  EndTruncation right;
};

/// Conformal weight w(s) = e^{2 phi(s)} of a rotationally symmetric surface on
/// the cylinder chart [s_min, s_max] x S^1 (circle of length 2*pi).
/// The core occupies [0, core_length]; ends extend to the left and right.
class MetricProfile {
 public:
  MetricProfile(SurfaceSpec spec, Interval chart, TruncationNote note);

  const SurfaceSpec& spec() const { return spec_; }
  const Interval& chart() const { return chart_; }
  const TruncationNote& truncation() const { return note_; }
  std::pair<EndModel, EndModel> ends() const { return {spec_.left_end, spec_.right_end}; }

  double log_weight(double s) const;
  double weight(double s) const;
  /// Weight of the unperturbed end model alone (no blend, bump or surgery).
  double end_model_log_weight(bool left, double s) const;

  /// Local end coordinate at global s (extended into the core).
  double local_coordinate(bool left, double s) const;

  /// Global interval outside which the surface equals its end models exactly.
  Interval perturbation_free_core() const;

  /// Sample (s, w) pairs on n equally spaced points of the chart.
  std::vector<std::pair<double, double>> sample(int n) const;

 private:
  double base_log_weight(double s) const;
  double end_log_weight(const EndModel& end, double local) const;
  double surgery_log_factor(double s) const;
  double funnel_change_log_factor(double s) const;

  SurfaceSpec spec_;
  Interval chart_;
  TruncationNote note_;
};

/// Assemble the single-chart weight for a surface. Throws std::invalid_argument
/// on inconsistent specs or truncation parameters.
MetricProfile build_weight(const SurfaceSpec& spec, const Truncation& trunc = {});

/// 2*pi * integral of (w_a - w_b) over the chart. Throws std::invalid_argument if
/// the profiles differ on an end.
double relative_area(const MetricProfile& a, const MetricProfile& b, double abs_tol = 1e-12);

/// sup_s w_a(s) / w_b(s) over the common chart, sampled on `samples` points plus `extra_points`.
double volume_ratio(const MetricProfile& a, const MetricProfile& b, int samples = 20001,
                    const std::vector<double>& extra_points = {});

/// Geodesic distance along the cylinder axis, integral of sqrt(w) ds.
double axial_distance(const MetricProfile& profile, double s0, double s1);

}  // namespace fcb
