#include "fcb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fcb/quadrature.hpp"

namespace fcb {

namespace {

constexpr double kLog2 = std::numbers::ln2;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// log psi_point at r = e^{-s}; exact for any s > 0 without forming r^2 log^2 r / s^2 naively.
double log_point_factor_from_s(double epsilon, double s) {
  const double r = std::exp(-s);
  const double sigma = surgery_cutoff(r);
  if (sigma == 0.0 || epsilon == 0.0) return 0.0;
  const double r2 = std::exp(-2.0 * s);
  const double e2 = epsilon * epsilon;
  const double q = e2 + r2;
  const double half_log_q = 0.5 * std::log(q);
  const double ratio = (r2 * s * s) / (e2 + q * half_log_q * half_log_q);
  return std::log(sigma * ratio + (1.0 - sigma));
}

bool outward_increasing(EndKind kind) {
  return kind == EndKind::Cusp || kind == EndKind::FilledCap;
}

}  // namespace

double smoothstep_down(double u) {
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  const double u3 = u * u * u;
  return 1.0 - u3 * (10.0 - 15.0 * u + 6.0 * u * u);
}

double surgery_cutoff(double r) { return smoothstep_down((r - 0.25) / 0.25); }

double surgery_factor_point(double epsilon, double r) {
  if (!(r >= 0.0)) throw std::domain_error("surgery_factor_point: r must be nonnegative");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::domain_error("surgery_factor_point: epsilon must lie in [0, 1]");
  if (epsilon == 0.0 && r == 0.0)
    throw std::domain_error("surgery_factor_point: (0, 0) is the cusp tip, not a point of the surface");
  const double sigma = surgery_cutoff(r);
  if (sigma == 0.0 || epsilon == 0.0) return 1.0;
  if (r == 0.0) return 1.0 - sigma;
  const double log_r = std::log(r);
  const double e2 = epsilon * epsilon;
  const double q = e2 + r * r;
  const double half_log_q = 0.5 * std::log(q);
  const double ratio = (r * r * log_r * log_r) / (e2 + q * half_log_q * half_log_q);
  return sigma * ratio + (1.0 - sigma);
}

double log_surgery_factor_point(double epsilon, double r) {
  if (r > 0.0 && epsilon >= 0.0 && epsilon <= 1.0) return log_point_factor_from_s(epsilon, -std::log(r));
  return std::log(surgery_factor_point(epsilon, r));
}

double log_surgery_factor_boundary(double epsilon, double r, double f_value) {
  if (!(r >= 0.0)) throw std::domain_error("surgery_factor_boundary: r must be nonnegative");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::domain_error("surgery_factor_boundary: epsilon must lie in [0, 1]");
  if (epsilon == 0.0 && r == 0.0)
    throw std::domain_error("surgery_factor_boundary: at epsilon = 0 the boundary lies at infinite distance");
  const double gate = surgery_cutoff(epsilon) * surgery_cutoff(r);
  if (gate == 0.0) return 0.0;
  const double w = -f_value;
  return gate * (w - std::log(epsilon * epsilon + r * r));
}

double surgery_factor_boundary(double epsilon, double r, double f_value) {
  return std::exp(log_surgery_factor_boundary(epsilon, r, f_value));
}

std::string to_string(EndKind kind) {
  switch (kind) {
    case EndKind::Cusp: return "cusp";
    case EndKind::Funnel: return "funnel";
    case EndKind::DirichletBoundary: return "dirichlet_boundary";
    case EndKind::FilledCap: return "filled_cap";
  }
  return "unknown";
}

EndKind end_kind_from_string(const std::string& name) {
  if (name == "cusp") return EndKind::Cusp;
  if (name == "funnel") return EndKind::Funnel;
  if (name == "dirichlet_boundary") return EndKind::DirichletBoundary;
  if (name == "filled_cap") return EndKind::FilledCap;
  throw std::invalid_argument("unknown end kind: " + name);
}

std::string to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::Dirichlet: return "dirichlet";
    case BoundaryCondition::Neumann: return "neumann";
    case BoundaryCondition::CapRule: return "cap_rule";
  }
  return "unknown";
}

BoundaryCondition boundary_condition_from_string(const std::string& name) {
  if (name == "dirichlet") return BoundaryCondition::Dirichlet;
  if (name == "neumann") return BoundaryCondition::Neumann;
  if (name == "cap_rule") return BoundaryCondition::CapRule;
  throw std::invalid_argument("unknown boundary condition: " + name);
}

BoundaryCondition resolve_for_mode(BoundaryCondition bc, int mode) {
  if (bc != BoundaryCondition::CapRule) return bc;
  return mode == 0 ? BoundaryCondition::Neumann : BoundaryCondition::Dirichlet;
}

double BumpSpec::value(double s) const {
  if (amplitude == 0.0) return 0.0;
  const double u = (s - center) / radius;
  if (std::abs(u) >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - u * u));
}

namespace {

// Global interval on which an end's local coordinate satisfies pred-bounds.
// For an end whose coordinate decreases outward (funnel, collar), local < bound
// is the outer side; for cusps local > bound is the outer side.
double global_position(const SurfaceSpec& spec, bool left, double local) {
  const EndModel& end = left ? spec.left_end : spec.right_end;
  const double outward = outward_increasing(end.kind) ? local - end.junction : end.junction - local;
  return left ? -outward : spec.core_length + outward;
}

// Global interval where the surgery/conformal change of an end can differ from 1.
std::optional<Interval> end_modification_support(const SurfaceSpec& spec, bool left) {
  const EndModel& end = left ? spec.left_end : spec.right_end;
  double bound = 0.0;
  bool active = false;
  if (end.kind == EndKind::FilledCap) {
    bound = kLog2;  // sigma vanishes for r > 1/2
    active = true;
  } else if (end.kind == EndKind::DirichletBoundary && spec.boundary_surgery_epsilon) {
    bound = 0.5;
    active = true;
  } else if (end.kind == EndKind::Funnel && spec.funnel_change && spec.funnel_change->on_left == left) {
    bound = spec.funnel_change->outer;
    active = true;
  }
  if (!active) return std::nullopt;
  const double edge = global_position(spec, left, bound);
  constexpr double big = 1e300;
  return left ? Interval{-big, edge} : Interval{edge, big};
}

}  // namespace

void SurfaceSpec::validate() const {
  require(core_length > 0.0, "core_length must be positive");
  require(core_blend > 0.0 && 2.0 * core_blend <= core_length,
          "core_blend must be positive and at most half the core length");
  require(bump.radius > 0.0, "bump radius must be positive");
  for (bool left : {true, false}) {
    const EndModel& end = left ? left_end : right_end;
    const std::string side = left ? "left" : "right";
    require(end.junction > 0.0, side + " end: junction coordinate must be positive");
    if (end.kind == EndKind::Cusp || end.kind == EndKind::FilledCap)
      require(end.junction > core_blend, side + " end: cusp junction must exceed the core blend width");
    if (end.kind == EndKind::FilledCap)
      require(end.cap_epsilon >= 0.0 && end.cap_epsilon <= 1.0, side + " end: cap_epsilon must lie in [0, 1]");
    if (end.kind == EndKind::DirichletBoundary && boundary_surgery_epsilon)
      require(end.junction > 0.5, side + " end: surgered collar must extend past r = 1/2");
  }
  if (boundary_surgery_epsilon) {
    require(*boundary_surgery_epsilon >= 0.0 && *boundary_surgery_epsilon <= 1.0,
            "boundary_surgery_epsilon must lie in [0, 1]");
    require(left_end.kind == EndKind::DirichletBoundary || right_end.kind == EndKind::DirichletBoundary,
            "boundary surgery needs a dirichlet_boundary end");
  }
  if (funnel_change) {
    const EndModel& end = funnel_change->on_left ? left_end : right_end;
    require(end.kind == EndKind::Funnel, "funnel_change must sit on a funnel end");
    require(funnel_change->inner > 0.0 && funnel_change->inner < funnel_change->outer &&
                funnel_change->outer <= end.junction,
            "funnel_change needs 0 < inner < outer <= funnel junction");
  }
  const Interval plateau{core_blend, core_length - core_blend};
  const Interval support = bump.support();
  require(support.lo > plateau.lo && support.hi < plateau.hi,
          "bump support must lie strictly inside the core plateau");
  for (bool left : {true, false}) {
    if (auto mod = end_modification_support(*this, left)) {
      require(!mod->overlaps(support) && !mod->contains(support.lo) && !mod->contains(support.hi),
              "bump support overlaps an end surgery or conformal change");
    }
  }
}

MetricProfile::MetricProfile(SurfaceSpec spec, Interval chart, TruncationNote note)
    : spec_(std::move(spec)), chart_(chart), note_(note) {}

double MetricProfile::local_coordinate(bool left, double s) const {
  const EndModel& end = left ? spec_.left_end : spec_.right_end;
  const double outward = left ? -s : s - spec_.core_length;
  return outward_increasing(end.kind) ? end.junction + outward : end.junction - outward;
}

double MetricProfile::end_log_weight(const EndModel& end, double local) const {
  switch (end.kind) {
    case EndKind::Funnel:
    case EndKind::Cusp:
    case EndKind::FilledCap:
      return end.conformal_constant - 2.0 * std::log(local);
    case EndKind::DirichletBoundary:
      return end.conformal_constant;
  }
  return 0.0;
}

double MetricProfile::end_model_log_weight(bool left, double s) const {
  return end_log_weight(left ? spec_.left_end : spec_.right_end, local_coordinate(left, s));
}

double MetricProfile::base_log_weight(double s) const {
  const double length = spec_.core_length;
  if (s <= 0.0) return end_model_log_weight(true, s);
  if (s >= length) return end_model_log_weight(false, s);
  const double alpha_left = smoothstep_down(s / spec_.core_blend);
  const double alpha_right = smoothstep_down((length - s) / spec_.core_blend);
  const double alpha_core = 1.0 - alpha_left - alpha_right;
  double value = alpha_core * spec_.core_log_weight;
  if (alpha_left > 0.0) value += alpha_left * end_model_log_weight(true, s);
  if (alpha_right > 0.0) value += alpha_right * end_model_log_weight(false, s);
  return value;
}

double MetricProfile::surgery_log_factor(double s) const {
  double value = 0.0;
  for (bool left : {true, false}) {
    const EndModel& end = left ? spec_.left_end : spec_.right_end;
    const double local = local_coordinate(left, s);
    if (end.kind == EndKind::FilledCap && local > kLog2) {
      value += log_point_factor_from_s(end.cap_epsilon, local);
    } else if (end.kind == EndKind::DirichletBoundary && spec_.boundary_surgery_epsilon && local < 0.5) {
      value += log_surgery_factor_boundary(*spec_.boundary_surgery_epsilon, std::max(local, 0.0),
                                           end.conformal_constant);
    }
  }
  return value;
}

double MetricProfile::funnel_change_log_factor(double s) const {
  if (!spec_.funnel_change) return 0.0;
  const auto& change = *spec_.funnel_change;
  const double x = local_coordinate(change.on_left, s);
  return change.value * smoothstep_down((x - change.inner) / (change.outer - change.inner));
}

double MetricProfile::log_weight(double s) const {
  return base_log_weight(s) + spec_.bump.value(s) + surgery_log_factor(s) + funnel_change_log_factor(s);
}

double MetricProfile::weight(double s) const { return std::exp(log_weight(s)); }

Interval MetricProfile::perturbation_free_core() const { return {0.0, spec_.core_length}; }

std::vector<std::pair<double, double>> MetricProfile::sample(int n) const {
  require(n >= 2, "sample: need at least two points");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = (i + 1 == n) ? chart_.hi : chart_.lo + chart_.length() * i / (n - 1);
    out.emplace_back(s, weight(s));
  }
  return out;
}

MetricProfile build_weight(const SurfaceSpec& spec, const Truncation& trunc) {
  spec.validate();
  require(trunc.funnel_distance > 0.0, "truncation: funnel_distance must be positive");
  require(trunc.cusp_cut > 0.0 && trunc.cap_cut > 0.0, "truncation: cusp and cap cuts must be positive");

  TruncationNote note;
  double extent[2] = {0.0, 0.0};
  for (int side = 0; side < 2; ++side) {
    const bool left = side == 0;
    const EndModel& end = left ? spec.left_end : spec.right_end;
    EndTruncation cut;
    cut.kind = end.kind;
    switch (end.kind) {
      case EndKind::Funnel:
        cut.cut_local = end.junction * std::exp(-trunc.funnel_distance);
        cut.bc = BoundaryCondition::Dirichlet;
        break;
      case EndKind::Cusp:
        require(trunc.cusp_cut > end.junction, "truncation: cusp cut must lie beyond the junction");
        cut.cut_local = trunc.cusp_cut;
        cut.bc = BoundaryCondition::Dirichlet;
        break;
      case EndKind::FilledCap:
        require(trunc.cap_cut > end.junction, "truncation: cap cut must lie beyond the junction");
        cut.cut_local = trunc.cap_cut;
        cut.bc = BoundaryCondition::CapRule;
        break;
      case EndKind::DirichletBoundary:
        cut.cut_local = spec.boundary_surgery_epsilon ? 0.25 * std::exp(-trunc.funnel_distance) : 0.0;
        cut.bc = BoundaryCondition::Dirichlet;
        break;
    }
    extent[side] = std::abs(cut.cut_local - end.junction);
    (left ? note.left : note.right) = cut;
  }
  const Interval chart{-extent[0], spec.core_length + extent[1]};
  return MetricProfile(spec, chart, note);
}

double relative_area(const MetricProfile& a, const MetricProfile& b, double abs_tol) {
  const Interval ca = a.chart();
  const Interval cb = b.chart();
  require(std::abs(ca.lo - cb.lo) <= 1e-12 * (1.0 + std::abs(ca.lo)) &&
              std::abs(ca.hi - cb.hi) <= 1e-12 * (1.0 + std::abs(ca.hi)),
          "relative_area: profiles live on different charts");
  const Interval core = a.perturbation_free_core();
  constexpr int kProbe = 4000;
  for (const Interval& end : {Interval{ca.lo, core.lo}, Interval{core.hi, ca.hi}}) {
    for (int i = 0; i <= kProbe; ++i) {
      const double s = end.lo + end.length() * i / kProbe;
      const double la = a.log_weight(s);
      const double lb = b.log_weight(s);
      if (std::abs(la - lb) > 1e-12)
        throw std::invalid_argument("relative_area: weights differ on an end; integral does not converge");
    }
  }
  auto integrand = [&](double s) { return a.weight(s) - b.weight(s); };
  const auto result = adaptive_simpson(integrand, core.lo, core.hi, abs_tol / (2.0 * std::numbers::pi), 64);
  return 2.0 * std::numbers::pi * result.value;
}

double volume_ratio(const MetricProfile& a, const MetricProfile& b, int samples,
                    const std::vector<double>& extra_points) {
  require(samples >= 2, "volume_ratio: need at least two samples");
  const Interval chart = a.chart();
  double best = 0.0;
  auto probe = [&](double s) { best = std::max(best, a.log_weight(s) - b.log_weight(s)); };
  for (int i = 0; i < samples; ++i) probe(chart.lo + chart.length() * i / (samples - 1));
  for (double s : extra_points) probe(s);
  return std::exp(best);
}

double axial_distance(const MetricProfile& profile, double s0, double s1) {
  if (s1 < s0) std::swap(s0, s1);
  auto root_weight = [&](double s) { return std::exp(0.5 * profile.log_weight(s)); };
  return adaptive_simpson(root_weight, s0, s1, 1e-10, 32).value;
}

}  // namespace fcb
