#include "fcb/io.hpp"

#include <charconv>
#include <set>
#include <stdexcept>

namespace fcb {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument(where + ": unknown field '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json to_json(const EndModel& end) {
  return {{"kind", to_string(end.kind)},
          {"junction", end.junction},
          {"cap_epsilon", end.cap_epsilon},
          {"conformal_constant", end.conformal_constant}};
}

EndModel end_model_from_json(const json& j, const EndModel& defaults) {
  reject_unknown(j, {"kind", "junction", "cap_epsilon", "conformal_constant"}, "end");
  EndModel end = defaults;
  if (j.contains("kind")) end.kind = end_kind_from_string(j.at("kind").get<std::string>());
  read(j, "junction", end.junction);
  read(j, "cap_epsilon", end.cap_epsilon);
  read(j, "conformal_constant", end.conformal_constant);
  return end;
}

json to_json(const SurfaceSpec& spec) {
  json j = {{"left_end", to_json(spec.left_end)},
            {"right_end", to_json(spec.right_end)},
            {"core_length", spec.core_length},
            {"core_log_weight", spec.core_log_weight},
            {"core_blend", spec.core_blend},
            {"bump", {{"center", spec.bump.center}, {"radius", spec.bump.radius}, {"amplitude", spec.bump.amplitude}}}};
  j["boundary_surgery_epsilon"] = spec.boundary_surgery_epsilon ? json(*spec.boundary_surgery_epsilon) : json(nullptr);
  if (spec.funnel_change) {
    const auto& c = *spec.funnel_change;
    j["funnel_change"] = {{"side", c.on_left ? "left" : "right"}, {"value", c.value}, {"inner", c.inner}, {"outer", c.outer}};
  } else {
    j["funnel_change"] = nullptr;
  }
  return j;
}

SurfaceSpec surface_spec_from_json(const json& j) {
  reject_unknown(j,
                 {"left_end", "right_end", "core_length", "core_log_weight", "core_blend", "bump",
                  "boundary_surgery_epsilon", "funnel_change"},
                 "surface");
  SurfaceSpec spec;
  if (j.contains("left_end")) spec.left_end = end_model_from_json(j.at("left_end"), spec.left_end);
  if (j.contains("right_end")) spec.right_end = end_model_from_json(j.at("right_end"), spec.right_end);
  read(j, "core_length", spec.core_length);
  read(j, "core_log_weight", spec.core_log_weight);
  read(j, "core_blend", spec.core_blend);
  if (j.contains("bump")) {
    const json& b = j.at("bump");
    reject_unknown(b, {"center", "radius", "amplitude"}, "bump");
    read(b, "center", spec.bump.center);
    read(b, "radius", spec.bump.radius);
    read(b, "amplitude", spec.bump.amplitude);
  }
  if (j.contains("boundary_surgery_epsilon") && !j.at("boundary_surgery_epsilon").is_null())
    spec.boundary_surgery_epsilon = j.at("boundary_surgery_epsilon").get<double>();
  if (j.contains("funnel_change") && !j.at("funnel_change").is_null()) {
    const json& c = j.at("funnel_change");
    reject_unknown(c, {"side", "value", "inner", "outer"}, "funnel_change");
    FunnelConformalChange change;
    if (c.contains("side")) {
      const auto side = c.at("side").get<std::string>();
      if (side != "left" && side != "right") throw std::invalid_argument("funnel_change.side must be left or right");
      change.on_left = side == "left";
    }
    read(c, "value", change.value);
    read(c, "inner", change.inner);
    read(c, "outer", change.outer);
    spec.funnel_change = change;
  }
  return spec;
}

json to_json(const Truncation& t) {
  return {{"funnel_distance", t.funnel_distance}, {"cusp_cut", t.cusp_cut}, {"cap_cut", t.cap_cut}};
}

Truncation truncation_from_json(const json& j) {
  reject_unknown(j, {"funnel_distance", "cusp_cut", "cap_cut"}, "truncation");
  Truncation t;
  read(j, "funnel_distance", t.funnel_distance);
  read(j, "cusp_cut", t.cusp_cut);
  read(j, "cap_cut", t.cap_cut);
  return t;
}

void write_weight_csv(std::ostream& out, const MetricProfile& profile, int n) {
  out << "s,w\n";
  for (const auto& [s, w] : profile.sample(n)) out << format_double(s) << ',' << format_double(w) << '\n';
}

void write_eigensystem_csv(std::ostream& out, const Eigensystem& sys) {
  out << "m,index,multiplicity,lambda\n";
  for (const auto& mode : sys.modes)
    for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j)
      out << mode.mode << ',' << j + 1 << ',' << mode.multiplicity << ',' << format_double(mode.eigenvalues[j]) << '\n';
}

void write_trace_csv(std::ostream& out, const TraceSeries& series) {
  out << "t,value,tail_bound\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format_double(series.times[i]) << ',' << format_double(series.values[i]) << ','
        << format_double(series.tail_bound[i]) << '\n';
}

}  // namespace fcb
