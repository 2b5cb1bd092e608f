#pragma once

#include <json.hpp>
#include <ostream>
#include <string>

#include "fcb/discretize.hpp"
#include "fcb/geometry.hpp"
#include "fcb/spectral.hpp"

namespace fcb {

nlohmann::json to_json(const EndModel& end);
EndModel end_model_from_json(const nlohmann::json& j, const EndModel& defaults = {});

nlohmann::json to_json(const SurfaceSpec& spec);
/// Missing fields keep their defaults; unknown fields are rejected.
SurfaceSpec surface_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Truncation& trunc);
Truncation truncation_from_json(const nlohmann::json& j);

/// "s,w" rows on n equally spaced chart points.
void write_weight_csv(std::ostream& out, const MetricProfile& profile, int n);
/// "m,index,multiplicity,lambda" rows in ascending mode, then index.
void write_eigensystem_csv(std::ostream& out, const Eigensystem& sys);
/// "t,value,tail_bound" rows.
void write_trace_csv(std::ostream& out, const TraceSeries& series);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace fcb
