#include <doctest.h>

#include <sstream>

#include "fcb/io.hpp"

using namespace fcb;

TEST_CASE("surface spec survives a JSON round trip") {
  SurfaceSpec spec;
  spec.left_end = {EndKind::DirichletBoundary, 0.75, 0.0, 0.1};
  spec.right_end = {EndKind::FilledCap, 1.0, 0.3, 0.0};
  spec.core_length = 5.0;
  spec.core_log_weight = -0.25;
  spec.bump = {2.0, 0.5, 0.125};
  spec.boundary_surgery_epsilon = 0.2;
  const nlohmann::json j = to_json(spec);
  const SurfaceSpec back = surface_spec_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.right_end.cap_epsilon == 0.3);
  CHECK(*back.boundary_surgery_epsilon == 0.2);
  CHECK(to_json(surface_spec_from_json(nlohmann::json::parse(j.dump()))) == j);
}

TEST_CASE("missing fields keep defaults and unknown fields are rejected") {
  const SurfaceSpec spec = surface_spec_from_json(nlohmann::json::parse(R"({"core_length": 3.5})"));
  CHECK(spec.core_length == 3.5);
  CHECK(spec.left_end.kind == SurfaceSpec{}.left_end.kind);
  CHECK_THROWS(surface_spec_from_json(nlohmann::json::parse(R"({"core_lenght": 3.5})")));
  CHECK_THROWS(surface_spec_from_json(nlohmann::json::parse(R"({"bump": {"centre": 1}})")));
  CHECK_THROWS(surface_spec_from_json(nlohmann::json::parse(R"({"left_end": {"kind": "horn"}})")));
  CHECK_THROWS(surface_spec_from_json(nlohmann::json::parse(R"([1, 2])")));
}

TEST_CASE("truncation round trip") {
  Truncation t;
  t.funnel_distance = 2.5;
  t.cusp_cut = 12.0;
  CHECK(to_json(truncation_from_json(to_json(t))) == to_json(t));
}

TEST_CASE("CSV writers emit their headers") {
  SurfaceSpec spec;
  spec.bump = {4.0, 1.0, 0.0};
  const MetricProfile p = build_weight(spec);
  std::ostringstream w;
  write_weight_csv(w, p, 5);
  std::string line;
  std::istringstream in(w.str());
  std::getline(in, line);
  CHECK(line == "s,w");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);

  TraceSeries s;
  s.times = {0.5, 1.0};
  s.values = {0.25, -0.125};
  s.tail_bound = {0.0, 0.0};
  std::ostringstream t;
  write_trace_csv(t, s);
  CHECK(t.str().rfind("t,value,tail_bound\n0.5,0.25,0\n", 0) == 0);

  const auto grid = std::make_shared<const Grid>(Grid::graded(p, 200));
  std::ostringstream e;
  write_eigensystem_csv(e, solve_modes(p, grid, 5.0));
  CHECK(e.str().rfind("m,index,multiplicity,lambda\n", 0) == 0);
}

TEST_CASE("doubles are written in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
