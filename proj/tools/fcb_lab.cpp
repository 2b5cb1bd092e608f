#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fcb/parallel.hpp"
#include "fcb/scenario.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kAssertionFailed = 1;
constexpr int kConfigError = 2;

const char* kFooter = R"(Environment:
  FCB_WORKERS   number of worker threads for per-mode solves (default: hardware concurrency)

Exit codes:
  0  every check passed
  1  at least one check failed, or a stage failed while running
  2  the configuration (or the report directory) could not be read

CSV files written into the output directory:
  sweep.csv            epsilon,gap_a,gap_b,volume_ratio,a0,a1,a2,a3,fit_residual,shifted_a0,shifted_a1,log_det,error_budget
  trace_eps<E>.csv     t,value,tail_bound      relative heat trace of the pair at epsilon E
  trace*.csv           t,value,tail_bound      relative heat trace; tail_bound bounds the Weyl truncation
  weight_a.csv         s,w                     conformal weight of surface A on the cylinder chart
  eigensystem_a.csv    m,index,multiplicity,lambda
  flat_cylinder.csv    index,computed,exact
  oracle.csv           index,mode_sum,oracle_fine,oracle_coarse,oracle_extrapolated
  decay.csv            epsilon,t,value,bound
  continuity.csv       epsilon,dsup
  offdiag.csv          t,integral,integral_refined
Every run also writes summary.json (checks, summary numbers, resolved config) and,
when a stage fails, a FAILED marker holding the message.
)";

void print_report(const nlohmann::json& summary) {
  std::printf("%s (%s): %s\n", summary.value("name", "?").c_str(), summary.value("scenario", "?").c_str(),
              summary.value("passed", false) ? "PASS" : "FAIL");
  if (summary.contains("failure") && !summary["failure"].is_null())
    std::printf("  failure: %s\n", summary["failure"].get<std::string>().c_str());
  for (const auto& c : summary.value("checks", nlohmann::json::array())) {
    std::printf("  %-4s %-32s value %-14.6g tolerance %-10.3g %s\n", c.value("passed", false) ? "ok" : "FAIL",
                c.value("name", "").c_str(), c.value("value", 0.0), c.value("tolerance", 0.0),
                c.value("detail", "").c_str());
  }
}

int finish(const fcb::Report& report, const std::string& dir) {
  fcb::write_report(report, dir);
  print_report(report.to_json());
  std::printf("  output: %s (%.1f s)\n", dir.c_str(), report.wall_clock_seconds);
  return report.passed() ? kPass : kAssertionFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative heat traces and determinants on rotationally symmetric surfaces with cusps and funnels"};
  app.footer(kFooter);
  app.require_subcommand(1);

  std::string config_path, out_dir, validate_dir = "out/validate", report_dir, dump_kind;
  bool with_oracle = false;

  auto* run = app.add_subcommand("run", "Run the scenario described by a JSON config");
  run->add_option("config", config_path, "Scenario config (JSON)");
  run->add_option("-o,--out", out_dir, "Output directory (overrides output_dir in the config)");
  run->add_option("--print-default", dump_kind,
                  "Print the default config of a scenario kind and exit (validate, surgery_sweep, isospectral_check, "
                  "decay_check, continuity_check, funnel_conformal_check, offdiag_check)");

  auto* validate = app.add_subcommand("validate", "Check the solver on the flat cylinder (and optionally the 2D oracle)");
  validate->add_option("-o,--out", validate_dir, "Output directory")->capture_default_str();
  validate->add_flag("--oracle", with_oracle, "Also compare against the direct 2D discretization");

  auto* report = app.add_subcommand("report", "Print the checks stored in an output directory");
  report->add_option("dir", report_dir, "Output directory of a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) {
      if (!dump_kind.empty()) {
        std::cout << fcb::to_json(fcb::default_config(fcb::scenario_kind_from_string(dump_kind))).dump(2) << '\n';
        return kPass;
      }
      if (config_path.empty()) throw fcb::ConfigError("run needs a config file");
      fcb::ScenarioConfig config = fcb::load_scenario_config(config_path);
      if (config.workers <= 0) config.workers = fcb::worker_count();
      const std::string dir = out_dir.empty() ? config.output_dir : out_dir;
      return finish(fcb::run_scenario(config), dir);
    }
    if (*validate) {
      fcb::ScenarioConfig config = fcb::default_config(fcb::ScenarioKind::Validate);
      config.oracle.enabled = with_oracle;
      config.workers = fcb::worker_count();
      return finish(fcb::run_scenario(config), validate_dir);
    }
    if (*report) {
      const auto path = std::filesystem::path(report_dir) / "summary.json";
      std::ifstream in(path);
      if (!in) throw fcb::ConfigError("no summary.json in " + report_dir);
      nlohmann::json summary;
      try {
        in >> summary;
      } catch (const nlohmann::json::exception& e) {
        throw fcb::ConfigError(path.string() + " is not valid JSON: " + e.what());
      }
      print_report(summary);
      return summary.value("passed", false) ? kPass : kAssertionFailed;
    }
  } catch (const fcb::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kAssertionFailed;
  }
  return kPass;
}
