// Command-line front end: verify-background, flow, check, photon, sweep, report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "emflow/numerics.hpp"
#include "emflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace emflow;

namespace {

struct Common {
  std::string config;
  std::string out;
  bool seedless = false;
  int threads = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool needs_scenario = true) {
  if (needs_scenario) {
    cmd->add_option("--config", c.config, "Scenario file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override a scenario key, e.g. --set flow.dt=1e-3");
  }
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_flag("--seedless", c.seedless, "No randomness (always the case; reserved)");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

Scenario scenario_from(const Common& c) {
  auto overrides = c.overrides;
  if (!c.out.empty()) overrides.push_back("output.directory=" + c.out);
  return c.config.empty() ? parse_scenario("", overrides) : load_scenario(c.config, overrides);
}

int print_reports(const std::vector<InequalityReport>& reports) {
  std::cout << format_summary(reports);
  RunManifest m;
  for (const auto& r : reports) m.checks.push_back({r.statement, r});
  return m.exit_code();
}

int cmd_verify_background(const Common& c) {
  auto s = scenario_from(c);
  s.checks = {"field_residuals", "audit"};
  const auto m = run_scenario(s);
  std::vector<InequalityReport> reports;
  for (const auto& rec : m.checks) reports.push_back(rec.report);
  const int code = print_reports(reports);
  std::cout << fmt::format("outputs in {}\n", s.output.directory.string());
  return code;
}

int cmd_flow(const Common& c) {
  const auto s = scenario_from(c);
  const auto trace = run_flow(s);
  const auto& last = trace.records.back();
  std::cout << fmt::format("{} records, t = {:.6g}, r_rep = {:.10g}, Q = {:.10g}\n",
                           trace.records.size(), last.t, last.r_rep, last.Q);
  std::cout << fmt::format("trace written to {}\n", (s.output.directory / "trace.csv").string());
  return 0;
}

int cmd_check(const Common& c) {
  const auto s = scenario_from(c);
  const auto m = run_scenario(s);
  std::vector<InequalityReport> reports;
  for (const auto& rec : m.checks) reports.push_back(rec.report);
  const int code = print_reports(reports);
  std::cout << fmt::format("manifest {}\n", (s.output.directory / "manifest.json").string());
  return code;
}

int cmd_photon(const Common& c) {
  const auto s = scenario_from(c);
  const auto model = build_model(s.background);
  const auto radii = photon_sphere_radii(model);
  if (radii.empty()) std::cout << "no photon-sphere roots\n";
  for (const auto& p : radii)
    std::cout << fmt::format("photon sphere r = {:.15g} ({})\n", p.radius,
                             p.admissible ? "admissible" : "not admissible");
  try {
    const auto report = photon_corollary_check(model);
    return print_reports({report});
  } catch (const NoPhotonSphere& e) {
    std::cout << e.what() << '\n';
    return 0;
  }
}

int cmd_sweep(const Common& c) {
  const auto s = scenario_from(c);
  const auto rows = sweep(s, c.threads);
  fs::create_directories(s.output.directory);
  const auto path = s.output.directory / "sweep.csv";
  std::ofstream out(path, std::ios::binary);
  write_sweep_csv(out, rows);
  write_sweep_csv(std::cout, rows);
  int code = 0;
  for (const auto& r : rows)
    if (r.status == "error") code = 1;
  return code;
}

int cmd_report(const Common& c, const std::string& path_arg) {
  fs::path path = path_arg.empty() ? fs::path(c.out.empty() ? "out" : c.out) : fs::path(path_arg);
  if (fs::is_directory(path)) path /= "report.csv";
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open report '{}'", path.string()));
  return print_reports(read_report_csv(in));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emflow: static Einstein-Maxwell backgrounds, IMCF and monotone functionals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EMFLOW_VERSION);

  Common common;
  std::string report_path;
  auto* verify = app.add_subcommand("verify-background", "Field-equation residuals and audit");
  auto* flow = app.add_subcommand("flow", "Run the flow and write trace.csv");
  auto* check = app.add_subcommand("check", "Run the flow and evaluate the scenario checks");
  auto* photon = app.add_subcommand("photon", "Photon spheres and the corollary check");
  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep over [sweep] lists");
  auto* report = app.add_subcommand("report", "Summarise an existing report.csv");
  for (auto* cmd : {verify, flow, check, photon, sweep_cmd}) add_common(cmd, common);
  add_common(report, common, false);
  report->add_option("path", report_path, "report.csv or a directory containing it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return cmd_verify_background(common);
    if (*flow) return cmd_flow(common);
    if (*check) return cmd_check(common);
    if (*photon) return cmd_photon(common);
    if (*sweep_cmd) return cmd_sweep(common);
    if (*report) return cmd_report(common, report_path);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
