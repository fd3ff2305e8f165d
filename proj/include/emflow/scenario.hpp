#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emflow/background.hpp"
#include "emflow/errors.hpp"
#include "emflow/flow.hpp"
#include "emflow/functionals.hpp"

namespace emflow {

/// Scenario text could not be parsed or validated. line() is 0 when the
/// problem is not tied to a line (a missing key, a --set override).
class ScenarioError : public InvalidArgument {
 public:
  ScenarioError(int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct BackgroundSpec {
  std::string family;  // rn | flat | table
  int n = 3;
  double mass = 1.0;
  double charge = 0.0;
  std::filesystem::path table_path;
};

struct FlowSpec {
  std::string engine = "radial";  // radial | axisym
  double r0 = 0.0;
  double deform = 0.0;  // axisym only: rho = r0 (1 + deform cos^2 theta)
  std::filesystem::path profile_path;
  double t_end = 1.0;
  double dt = 1e-3;
  int nodes = 200;
  Homology homology = Homology::Null;
  FlowSettings settings;
};

struct OutputSpec {
  std::filesystem::path directory = "out";
  std::vector<std::string> formats{"csv", "json", "text"};
};

struct ToleranceSpec {
  double closed_form = kClosedFormTolerance;
  double quadrature = kQuadratureTolerance;
  double field = 1e-8;
  double smootheness = 1e-6;
  double evolution = 1e-5;
  double monotonicity = kClosedFormTolerance;
  double limit = 1e-3;
};

/// Parameter lists of a sweep; an absent list means "the base value".
struct SweepSpec {
  std::optional<std::vector<double>> mass, charge, r0;
  std::optional<std::vector<int>> n;
};

struct Scenario {
  std::string name = "scenario";
  BackgroundSpec background;
  FlowSpec flow;
  std::vector<std::string> checks;
  OutputSpec output;
  ToleranceSpec tolerances;
  SweepSpec sweep;
  std::string canonical_text;  // source text plus overrides; hashed into the manifest
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"field_residuals", "lemma_qrt", "smootheness",
                                            "evolution",       "monotonicity", "minkowski",
                                            "photon",          "limit",        "audit"};
  return ids;
}

/// Parses sectioned key = value text. Overrides have the form
/// `section.key=value` (or `key=value` for top-level keys) and are applied
/// after the text. Relative paths resolve against base_dir.
Scenario parse_scenario(std::string_view text, const std::vector<std::string>& overrides = {},
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides = {});

BackgroundModel build_model(const BackgroundSpec& spec);
Hypersurface initial_surface(const Scenario& s, const BackgroundModel& model);

struct CheckRecord {
  std::string id;
  InequalityReport report;
};

struct RunManifest {
  std::string name;
  std::string scenario_hash;
  std::string tool_version;
  std::string started;
  std::string finished;
  std::vector<CheckRecord> checks;
  std::vector<std::filesystem::path> outputs;

  /// 0 when every verdict holds or every failure carries a violated: flag.
  int exit_code() const;
};

/// Runs the flow, evaluates the requested checks and writes the outputs.
/// Engine failures become Error records rather than exceptions.
RunManifest run_scenario(const Scenario& s);

/// Runs the flow only and writes trace.csv; returns the trace.
FunctionalTrace run_flow(const Scenario& s);

void write_trace_csv(std::ostream& out, const FunctionalTrace& trace);

struct SweepRow {
  double mass = 0.0;
  double charge = 0.0;
  int n = 3;
  double r0 = 0.0;
  std::string status;  // ok | skipped | error
  bool q_monotone = false;
  double qrt_slack = 0.0;
  bool photon_exists = false;
  double photon_radius = 0.0;
  double horizon_radius = 0.0;
  double Q0 = 0.0;
  std::string reason;
};

/// Radial-engine sweep over the cartesian product of the sweep lists, in
/// fixed (mass, charge, n, r0) order regardless of thread count.
std::vector<SweepRow> sweep(const Scenario& base, int threads = 1);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

std::string scenario_hash(std::string_view text);

}  // namespace emflow
