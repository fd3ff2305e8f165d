#include "emflow/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include "emflow/csv.hpp"
#include "emflow/numerics.hpp"

#ifndef EMFLOW_VERSION
#define EMFLOW_VERSION "0.0.0"
#endif

namespace emflow {

ScenarioError::ScenarioError(int line, const std::string& what)
    : InvalidArgument(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return std::string(s);
}

// Where a setting came from, for error messages.
struct Origin {
  int line = 0;
  std::string label;  // "--set flow.dt" for overrides

  [[noreturn]] void fail(const std::string& what) const {
    throw ScenarioError(line, label.empty() ? what : fmt::format("{}: {}", label, what));
  }
};

double as_double(std::string_view value, const std::string& key, const Origin& at) {
  const std::string v = unquote(value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    at.fail(fmt::format("key '{}' expects a number, got '{}'", key, v));
  return out;
}

int as_int(std::string_view value, const std::string& key, const Origin& at) {
  const std::string v = unquote(value);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    at.fail(fmt::format("key '{}' expects an integer, got '{}'", key, v));
  return out;
}

std::vector<std::string> as_list(std::string_view value, const std::string& key,
                                 const Origin& at) {
  value = trim(value);
  if (value.size() < 2 || value.front() != '[' || value.back() != ']')
    at.fail(fmt::format("key '{}' expects a list like [a, b], got '{}'", key, value));
  value = trim(value.substr(1, value.size() - 2));
  std::vector<std::string> items;
  if (value.empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    const auto item = unquote(value.substr(start, comma - start));
    if (item.empty()) at.fail(fmt::format("empty item in list '{}'", key));
    items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

template <typename T, typename Parse>
std::vector<T> as_typed_list(std::string_view value, const std::string& key, const Origin& at,
                             Parse parse) {
  std::vector<T> out;
  for (const auto& item : as_list(value, key, at)) out.push_back(parse(item, key, at));
  return out;
}

struct Builder {
  Scenario s;
  std::filesystem::path base_dir;
  std::map<std::string, int> seen;  // "section.key" -> line
  std::map<std::string, int> sections;
  std::optional<Homology> homology;

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  }

  void set(const std::string& section, const std::string& key, std::string_view value,
           const Origin& at) {
    const std::string full = section.empty() ? key : section + "." + key;
    if (at.label.empty()) {
      if (seen.count(full)) at.fail(fmt::format("duplicate key '{}'", full));
    }
    seen[full] = at.line;
    auto unknown = [&] {
      at.fail(section.empty() ? fmt::format("unknown key '{}'", key)
                              : fmt::format("unknown key '{}' in [{}]", key, section));
    };

    if (section.empty()) {
      if (key == "name")
        s.name = unquote(value);
      else if (key == "checks") {
        s.checks = as_list(value, key, at);
        for (const auto& id : s.checks) {
          const auto& ids = known_checks();
          if (std::find(ids.begin(), ids.end(), id) == ids.end())
            at.fail(fmt::format("unknown check id '{}'", id));
        }
      } else
        unknown();
    } else if (section == "background") {
      auto& b = s.background;
      if (key == "family") {
        b.family = unquote(value);
        if (b.family != "rn" && b.family != "flat" && b.family != "table")
          at.fail(fmt::format("family must be rn, flat or table, got '{}'", b.family));
      } else if (key == "n")
        b.n = as_int(value, key, at);
      else if (key == "mass")
        b.mass = as_double(value, key, at);
      else if (key == "charge")
        b.charge = as_double(value, key, at);
      else if (key == "table_path")
        b.table_path = resolve(unquote(value));
      else
        unknown();
    } else if (section == "flow") {
      auto& f = s.flow;
      if (key == "engine") {
        f.engine = unquote(value);
        if (f.engine != "radial" && f.engine != "axisym")
          at.fail(fmt::format("engine must be radial or axisym, got '{}'", f.engine));
      } else if (key == "r0")
        f.r0 = as_double(value, key, at);
      else if (key == "deform")
        f.deform = as_double(value, key, at);
      else if (key == "profile_path")
        f.profile_path = resolve(unquote(value));
      else if (key == "t_end")
        f.t_end = as_double(value, key, at);
      else if (key == "dt")
        f.dt = as_double(value, key, at);
      else if (key == "nodes")
        f.nodes = as_int(value, key, at);
      else if (key == "h_floor")
        f.settings.h_floor = as_double(value, key, at);
      else if (key == "cfl")
        f.settings.cfl = as_double(value, key, at);
      else if (key == "homology") {
        const auto h = unquote(value);
        if (h == "null")
          homology = Homology::Null;
        else if (h == "horizon")
          homology = Homology::Horizon;
        else
          at.fail(fmt::format("homology must be null or horizon, got '{}'", h));
      } else
        unknown();
    } else if (section == "output") {
      if (key == "directory")
        s.output.directory = resolve(unquote(value));
      else if (key == "formats") {
        s.output.formats = as_list(value, key, at);
        for (const auto& fmt : s.output.formats)
          if (fmt != "csv" && fmt != "json" && fmt != "text")
            at.fail(fmt::format("unknown output format '{}'", fmt));
      } else
        unknown();
    } else if (section == "tolerances") {
      auto& t = s.tolerances;
      double* slot = key == "closed_form"    ? &t.closed_form
                     : key == "quadrature"   ? &t.quadrature
                     : key == "field"        ? &t.field
                     : key == "smootheness"  ? &t.smootheness
                     : key == "evolution"    ? &t.evolution
                     : key == "monotonicity" ? &t.monotonicity
                     : key == "limit"        ? &t.limit
                                             : nullptr;
      if (!slot) unknown();
      *slot = as_double(value, key, at);
      if (*slot < 0.0) at.fail(fmt::format("tolerance '{}' must be non-negative", key));
    } else if (section == "sweep") {
      auto& w = s.sweep;
      if (key == "mass")
        w.mass = as_typed_list<double>(value, key, at, as_double);
      else if (key == "charge")
        w.charge = as_typed_list<double>(value, key, at, as_double);
      else if (key == "r0")
        w.r0 = as_typed_list<double>(value, key, at, as_double);
      else if (key == "n")
        w.n = as_typed_list<int>(value, key, at, as_int);
      else
        unknown();
    } else {
      at.fail(fmt::format("unknown section [{}]", section));
    }
  }

  int line_of(const std::string& full) const {
    auto it = seen.find(full);
    return it == seen.end() ? 0 : it->second;
  }

  void require(const std::string& section, const std::string& key) const {
    if (seen.count(section + "." + key)) return;
    auto it = sections.find(section);
    const int line = it == sections.end() ? 0 : it->second;
    throw ScenarioError(line, fmt::format("[{}] is missing required key '{}'", section, key));
  }

  void validate() {
    require("background", "family");
    require("background", "n");
    auto& b = s.background;
    if (b.family == "rn") {
      require("background", "mass");
      require("background", "charge");
    } else if (b.family == "table") {
      require("background", "table_path");
    }
    if (!seen.count("flow.profile_path")) require("flow", "r0");

    std::optional<BackgroundModel> model;
    try {
      model = build_model(b);
    } catch (const Error& e) {
      throw ScenarioError(line_of("background.family"), e.what());
    }

    auto& f = s.flow;
    if (f.engine == "axisym" && b.n != 3)
      throw ScenarioError(line_of("flow.engine"), "the axisym engine requires n = 3");
    if (f.t_end < 0.0) throw ScenarioError(line_of("flow.t_end"), "t_end must be >= 0");
    if (!(f.dt > 0.0)) throw ScenarioError(line_of("flow.dt"), "dt must be > 0");
    if (f.nodes < 9) throw ScenarioError(line_of("flow.nodes"), "nodes must be >= 9");
    if (f.profile_path.empty() && !(f.r0 > model->domain_floor()))
      throw ScenarioError(line_of("flow.r0"),
                          fmt::format("r0 = {} must lie outside the inner edge r = {}", f.r0,
                                      model->domain_floor()));

    if (homology == Homology::Horizon && !model->horizon_radius()) {
      const int line = line_of("flow.homology");
      if (b.family == "rn") throw ScenarioError(line, "no horizon for |q|>m");
      throw ScenarioError(line, "homology = horizon but the background has no horizon");
    }
    f.homology = homology.value_or(model->horizon_radius() ? Homology::Horizon : Homology::Null);
    if (f.homology == Homology::Null && model->horizon_radius())
      throw ScenarioError(line_of("flow.homology"),
                          "homology = null is not available when the background has a horizon");
  }
};

std::string iso_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::now()));
}

FlowRun flow_run(const Scenario& s) {
  FlowRun run;
  run.t_end = s.flow.t_end;
  run.dt = s.flow.dt;
  run.homology = s.flow.homology;
  run.settings = s.flow.settings;
  return run;
}

std::pair<double, double> audit_interval(const BackgroundModel& model) {
  const double floor = model.domain_floor();
  const double lo = floor > 0.0 ? 1.1 * floor : 0.1;
  const double hi = std::min(model.r_max(), 10.0 * std::max(floor, 1.0));
  return {lo, hi};
}

InequalityReport residual_report(std::string statement, double residual, double tolerance) {
  return make_report(std::move(statement), 0.0, residual, tolerance);
}

void retolerate(InequalityReport& r, double tolerance) {
  r.tolerance = tolerance;
  r.verdict = r.slack >= -tolerance ? Verdict::Holds : Verdict::Fails;
}

struct Context {
  const Scenario& s;
  const BackgroundModel& model;
  const Hypersurface& surface;
  const std::optional<FunctionalTrace>& trace;
  const std::optional<FlowTrace>& raw_trace;
  const std::string& flow_error;

  const FunctionalTrace& functional() const {
    if (!trace) throw FlowError(FlowError::Kind::SmoothnessLost, "flow failed: " + flow_error);
    return *trace;
  }
};

InequalityReport evaluate_check(const std::string& id, const Context& c) {
  const auto& tol = c.s.tolerances;
  const double surface_tol =
      std::holds_alternative<SphereState>(c.surface) ? tol.closed_form : tol.quadrature;

  if (id == "field_residuals") {
    const auto [lo, hi] = audit_interval(c.model);
    const auto grid = linspace(lo, hi, 100);
    const auto res = field_residuals(c.model, grid);
    auto r = residual_report(id, res.max(), tol.field);
    r.details = {{"tensor", res.tensor},
                 {"laplacian", res.laplacian},
                 {"divergence", res.divergence},
                 {"scalar_identity", res.scalar_identity}};
    return r;
  }
  if (id == "lemma_qrt") {
    auto r = lemma_qrt_check(c.model, c.surface, c.s.flow.homology);
    retolerate(r, surface_tol);
    return r;
  }
  if (id == "smootheness") {
    // a short inward conformal flow from the initial surface
    double worst = -std::numeric_limits<double>::infinity();
    Hypersurface state = c.surface;
    int steps = 0;
    for (; steps < 10; ++steps) {
      try {
        worst = std::max(worst, smootheness_residual(c.model, state));
        std::visit(
            [&](const auto& st) {
              state = conformal_flow_step(c.model, st, c.s.flow.dt).state;
            },
            state);
      } catch (const FlowError& e) {
        if (e.kind() != FlowError::Kind::BoundaryReached || steps == 0) throw;
        break;
      }
    }
    auto r = residual_report(id, worst, tol.smootheness);
    r.details = {{"max_residual", worst}, {"states", static_cast<double>(steps)}};
    return r;
  }
  if (id == "evolution") {
    c.functional();
    const double res = evolution_residual(*c.raw_trace);
    return residual_report(id, res, tol.evolution);
  }
  if (id == "monotonicity") {
    auto m = monotonicity_report(c.functional(), tol.monotonicity);
    auto r = m.q_monotone;
    r.details.emplace_back("gronwall_violation", m.gronwall.rhs);
    if (m.gronwall.verdict == Verdict::Fails) {
      r.verdict = Verdict::Fails;
      r.message = "Gronwall bound on P violated";
    }
    return r;
  }
  if (id == "minkowski") {
    auto r = minkowski_gap(c.model, c.surface, c.s.flow.homology);
    retolerate(r, surface_tol);
    return r;
  }
  if (id == "photon") {
    auto r = photon_corollary_check(c.model);
    retolerate(r, tol.closed_form);
    return r;
  }
  if (id == "limit") {
    const auto est = limit_extrapolate(c.functional());
    auto r = make_report(id, est.limit, minkowski_rhs(c.model.dimension()), tol.limit);
    r.verdict = std::abs(r.slack) <= tol.limit ? Verdict::Holds : Verdict::Fails;
    r.details = {{"fit_residual", est.fit_residual}};
    return r;
  }
  if (id == "audit") {
    const auto [lo, hi] = audit_interval(c.model);
    const auto a = hypothesis_audit(c.model, lo, hi);
    const auto violations = a.violations();
    auto r = make_report(id, 0.0, static_cast<double>(violations.size()), 0.0);
    r.flags = audit_flags(a);
    r.details = {{"epsilon", a.epsilon},
                 {"epsilon_prime", a.epsilon_prime},
                 {"upper", a.upper},
                 {"upper_bound", a.upper_bound},
                 {"lap_ratio_min", a.lap_ratio_min},
                 {"f_decay_exponent", a.f_decay.exponent},
                 {"remainder_exponent", a.remainder_decay.exponent},
                 {"metric_decay_exponent", a.metric_decay.exponent},
                 {"mass_fit", a.mass_fit}};
    return r;
  }
  throw InvalidArgument(fmt::format("unknown check id '{}'", id));
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
    out << contents;
    if (!out) throw Error(fmt::format("failed writing '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

bool wants(const Scenario& s, const std::string& format) {
  return std::find(s.output.formats.begin(), s.output.formats.end(), format) !=
         s.output.formats.end();
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::vector<std::string>& overrides,
                        const std::filesystem::path& base_dir) {
  Builder b;
  b.base_dir = base_dir;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const Origin at{line_no, {}};
    if (line.front() == '[') {
      if (line.back() != ']') at.fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> valid{"background", "flow",  "output",
                                               "tolerances", "sweep"};
      if (!valid.count(section)) at.fail(fmt::format("unknown section [{}]", section));
      if (b.sections.count(section)) at.fail(fmt::format("duplicate section [{}]", section));
      b.sections[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) at.fail("expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) at.fail("empty key");
    b.set(section, key, line.substr(eq + 1), at);
  }

  std::string canonical(text);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos)
      throw ScenarioError(0, fmt::format("--set {}: expected section.key=value", o));
    const std::string path(trim(std::string_view(o).substr(0, eq)));
    const auto dot = path.find('.');
    const std::string sec = dot == std::string::npos ? "" : path.substr(0, dot);
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    b.set(sec, key, std::string_view(o).substr(eq + 1), Origin{0, "--set " + path});
    if (!sec.empty() && !b.sections.count(sec)) b.sections[sec] = 0;
    canonical += "\n# --set " + o;
  }

  b.validate();
  b.s.canonical_text = canonical;
  return b.s;
}

Scenario load_scenario(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(0, fmt::format("cannot open scenario '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), overrides, path.parent_path());
}

BackgroundModel build_model(const BackgroundSpec& spec) {
  if (spec.family == "rn") return build_rn({spec.n, spec.mass, spec.charge});
  if (spec.family == "flat") return build_flat(spec.n);
  if (spec.family == "table") return load_table_csv(spec.n, spec.table_path);
  throw InvalidArgument(fmt::format("unknown background family '{}'", spec.family));
}

Hypersurface initial_surface(const Scenario& s, const BackgroundModel& model) {
  const auto& f = s.flow;
  if (f.engine == "radial") {
    if (!f.profile_path.empty())
      throw ScenarioError(0, "profile_path needs engine = axisym");
    return SphereState{0.0, f.r0};
  }
  if (model.dimension() != 3) throw ScenarioError(0, "the axisym engine requires n = 3");
  if (f.profile_path.empty()) {
    const double r0 = f.r0, a = f.deform;
    return make_axi_surface(
        [=](double th) { return r0 * (1.0 + a * std::cos(th) * std::cos(th)); }, f.nodes);
  }
  std::ifstream in(f.profile_path);
  if (!in) throw ScenarioError(0, fmt::format("cannot open profile '{}'", f.profile_path.string()));
  std::string line;
  std::getline(in, line);
  if (csv::split_line(line) != std::vector<std::string>{"theta", "rho"})
    throw ScenarioError(0, "profile CSV must start with header theta,rho");
  std::vector<double> theta, rho;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = csv::split_line(line);
    if (cells.size() != 2) throw ScenarioError(0, fmt::format("bad profile row '{}'", line));
    theta.push_back(csv::parse_number(cells[0]));
    rho.push_back(csv::parse_number(cells[1]));
  }
  return resample_profile(theta, rho, f.nodes, f.profile_path.filename().string());
}

int RunManifest::exit_code() const {
  for (const auto& c : checks) {
    if (c.report.verdict == Verdict::Error) return 1;
    if (c.report.verdict == Verdict::Fails && !c.report.has_violation()) return 1;
  }
  return 0;
}

void write_trace_csv(std::ostream& out, const FunctionalTrace& trace) {
  out << "t,r_rep,area,int_fH,int_f_dv,Q,Qtilde,P,H_min,H_max,res_smooth,res_evol\n";
  for (const auto& r : trace.records) {
    const double row[] = {r.t,       r.r_rep, r.area,  r.int_fH, r.int_f_dv,   r.Q,
                          r.Q_tilde, r.P,     r.H_min, r.H_max,  r.res_smooth, r.res_evol};
    for (std::size_t i = 0; i < std::size(row); ++i)
      out << (i ? "," : "") << csv::number(row[i]);
    out << '\n';
  }
}

FunctionalTrace run_flow(const Scenario& s) {
  const auto model = build_model(s.background);
  const auto trace = functional_trace(run_imcf(model, initial_surface(s, model), flow_run(s)));
  std::filesystem::create_directories(s.output.directory);
  std::ostringstream out;
  write_trace_csv(out, trace);
  write_file_atomically(s.output.directory / "trace.csv", out.str());
  return trace;
}

RunManifest run_scenario(const Scenario& s) {
  RunManifest m;
  m.name = s.name;
  m.scenario_hash = scenario_hash(s.canonical_text);
  m.tool_version = EMFLOW_VERSION;
  m.started = iso_now();

  const auto model = build_model(s.background);
  const auto surface = initial_surface(s, model);

  std::optional<FlowTrace> raw;
  std::optional<FunctionalTrace> trace;
  std::string flow_error;
  try {
    raw = run_imcf(model, surface, flow_run(s));
    trace = functional_trace(*raw);
  } catch (const Error& e) {
    flow_error = e.what();
  }

  const Context ctx{s, model, surface, trace, raw, flow_error};
  for (const auto& id : s.checks) {
    CheckRecord rec{id, {}};
    try {
      rec.report = evaluate_check(id, ctx);
    } catch (const Error& e) {
      rec.report.statement = id;
      rec.report.lhs = rec.report.rhs = rec.report.slack = std::numeric_limits<double>::quiet_NaN();
      rec.report.verdict = Verdict::Error;
      rec.report.message = e.what();
    }
    rec.report.statement = id;
    m.checks.push_back(std::move(rec));
  }

  const auto& dir = s.output.directory;
  std::filesystem::create_directories(dir);
  std::vector<InequalityReport> reports;
  for (const auto& c : m.checks) reports.push_back(c.report);

  if (wants(s, "csv")) {
    if (trace) {
      std::ostringstream out;
      write_trace_csv(out, *trace);
      write_file_atomically(dir / "trace.csv", out.str());
      m.outputs.push_back(dir / "trace.csv");
    }
    std::ostringstream out;
    write_report_csv(out, reports);
    write_file_atomically(dir / "report.csv", out.str());
    m.outputs.push_back(dir / "report.csv");
  }
  if (wants(s, "text")) {
    std::string text = fmt::format("scenario {} ({})\n", s.name, model.label());
    if (!flow_error.empty()) text += fmt::format("flow error: {}\n", flow_error);
    text += format_summary(reports);
    write_file_atomically(dir / "summary.txt", text);
    m.outputs.push_back(dir / "summary.txt");
  }

  m.finished = iso_now();
  const auto manifest_path = dir / "manifest.json";
  m.outputs.push_back(manifest_path);

  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["scenario_hash"] = m.scenario_hash;
  j["tool_version"] = m.tool_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  if (!flow_error.empty()) j["flow_error"] = flow_error;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : m.checks) {
    nlohmann::ordered_json e;
    e["id"] = c.id;
    e["verdict"] = to_string(c.report.verdict);
    if (c.report.verdict != Verdict::Error) {
      e["lhs"] = c.report.lhs;
      e["rhs"] = c.report.rhs;
      e["slack"] = c.report.slack;
      e["tolerance"] = c.report.tolerance;
    }
    e["flags"] = c.report.flags;
    if (!c.report.message.empty()) e["message"] = c.report.message;
    j["checks"].push_back(e);
  }
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : m.outputs) j["outputs"].push_back(p.string());
  write_file_atomically(manifest_path, j.dump(2) + "\n");
  return m;
}

std::vector<SweepRow> sweep(const Scenario& base, int threads) {
  if (base.background.family != "rn") throw ScenarioError(0, "sweeps need family = rn");
  const auto& b = base.background;
  const auto masses = base.sweep.mass.value_or(std::vector<double>{b.mass});
  const auto charges = base.sweep.charge.value_or(std::vector<double>{b.charge});
  const auto dims = base.sweep.n.value_or(std::vector<int>{b.n});
  const auto radii = base.sweep.r0.value_or(std::vector<double>{base.flow.r0});

  std::vector<SweepRow> rows;
  for (double m : masses)
    for (double q : charges)
      for (int n : dims)
        for (double r0 : radii) {
          SweepRow row;
          row.mass = m;
          row.charge = q;
          row.n = n;
          row.r0 = r0;
          rows.push_back(row);
        }

  FlowRun run = flow_run(base);
  auto evaluate = [&](SweepRow& row) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    row.qrt_slack = row.photon_radius = row.horizon_radius = row.Q0 = nan;
    std::optional<BackgroundModel> model;
    try {
      model = build_rn({row.n, row.mass, row.charge});
    } catch (const Error& e) {
      row.status = "skipped";
      row.reason = e.what();
      return;
    }
    if (model->horizon_radius()) row.horizon_radius = *model->horizon_radius();
    if (!(row.r0 > model->domain_floor())) {
      row.status = "skipped";
      row.reason = fmt::format("r0 inside the inner edge r = {:.6g}", model->domain_floor());
      return;
    }
    try {
      for (const auto& ps : photon_sphere_radii(*model)) {
        if (!ps.admissible) continue;
        row.photon_exists = true;
        row.photon_radius = std::isnan(row.photon_radius)
                                ? ps.radius
                                : std::max(row.photon_radius, ps.radius);
      }
      FlowRun cell = run;
      cell.homology = model->horizon_radius() ? Homology::Horizon : Homology::Null;
      const SphereState start{0.0, row.r0};
      const auto trace = functional_trace(run_imcf(*model, start, cell));
      row.Q0 = trace.records.front().Q;
      row.q_monotone = monotonicity_report(trace, base.tolerances.monotonicity).q_monotone.verdict ==
                       Verdict::Holds;
      row.qrt_slack = lemma_qrt_check(*model, start, cell.homology).slack;
      row.status = "ok";
    } catch (const Error& e) {
      row.status = "error";
      row.reason = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) evaluate(rows[i]);
  };
  const int count = std::clamp<int>(threads, 1, std::max<int>(1, static_cast<int>(rows.size())));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < count; ++i) pool.emplace_back(worker);
    worker();
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "m,q,n,r0,status,q_monotone,qrt_slack,photon_exists,photon_radius,horizon_radius,Q0,"
         "reason\n";
  for (const auto& r : rows) {
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << csv::number(r.mass) << ',' << csv::number(r.charge) << ',' << r.n << ','
        << csv::number(r.r0) << ',' << r.status << ',' << (r.q_monotone ? "true" : "false") << ','
        << csv::number(r.qrt_slack) << ',' << (r.photon_exists ? "true" : "false") << ','
        << csv::number(r.photon_radius) << ',' << csv::number(r.horizon_radius) << ','
        << csv::number(r.Q0) << ',' << reason << '\n';
  }
}

std::string scenario_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("fnv1a64:{:016x}", h);
}

}  // namespace emflow
