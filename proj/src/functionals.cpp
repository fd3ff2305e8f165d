#include "emflow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "emflow/csv.hpp"
#include "emflow/errors.hpp"
#include "emflow/numerics.hpp"

namespace emflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double area_exponent(int n) { return (n - 2.0) / (n - 1.0); }

// Derivative at t[i] of the interpolating polynomial through up to five
// neighbouring records (the window shifts inward at the ends).
double time_derivative(std::span<const double> t, std::span<const double> y, std::size_t i) {
  const std::size_t width = std::min<std::size_t>(5, t.size());
  const std::size_t lo = std::min(i >= width / 2 ? i - width / 2 : 0, t.size() - width);
  double out = 0.0;
  for (std::size_t j = lo; j < lo + width; ++j) {
    double w;
    if (j == i) {
      w = 0.0;
      for (std::size_t m = lo; m < lo + width; ++m)
        if (m != i) w += 1.0 / (t[i] - t[m]);
    } else {
      w = 1.0;
      for (std::size_t m = lo; m < lo + width; ++m) {
        if (m != i && m != j) w *= t[i] - t[m];
        if (m != j) w /= t[j] - t[m];
      }
    }
    out += w * y[j];
  }
  return out;
}

// per-record max over nodes of |dH/dt + advection - rhs|
std::vector<double> evolution_residuals(const FlowTrace& trace) {
  const std::size_t count = trace.records.size();
  std::vector<double> out(count, kNaN);
  if (count < 3) return out;
  std::vector<double> t(count), h(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = trace.records[i].t;
  const std::size_t nodes = trace.evolution.front().H.size();
  for (std::size_t i = 0; i < count; ++i) {
    double worst = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      for (std::size_t j = 0; j < count; ++j) h[j] = trace.evolution[j].H[k];
      const auto& e = trace.evolution[i];
      const double dHdt = time_derivative(t, h, i);
      worst = std::max(worst, std::abs(dHdt + e.advection[k] - e.rhs[k]));
    }
    out[i] = worst;
  }
  return out;
}

void require_positive_H(const SurfaceTotals& totals) {
  if (!(totals.H_min > 0.0))
    throw InvalidArgument(fmt::format("mean curvature must be positive (min H = {})", totals.H_min));
}

std::vector<std::string> region_flags(const BackgroundModel& model, Homology homology) {
  std::vector<std::string> flags;
  if (homology != Homology::Null) {
    flags.emplace_back("violated:null_homologous");
  } else if (model.r_min() > 0.0 || model.rn_params()) {
    // Omega reaches the inner edge of the chart (singular centre or table edge)
    flags.emplace_back("violated:regular_region");
  }
  return flags;
}

HypothesisAudit background_audit(const BackgroundModel& model, double surface_radius) {
  const double floor = model.domain_floor();
  const double lo = floor > 0.0 ? floor * (1.0 + 1e-6) : 1e-3 * surface_radius;
  const double hi = std::min(model.r_max(), 100.0 * std::max(surface_radius, floor));
  return hypothesis_audit(model, lo, hi);
}

}  // namespace

double q_from_parts(int n, double area, double int_fH, double int_f_dv) {
  return std::pow(area, -area_exponent(n)) * (int_fH - n * (n - 1.0) * int_f_dv);
}

FunctionalTrace functional_trace(const FlowTrace& trace) {
  FunctionalTrace out;
  out.n = trace.n;
  const int n = trace.n;
  const auto evol = evolution_residuals(trace);
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    FunctionalRecord rec;
    rec.t = r.t;
    rec.r_rep = r.r_rep;
    rec.area = r.area;
    rec.int_fH = r.int_fH;
    rec.int_f_dv = r.int_f_dv;
    rec.P = r.int_fH - n * (n - 1.0) * r.int_f_dv;
    rec.Q = std::pow(r.area, -area_exponent(n)) * rec.P;
    rec.Q_tilde = (n - 1.0) * r.int_f_over_H;
    rec.H_min = r.H_min;
    rec.H_max = r.H_max;
    rec.res_smooth = r.res_smooth;
    rec.res_evol = evol[i];
    out.records.push_back(rec);
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "holds";
    case Verdict::Fails:
      return "fails";
    case Verdict::Error:
      return "error";
  }
  return "error";
}

bool InequalityReport::has_violation() const {
  return std::any_of(flags.begin(), flags.end(),
                     [](const std::string& f) { return f.starts_with("violated:"); });
}

InequalityReport make_report(std::string statement, double lhs, double rhs, double tolerance) {
  InequalityReport r;
  r.statement = std::move(statement);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = lhs - rhs;
  r.tolerance = tolerance;
  r.verdict = r.slack >= -tolerance ? Verdict::Holds : Verdict::Fails;
  return r;
}

double default_tolerance(const Hypersurface& surface) {
  return std::holds_alternative<SphereState>(surface) ? kClosedFormTolerance
                                                      : kQuadratureTolerance;
}

double q_functional(const BackgroundModel& model, const Hypersurface& surface, Homology homology) {
  const auto totals = surface_totals(model, surface);
  require_positive_H(totals);
  return q_from_parts(model.dimension(), totals.area, totals.int_fH,
                      weighted_volume(model, surface, homology));
}

double q_tilde(const BackgroundModel& model, const Hypersurface& surface) {
  const auto totals = surface_totals(model, surface);
  require_positive_H(totals);
  return (model.dimension() - 1.0) * totals.int_f_over_H;
}

InequalityReport lemma_qrt_check(const BackgroundModel& model, const Hypersurface& surface,
                                 Homology homology) {
  const double lhs = q_tilde(model, surface);
  const double rhs = model.dimension() * weighted_volume(model, surface, homology);
  auto report = make_report("lemma_qrt", lhs, rhs, default_tolerance(surface));
  if (homology == Homology::Horizon) report.flags.emplace_back("noted:horizon_homologous_region");
  return report;
}

std::vector<double> smootheness_residuals(const BackgroundModel& model,
                                          const Hypersurface& state) {
  const auto rates = std::visit([&](const auto& s) { return conformal_rates(model, s); }, state);
  std::vector<double> out;
  out.reserve(rates.size());
  for (const auto& c : rates) out.push_back(c.rate - c.bound);
  return out;
}

double smootheness_residual(const BackgroundModel& model, const Hypersurface& state) {
  const auto res = smootheness_residuals(model, state);
  return *std::max_element(res.begin(), res.end());
}

double evolution_residual(const FlowTrace& trace) {
  if (trace.records.size() < 3)
    throw InsufficientData("evolution_residual needs at least three stored flow steps");
  const auto res = evolution_residuals(trace);
  return *std::max_element(res.begin(), res.end());
}

MonotonicityReport monotonicity_report(const FunctionalTrace& trace, double tolerance) {
  const auto& rec = trace.records;
  const double a = area_exponent(trace.n);

  double max_increase = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i)
    max_increase = std::max(max_increase, rec[i + 1].Q - rec[i].Q);

  // P(t2) - P(t1) e^{a (t2 - t1)} over all pairs, via the running minimum
  // of P e^{-a t}
  double gronwall = 0.0;
  double scale = 1.0;
  double running_min = std::numeric_limits<double>::infinity();
  for (const auto& r : rec) {
    const double u = r.P * std::exp(-a * r.t);
    if (std::isfinite(running_min))
      gronwall = std::max(gronwall, std::exp(a * r.t) * (u - running_min));
    running_min = std::min(running_min, u);
    scale = std::max(scale, std::abs(r.P));
  }

  MonotonicityReport out;
  out.q_monotone = make_report("monotonicity", 0.0, max_increase, tolerance);
  out.q_monotone.details = {{"max_forward_increase", max_increase},
                            {"records", static_cast<double>(rec.size())}};
  out.q_monotone.flags.emplace_back("assumed:outward_minimizing");
  out.gronwall = make_report("gronwall", 0.0, gronwall, tolerance * scale);
  out.gronwall.details = {{"max_violation", gronwall}};
  return out;
}

double minkowski_rhs(int n) {
  return (n - 1.0) * std::pow(unit_sphere_area(n - 1), 1.0 / (n - 1.0));
}

std::vector<std::string> audit_flags(const HypothesisAudit& audit) {
  std::vector<std::string> flags;
  for (const auto& v : audit.violations()) flags.push_back("violated:" + v);
  return flags;
}

InequalityReport minkowski_gap(const BackgroundModel& model, const Hypersurface& surface,
                               Homology homology) {
  const int n = model.dimension();
  const auto totals = surface_totals(model, surface);
  const double lhs = q_functional(model, surface, homology);
  auto report = make_report("minkowski", lhs, minkowski_rhs(n), default_tolerance(surface));

  report.flags = region_flags(model, homology);
  const auto audit = background_audit(model, totals.representative_radius);
  for (auto& f : audit_flags(audit)) report.flags.push_back(std::move(f));
  report.flags.emplace_back("assumed:outward_minimizing");
  report.details = {{"epsilon", audit.epsilon},
                    {"upper", audit.upper},
                    {"H_min", totals.H_min}};
  return report;
}

LimitEstimate limit_extrapolate(const FunctionalTrace& trace) {
  const auto& rec = trace.records;
  if (rec.size() < 5) throw InsufficientData("limit_extrapolate needs at least 5 records");
  if (rec.back().r_rep < 10.0 * rec.front().r_rep)
    throw InsufficientData(fmt::format(
        "limit_extrapolate needs the representative radius to grow tenfold (got {} -> {})",
        rec.front().r_rep, rec.back().r_rep));

  const int n = trace.n;
  const double a = area_exponent(n);
  const double t0 = rec.front().t;
  std::vector<double> x(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) x[i] = std::exp(-(rec[i].t - t0) / (n - 1.0));

  // five samples, geometrically spaced in x from the end of the trace
  const double x_min = x.back();
  const double ratio = std::min(2.0, std::pow(x.front() / x_min, 0.25));
  LimitEstimate est;
  std::size_t previous = rec.size();
  for (int j = 0; j < 5; ++j) {
    const double target = x_min * std::pow(ratio, j);
    std::size_t best = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::abs(x[i] - target) < std::abs(x[best] - target)) best = i;
    if (best == previous) continue;
    previous = best;
    est.x.push_back(x[best]);
    est.y.push_back(std::pow(rec[best].area, -a) * rec[best].int_fH);
  }
  if (est.x.size() < 3) throw InsufficientData("limit_extrapolate: too few distinct samples");
  est.limit = extrapolate_to_zero(est.x, est.y);
  const std::size_t m = est.x.size() - 1;
  const double lower = extrapolate_to_zero(std::span(est.x).first(m), std::span(est.y).first(m));
  est.fit_residual = std::abs(est.limit - lower);
  return est;
}

InequalityReport photon_corollary_check(const BackgroundModel& model) {
  if (model.dimension() != 3)
    throw InvalidArgument("the photon-sphere corollary is stated for n = 3");
  double radius = -1.0;
  for (const auto& ps : photon_sphere_radii(model))
    if (ps.admissible) radius = std::max(radius, ps.radius);
  if (radius < 0.0) throw NoPhotonSphere("no admissible photon sphere");

  const Homology homology = model.horizon_radius() ? Homology::Horizon : Homology::Null;
  const SphereState sphere{0.0, radius};
  const double H = mean_curvature_sphere(model, radius);
  const double f = model.f(radius);
  const double area = unit_sphere_area(2) * radius * radius;
  const double volume = weighted_volume(model, sphere, homology);
  const double rhs = 4.0 * std::sqrt(std::numbers::pi) / (std::sqrt(area) * f) +
                     6.0 * volume / (area * f);

  auto report = make_report("photon_corollary", H, rhs, kClosedFormTolerance);
  report.flags = region_flags(model, homology);
  for (auto& flag : audit_flags(background_audit(model, radius))) report.flags.push_back(flag);
  report.flags.emplace_back("assumed:outward_minimizing");
  report.flags.emplace_back("noted:nec_electrovacuum");
  report.details = {{"r_photon", radius}, {"H", H}, {"f", f}, {"area", area}, {"int_f_dv", volume}};
  return report;
}

void write_report_csv(std::ostream& out, std::span<const InequalityReport> reports) {
  out << "statement,lhs,rhs,slack,verdict,flags\n";
  for (const auto& r : reports) {
    std::string flags;
    for (std::size_t i = 0; i < r.flags.size(); ++i) flags += (i ? ";" : "") + r.flags[i];
    out << r.statement << ',' << csv::number(r.lhs) << ',' << csv::number(r.rhs) << ','
        << csv::number(r.slack) << ',' << to_string(r.verdict) << ',' << flags << '\n';
  }
}

std::vector<InequalityReport> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line).size() != 6 ||
      !line.starts_with("statement,lhs,rhs,slack,verdict,flags"))
    throw InvalidArgument("report CSV must start with header statement,lhs,rhs,slack,verdict,flags");
  std::vector<InequalityReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split_line(line);
    if (cells.size() != 6) throw InvalidArgument(fmt::format("bad report row: '{}'", line));
    InequalityReport r;
    r.statement = cells[0];
    r.lhs = csv::parse_number(cells[1]);
    r.rhs = csv::parse_number(cells[2]);
    r.slack = csv::parse_number(cells[3]);
    if (cells[4] == "holds")
      r.verdict = Verdict::Holds;
    else if (cells[4] == "fails")
      r.verdict = Verdict::Fails;
    else if (cells[4] == "error")
      r.verdict = Verdict::Error;
    else
      throw InvalidArgument(fmt::format("unknown verdict '{}'", cells[4]));
    std::stringstream flags(cells[5]);
    for (std::string f; std::getline(flags, f, ';');)
      if (!f.empty()) r.flags.push_back(f);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_summary(std::span<const InequalityReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    out += fmt::format("{:<18} {:<6} lhs={:<14.8g} rhs={:<14.8g} slack={:.6g}\n", r.statement,
                       to_string(r.verdict), r.lhs, r.rhs, r.slack);
    for (const auto& [key, value] : r.details) out += fmt::format("    {} = {:.10g}\n", key, value);
    for (const auto& f : r.flags) out += fmt::format("    [{}]\n", f);
    if (!r.message.empty()) out += fmt::format("    {}\n", r.message);
  }
  return out;
}

}  // namespace emflow
