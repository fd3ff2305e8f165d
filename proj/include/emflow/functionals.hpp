#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emflow/background.hpp"
#include "emflow/flow.hpp"

namespace emflow {

/// One record of Q, Q~ and P along an IMCF trace.
struct FunctionalRecord {
  double t = 0.0;
  double r_rep = 0.0;
  double area = 0.0;
  double int_fH = 0.0;
  double int_f_dv = 0.0;
  double Q = 0.0;
  double Q_tilde = 0.0;
  double P = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
  double res_smooth = 0.0;
  double res_evol = 0.0;  // NaN when the trace is too short for time differences
};

struct FunctionalTrace {
  int n = 3;
  std::vector<FunctionalRecord> records;
};

/// Q = |Sigma|^{-(n-2)/(n-1)} P with P = int fH - n(n-1) int_Omega f.
double q_from_parts(int n, double area, double int_fH, double int_f_dv);

FunctionalTrace functional_trace(const FlowTrace& trace);

enum class Verdict { Holds, Fails, Error };

const char* to_string(Verdict v);

/// Outcome of one inequality statement. Flags prefixed `violated:` name a
/// hypothesis the test background does not satisfy; `assumed:` and `noted:`
/// flags are metadata.
struct InequalityReport {
  std::string statement;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Holds;
  std::vector<std::string> flags;
  std::vector<std::pair<std::string, double>> details;
  std::string message;

  bool has_violation() const;
};

/// Builds a report with slack = lhs - rhs and verdict holds iff slack >= -tolerance.
InequalityReport make_report(std::string statement, double lhs, double rhs, double tolerance);

inline constexpr double kClosedFormTolerance = 1e-9;
inline constexpr double kQuadratureTolerance = 1e-5;

/// Verdict tolerance matching how the surface quantities are computed.
double default_tolerance(const Hypersurface& surface);

double q_functional(const BackgroundModel& model, const Hypersurface& surface, Homology homology);
double q_tilde(const BackgroundModel& model, const Hypersurface& surface);

InequalityReport lemma_qrt_check(const BackgroundModel& model, const Hypersurface& surface,
                                 Homology homology);

/// d/dt(f/H) + f^2/(n-1) per node along the conformal flow.
std::vector<double> smootheness_residuals(const BackgroundModel& model,
                                          const Hypersurface& state);
double smootheness_residual(const BackgroundModel& model, const Hypersurface& state);

/// Max |dH/dt - rhs| of the IMCF evolution equation of H, with dH/dt from
/// differences over up to five neighbouring records of the trace.
double evolution_residual(const FlowTrace& trace);

struct MonotonicityReport {
  InequalityReport q_monotone;
  InequalityReport gronwall;
};

MonotonicityReport monotonicity_report(const FunctionalTrace& trace,
                                       double tolerance = kClosedFormTolerance);

/// (n-1) omega_{n-1}^{1/(n-1)}.
double minkowski_rhs(int n);

InequalityReport minkowski_gap(const BackgroundModel& model, const Hypersurface& surface,
                               Homology homology);

struct LimitEstimate {
  double limit = 0.0;
  double fit_residual = 0.0;
  std::vector<double> x;  // sample abscissae e^{-t/(n-1)}
  std::vector<double> y;  // |Sigma|^{-(n-2)/(n-1)} int fH at the samples
};

/// Richardson extrapolation to t -> infinity of |Sigma|^{-(n-2)/(n-1)} int fH.
LimitEstimate limit_extrapolate(const FunctionalTrace& trace);

InequalityReport photon_corollary_check(const BackgroundModel& model);

/// Hypothesis-audit violations as `violated:` flags.
std::vector<std::string> audit_flags(const HypothesisAudit& audit);

void write_report_csv(std::ostream& out, std::span<const InequalityReport> reports);
std::vector<InequalityReport> read_report_csv(std::istream& in);
std::string format_summary(std::span<const InequalityReport> reports);

}  // namespace emflow
