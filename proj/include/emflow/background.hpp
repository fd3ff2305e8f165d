#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emflow {

using RadialFn = std::function<double(double)>;

/// Parameters of the n-dimensional Reissner-Nordstrom family.
struct RNParams {
  int n = 3;
  double mass = 1.0;
  double charge = 0.0;
};

/// Radial evaluators of a static spherically symmetric background
/// g = V(r)^{-1} dr^2 + r^2 g_{S^{n-1}} with potentials f and psi.
/// Any derivative left empty is replaced by centred finite differences.
struct RadialProfile {
  RadialFn V, f, psi;
  RadialFn dV, df, d2f, dpsi, d2psi;
};

/// Immutable background model. Safe to share read-only between threads.
class BackgroundModel {
 public:
  BackgroundModel(int n, RadialProfile profile, double r_min, std::optional<double> horizon,
                  std::string label, std::optional<RNParams> rn = std::nullopt);

  int dimension() const { return n_; }
  const std::string& label() const { return label_; }
  double r_min() const { return r_min_; }
  std::optional<double> horizon_radius() const { return horizon_; }
  /// Largest of r_min and the horizon radius: the inner edge of the domain.
  double domain_floor() const { return horizon_ ? std::max(*horizon_, r_min_) : r_min_; }
  /// Largest radius at which the model can be evaluated (finite for tables).
  double r_max() const { return r_max_; }
  std::optional<RNParams> rn_params() const { return rn_; }
  bool has_closed_derivatives() const { return closed_derivatives_; }
  /// Copy restricted to radii <= r_max.
  BackgroundModel with_r_max(double r_max) const {
    BackgroundModel copy = *this;
    copy.r_max_ = r_max;
    return copy;
  }

  double V(double r) const { return profile_.V(r); }
  double f(double r) const { return profile_.f(r); }
  double psi(double r) const { return profile_.psi(r); }
  double dV(double r) const;
  double df(double r) const;
  double d2f(double r) const;
  double dpsi(double r) const;
  double d2psi(double r) const;

  /// Finite-difference step used by the fallback derivatives.
  static double fd_step(double r);

 private:
  double first_difference(const RadialFn& fn, double r) const;
  double second_difference(const RadialFn& fn, double r) const;

  int n_;
  RadialProfile profile_;
  double r_min_;
  std::optional<double> horizon_;
  double r_max_;
  std::string label_;
  std::optional<RNParams> rn_;
  bool closed_derivatives_;
};

BackgroundModel build_rn(const RNParams& params);
BackgroundModel build_flat(int n);

struct TableRow {
  double r, V, f, psi;
};

/// Tabulated background with monotone cubic interpolation; derivatives
/// come from the interpolants.
BackgroundModel build_table(int n, std::vector<TableRow> rows, std::string label = "table");
/// Reads a CSV with header `r,V,f,psi`.
BackgroundModel load_table_csv(int n, const std::filesystem::path& path);

/// User-defined model from value evaluators only; every derivative uses the
/// finite-difference fallback.
BackgroundModel build_custom(int n, RadialFn V, RadialFn f, RadialFn psi, double r_min,
                             std::optional<double> horizon, std::string label = "custom");

/// Curvature quantities in the orthonormal frame {sqrt(V) d_r, r^{-1} e_i}.
struct CurvatureSample {
  double r = 0.0;
  double ricci_rr = 0.0;
  double ricci_tangential = 0.0;
  double scalar = 0.0;
  double hess_f_rr = 0.0;
  double hess_f_tangential = 0.0;
  double lap_f = 0.0;
  double grad_psi_norm_sq = 0.0;
  double div_term = 0.0;  // div(grad psi / f)
};

CurvatureSample curvature_at(const BackgroundModel& model, double r);

/// Pointwise residuals of the electrostatic system at a curvature sample.
struct PointResiduals {
  double tensor_rr = 0.0;          // f Ric - Hess f + (2/f) dpsi dpsi - 2|dpsi|^2 g/((n-1) f)
  double tensor_tangential = 0.0;
  double laplacian = 0.0;          // lap f - 2 (n-2)/(n-1) |dpsi|^2 / f
  double divergence = 0.0;         // div(grad psi / f)
  double scalar_identity = 0.0;    // f^2 R - 2 |dpsi|^2
};

PointResiduals point_residuals(const BackgroundModel& model, const CurvatureSample& sample);

/// Maximum absolute residual per equation over a radial grid.
struct FieldResiduals {
  double tensor = 0.0;
  double laplacian = 0.0;
  double divergence = 0.0;
  double scalar_identity = 0.0;

  double max() const;
};

FieldResiduals field_residuals(const BackgroundModel& model, std::span<const double> r_grid);

struct PhotonSphere {
  double radius = 0.0;
  bool admissible = false;
};

/// Roots of r V'(r) - 2 V(r) on (r_min, 100 * max(horizon, 1)], ascending.
std::vector<PhotonSphere> photon_sphere_radii(const BackgroundModel& model);

/// Flux of grad f through the coordinate sphere S(r): omega r^{n-1} f'(r) sqrt(V(r)).
double adm_flux(const BackgroundModel& model, double r);
/// Same flux by a direct surface integral: finite-difference normal derivative
/// of f, Simpson quadrature over the polar angle of S^{n-1}.
double adm_flux_quadrature(const BackgroundModel& model, double r, int nodes = 401);

struct AdmMassFit {
  double flux_limit = 0.0;
  double mass = 0.0;          // flux_limit / ((n-2) omega_{n-1})
  double fit_residual = 0.0;  // difference between the last two extrapolation orders
};

/// Richardson extrapolation of adm_flux over radii r_start * 2^k in x = r^{-(n-2)}.
AdmMassFit adm_mass_extrapolate(const BackgroundModel& model, double r_start, int levels = 6);

/// Decay-exponent fit |y| ~ C r^p over a geometric range of radii.
struct DecayFit {
  double exponent = 0.0;
  bool vanishes = false;  // |y| below the noise floor everywhere
  double r_lo = 0.0;
  double r_hi = 0.0;
};

/// Lower/upper scalar-curvature bounds on an interval plus the asymptotic
/// decay audit. Failures are flags, never errors.
struct HypothesisAudit {
  int n = 3;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double epsilon = 0.0;        // min R on [r_lo, r_hi]
  double upper = 0.0;          // max R on [r_lo, r_hi]
  double upper_bound = 0.0;    // n(n-1)/(n-2)
  double lap_ratio_min = 0.0;  // inf lap f / f on [r_lo, r_hi]
  double epsilon_prime = 0.0;  // (n-2)/(n-1) * epsilon
  bool epsilon_positive = false;
  bool epsilon_positive_global = false;
  bool upper_within_bound = false;
  bool lap_ratio_ge_epsilon_prime = false;
  bool lap_ratio_ge_epsilon = false;

  DecayFit f_decay;          // f - 1
  DecayFit remainder_decay;  // f - 1 + m_fit / r^{n-2}
  DecayFit metric_decay;     // g - delta in the r = |x| chart: |1/V - 1|
  double mass_fit = 0.0;
  bool f_decay_ok = false;
  bool remainder_ok = false;
  bool metric_decay_ok = false;

  /// Names of failed hypotheses (empty when everything passes).
  std::vector<std::string> violations() const;
};

HypothesisAudit hypothesis_audit(const BackgroundModel& model, double r_lo, double r_hi);

/// Positivity floor on scalar-curvature samples used by the audit.
inline constexpr double kCurvaturePositivityFloor = 1e-12;

}  // namespace emflow
