#include "emflow/background.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "emflow/errors.hpp"
#include "emflow/numerics.hpp"

namespace emflow {

namespace {

void check_dimension(int n) {
  if (n < 3 || n > 7) throw InvalidArgument(fmt::format("dimension n={} outside 3..7", n));
}

}  // namespace

BackgroundModel::BackgroundModel(int n, RadialProfile profile, double r_min,
                                 std::optional<double> horizon, std::string label,
                                 std::optional<RNParams> rn)
    : n_(n),
      profile_(std::move(profile)),
      r_min_(r_min),
      horizon_(horizon),
      r_max_(std::numeric_limits<double>::infinity()),
      label_(std::move(label)),
      rn_(rn) {
  check_dimension(n);
  if (!profile_.V || !profile_.f || !profile_.psi)
    throw InvalidArgument("BackgroundModel: V, f and psi evaluators are required");
  closed_derivatives_ = profile_.dV && profile_.df && profile_.d2f && profile_.dpsi &&
                        profile_.d2psi;
}

double BackgroundModel::fd_step(double r) { return std::max(1e-5, 1e-7 * std::abs(r)); }

double BackgroundModel::first_difference(const RadialFn& fn, double r) const {
  const double h = fd_step(r);
  if (r - h <= domain_floor())
    return (-3.0 * fn(r) + 4.0 * fn(r + h) - fn(r + 2.0 * h)) / (2.0 * h);
  return (fn(r + h) - fn(r - h)) / (2.0 * h);
}

double BackgroundModel::second_difference(const RadialFn& fn, double r) const {
  // wider than fd_step: roundoff in a second difference grows like 1/h^2
  const double h = 1e-4 * std::max(1.0, std::abs(r));
  if (r - h <= domain_floor())
    return (2.0 * fn(r) - 5.0 * fn(r + h) + 4.0 * fn(r + 2.0 * h) - fn(r + 3.0 * h)) / (h * h);
  return (fn(r + h) - 2.0 * fn(r) + fn(r - h)) / (h * h);
}

double BackgroundModel::dV(double r) const {
  return profile_.dV ? profile_.dV(r) : first_difference(profile_.V, r);
}
double BackgroundModel::df(double r) const {
  return profile_.df ? profile_.df(r) : first_difference(profile_.f, r);
}
double BackgroundModel::d2f(double r) const {
  return profile_.d2f ? profile_.d2f(r) : second_difference(profile_.f, r);
}
double BackgroundModel::dpsi(double r) const {
  return profile_.dpsi ? profile_.dpsi(r) : first_difference(profile_.psi, r);
}
double BackgroundModel::d2psi(double r) const {
  return profile_.d2psi ? profile_.d2psi(r) : second_difference(profile_.psi, r);
}

BackgroundModel build_rn(const RNParams& p) {
  check_dimension(p.n);
  if (!(p.mass > 0.0)) throw InvalidArgument(fmt::format("mass must be positive, got {}", p.mass));

  const double k = p.n - 2;
  const double m = p.mass;
  const double q2 = p.charge * p.charge;
  // psi normalisation fixed by f^2 R = 2 |grad psi|^2
  const double c = std::sqrt((p.n - 1) / (2.0 * (p.n - 2))) * p.charge;

  RadialProfile prof;
  prof.V = [=](double r) { return 1.0 - 2.0 * m * std::pow(r, -k) + q2 * std::pow(r, -2 * k); };
  prof.dV = [=](double r) {
    return 2.0 * m * k * std::pow(r, -k - 1) - 2.0 * k * q2 * std::pow(r, -2 * k - 1);
  };
  auto d2V = [=](double r) {
    return -2.0 * m * k * (k + 1) * std::pow(r, -k - 2) +
           2.0 * k * (2 * k + 1) * q2 * std::pow(r, -2 * k - 2);
  };
  prof.f = [V = prof.V](double r) { return std::sqrt(std::max(V(r), 0.0)); };
  prof.df = [V = prof.V, dV = prof.dV](double r) { return dV(r) / (2.0 * std::sqrt(V(r))); };
  prof.d2f = [V = prof.V, dV = prof.dV, d2V](double r) {
    const double v = V(r);
    const double sv = std::sqrt(v);
    const double dv = dV(r);
    return d2V(r) / (2.0 * sv) - dv * dv / (4.0 * v * sv);
  };
  prof.psi = [=](double r) { return c * std::pow(r, -k); };
  prof.dpsi = [=](double r) { return -c * k * std::pow(r, -k - 1); };
  prof.d2psi = [=](double r) { return c * k * (k + 1) * std::pow(r, -k - 2); };

  std::optional<double> horizon;
  if (m >= std::abs(p.charge)) horizon = std::pow(m + std::sqrt(m * m - q2), 1.0 / k);

  return BackgroundModel(p.n, std::move(prof), 0.0, horizon,
                         fmt::format("reissner-nordstrom(n={}, m={}, q={})", p.n, p.mass, p.charge),
                         p);
}

BackgroundModel build_flat(int n) {
  RadialProfile prof;
  prof.V = [](double) { return 1.0; };
  prof.f = [](double) { return 1.0; };
  prof.psi = [](double) { return 0.0; };
  prof.dV = prof.df = prof.d2f = prof.dpsi = prof.d2psi = [](double) { return 0.0; };
  return BackgroundModel(n, std::move(prof), 0.0, std::nullopt, fmt::format("flat(n={})", n));
}

BackgroundModel build_table(int n, std::vector<TableRow> rows, std::string label) {
  if (rows.size() < 4) throw InvalidArgument("table background needs at least 4 rows");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
  std::vector<double> r, v, f, psi;
  for (const auto& row : rows) {
    r.push_back(row.r);
    v.push_back(row.V);
    f.push_back(row.f);
    psi.push_back(row.psi);
  }
  auto iv = std::make_shared<MonotoneCubic>(r, v);
  auto iff = std::make_shared<MonotoneCubic>(r, f);
  auto ipsi = std::make_shared<MonotoneCubic>(r, psi);

  RadialProfile prof;
  prof.V = [iv](double x) { return (*iv)(x); };
  prof.dV = [iv](double x) { return iv->prime(x); };
  prof.f = [iff](double x) { return (*iff)(x); };
  prof.df = [iff](double x) { return iff->prime(x); };
  prof.d2f = [iff](double x) { return iff->second(x); };
  prof.psi = [ipsi](double x) { return (*ipsi)(x); };
  prof.dpsi = [ipsi](double x) { return ipsi->prime(x); };
  prof.d2psi = [ipsi](double x) { return ipsi->second(x); };

  std::optional<double> horizon;
  if (std::abs(rows.front().f) < 1e-10) horizon = rows.front().r;
  BackgroundModel model(n, std::move(prof), r.front(), horizon, std::move(label));
  // tables cannot be evaluated past their last row
  return model.with_r_max(r.back());
}

BackgroundModel load_table_csv(int n, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open table '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty table file");
  line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
  if (line != "r,V,f,psi")
    throw InvalidArgument(fmt::format("table '{}': expected header r,V,f,psi", path.string()));

  std::vector<TableRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double vals[4];
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= 4) break;
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      const std::string trimmed = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), vals[col]);
      if (ec != std::errc() || ptr != trimmed.data() + trimmed.size())
        throw InvalidArgument(fmt::format("table '{}' line {}: bad number '{}'", path.string(),
                                          lineno, trimmed));
      ++col;
    }
    if (col != 4)
      throw InvalidArgument(fmt::format("table '{}' line {}: expected 4 columns", path.string(),
                                        lineno));
    rows.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  return build_table(n, std::move(rows), fmt::format("table({})", path.filename().string()));
}

BackgroundModel build_custom(int n, RadialFn V, RadialFn f, RadialFn psi, double r_min,
                             std::optional<double> horizon, std::string label) {
  RadialProfile prof;
  prof.V = std::move(V);
  prof.f = std::move(f);
  prof.psi = std::move(psi);
  return BackgroundModel(n, std::move(prof), r_min, horizon, std::move(label));
}

CurvatureSample curvature_at(const BackgroundModel& model, double r) {
  const double floor = model.domain_floor();
  if (!(r > floor))
    throw DomainError(fmt::format("curvature_at: r={} is not above the domain floor {}", r, floor));
  if (r > model.r_max())
    throw DomainError(fmt::format("curvature_at: r={} beyond r_max {}", r, model.r_max()));

  const int n = model.dimension();
  const double d = n - 1;
  const double V = model.V(r), dV = model.dV(r);
  const double f = model.f(r), df = model.df(r), d2f = model.d2f(r);
  const double dpsi = model.dpsi(r), d2psi = model.d2psi(r);
  if (!(f > 0.0)) throw DomainError(fmt::format("curvature_at: f({}) = {} is not positive", r, f));

  CurvatureSample s;
  s.r = r;
  s.ricci_rr = -d * dV / (2.0 * r);
  s.ricci_tangential = -dV / (2.0 * r) + (n - 2) * (1.0 - V) / (r * r);
  s.scalar = s.ricci_rr + d * s.ricci_tangential;
  s.hess_f_rr = V * d2f + 0.5 * dV * df;
  s.hess_f_tangential = V * df / r;
  s.lap_f = s.hess_f_rr + d * s.hess_f_tangential;
  s.grad_psi_norm_sq = V * dpsi * dpsi;
  s.div_term = V / f * (d / r * dpsi + d2psi - dpsi * df / f) + 0.5 * dV * dpsi / f;
  return s;
}

PointResiduals point_residuals(const BackgroundModel& model, const CurvatureSample& s) {
  const int n = model.dimension();
  const double f = model.f(s.r);
  const double g2 = s.grad_psi_norm_sq;
  const double trace_term = 2.0 * g2 / ((n - 1) * f);

  PointResiduals res;
  res.tensor_rr = f * s.ricci_rr - s.hess_f_rr + 2.0 / f * g2 - trace_term;
  res.tensor_tangential = f * s.ricci_tangential - s.hess_f_tangential - trace_term;
  res.laplacian = s.lap_f - 2.0 * (n - 2.0) / (n - 1.0) * g2 / f;
  res.divergence = s.div_term;
  res.scalar_identity = f * f * s.scalar - 2.0 * g2;
  return res;
}

double FieldResiduals::max() const {
  return std::max({tensor, laplacian, divergence, scalar_identity});
}

FieldResiduals field_residuals(const BackgroundModel& model, std::span<const double> r_grid) {
  FieldResiduals out;
  for (double r : r_grid) {
    const auto res = point_residuals(model, curvature_at(model, r));
    out.tensor = std::max({out.tensor, std::abs(res.tensor_rr), std::abs(res.tensor_tangential)});
    out.laplacian = std::max(out.laplacian, std::abs(res.laplacian));
    out.divergence = std::max(out.divergence, std::abs(res.divergence));
    out.scalar_identity = std::max(out.scalar_identity, std::abs(res.scalar_identity));
  }
  return out;
}

std::vector<PhotonSphere> photon_sphere_radii(const BackgroundModel& model) {
  const auto horizon = model.horizon_radius();
  const double lo = model.r_min();
  const double hi = std::min(model.r_max(), 100.0 * std::max(horizon.value_or(1.0), 1.0));
  constexpr int cells = 1000;
  const double w = (hi - lo) / cells;

  auto g = [&](double r) { return r * model.dV(r) - 2.0 * model.V(r); };

  std::vector<double> radii;
  std::vector<double> values;
  for (int k = 0; k <= cells; ++k) {
    // the inner edge may be singular (r_min = 0 for the RN family)
    const double r = k == 0 ? lo + 1e-3 * w : lo + k * w;
    const double v = g(r);
    if (!std::isfinite(v)) continue;
    radii.push_back(r);
    values.push_back(v);
  }

  std::vector<PhotonSphere> out;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    double root;
    if (values[i] == 0.0) {
      root = radii[i];
    } else if ((values[i] < 0.0) != (values[i + 1] < 0.0) && values[i + 1] != 0.0) {
      root = bisect_root(g, radii[i], radii[i + 1], 1e-12);
    } else {
      continue;
    }
    const double floor = horizon ? *horizon : model.r_min();
    out.push_back({root, root > floor});
  }
  return out;
}

double adm_flux(const BackgroundModel& model, double r) {
  if (!(r > model.domain_floor()))
    throw DomainError(fmt::format("adm_flux: r={} at or below the domain floor", r));
  const int n = model.dimension();
  return unit_sphere_area(n - 1) * std::pow(r, n - 1) * model.df(r) * std::sqrt(model.V(r));
}

double adm_flux_quadrature(const BackgroundModel& model, double r, int nodes) {
  if (!(r > model.domain_floor()))
    throw DomainError(fmt::format("adm_flux_quadrature: r={} at or below the domain floor", r));
  if (nodes < 5) throw InvalidArgument("adm_flux_quadrature: need at least 5 nodes");
  const int n = model.dimension();
  const double h = BackgroundModel::fd_step(r);
  const double normal_derivative =
      std::sqrt(model.V(r)) * (model.f(r + h) - model.f(r - h)) / (2.0 * h);

  // dS = r^{n-1} omega_{n-2} sin^{n-2}(theta) dtheta on S^{n-1}(r)
  const auto theta = linspace(0.0, std::numbers::pi, nodes);
  std::vector<double> integrand(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    integrand[i] = normal_derivative * std::pow(std::sin(theta[i]), n - 2);
  return std::pow(r, n - 1) * unit_sphere_area(n - 2) * simpson(integrand, theta[1] - theta[0]);
}

AdmMassFit adm_mass_extrapolate(const BackgroundModel& model, double r_start, int levels) {
  if (levels < 3) throw InvalidArgument("adm_mass_extrapolate: need at least 3 levels");
  const int n = model.dimension();
  std::vector<double> x, y;
  for (int k = 0; k < levels; ++k) {
    const double r = r_start * std::pow(2.0, k);
    x.push_back(std::pow(r, -(n - 2)));
    y.push_back(adm_flux(model, r));
  }
  AdmMassFit fit;
  fit.flux_limit = extrapolate_to_zero(x, y);
  const double coarse = extrapolate_to_zero(std::span(x).subspan(1), std::span(y).subspan(1));
  fit.fit_residual = std::abs(fit.flux_limit - coarse);
  fit.mass = fit.flux_limit / ((n - 2) * unit_sphere_area(n - 1));
  return fit;
}

namespace {

DecayFit fit_decay(const std::vector<double>& r, const std::vector<double>& y) {
  DecayFit fit;
  fit.r_lo = r.front();
  fit.r_hi = r.back();
  constexpr double noise = 1e-14;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(y[i]) <= noise) continue;
    lx.push_back(std::log(r[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  if (lx.size() < r.size() / 2) {
    fit.vanishes = true;
    return fit;
  }
  fit.exponent = fit_line(lx, ly).slope;
  return fit;
}

}  // namespace

std::vector<std::string> HypothesisAudit::violations() const {
  std::vector<std::string> out;
  if (!epsilon_positive) out.emplace_back("scalar_curvature_positive_on_interval");
  if (!epsilon_positive_global) out.emplace_back("scalar_curvature_positive_global");
  if (!upper_within_bound) out.emplace_back("scalar_curvature_upper_bound");
  if (!lap_ratio_ge_epsilon_prime) out.emplace_back("lap_f_ge_epsilon_f");
  if (!(f_decay_ok && remainder_ok && metric_decay_ok)) out.emplace_back("asymptotic_flatness");
  return out;
}

HypothesisAudit hypothesis_audit(const BackgroundModel& model, double r_lo, double r_hi) {
  if (!(r_hi > r_lo)) throw InvalidArgument("hypothesis_audit: need r_hi > r_lo");
  const int n = model.dimension();
  const double k = n - 2;

  HypothesisAudit a;
  a.n = n;
  a.r_lo = r_lo;
  a.r_hi = r_hi;
  a.upper_bound = n * (n - 1.0) / (n - 2.0);

  const auto grid = geomspace(r_lo, r_hi, 2001);
  a.epsilon = std::numeric_limits<double>::infinity();
  a.upper = -std::numeric_limits<double>::infinity();
  a.lap_ratio_min = std::numeric_limits<double>::infinity();
  for (double r : grid) {
    const auto s = curvature_at(model, r);
    a.epsilon = std::min(a.epsilon, s.scalar);
    a.upper = std::max(a.upper, s.scalar);
    a.lap_ratio_min = std::min(a.lap_ratio_min, s.lap_f / model.f(r));
  }
  a.epsilon_prime = (n - 2.0) / (n - 1.0) * a.epsilon;
  a.epsilon_positive = a.epsilon > kCurvaturePositivityFloor;
  a.upper_within_bound = a.upper <= a.upper_bound;
  auto ge = [](double lhs, double rhs) { return lhs >= rhs - 1e-9 * std::abs(rhs) - 1e-15; };
  a.lap_ratio_ge_epsilon_prime = ge(a.lap_ratio_min, a.epsilon_prime);
  a.lap_ratio_ge_epsilon = ge(a.lap_ratio_min, a.epsilon);

  const double scale = std::max(1.0, model.domain_floor());
  const double r_far = std::min(model.r_max(), 1e6 * scale);
  double global_min = a.epsilon;
  if (r_far > r_hi) {
    for (double r : geomspace(r_hi, r_far, 2001))
      global_min = std::min(global_min, curvature_at(model, r).scalar);
  }
  a.epsilon_positive_global = a.epsilon_positive && global_min > kCurvaturePositivityFloor;

  // asymptotic window where |f - 1| ~ m r^{-(n-2)} sits around 1e-5 .. 1e-6
  double fit_hi = std::min(model.r_max(), scale * std::pow(10.0, 5.0 / k));
  double fit_lo = fit_hi / 10.0;
  if (fit_lo <= model.domain_floor()) {
    a.f_decay_ok = a.remainder_ok = a.metric_decay_ok = false;
    return a;
  }
  const auto far = geomspace(fit_lo, fit_hi, 41);
  std::vector<double> f_dev, metric_dev, xs, zs;
  for (double r : far) {
    const double dev = model.f(r) - 1.0;
    f_dev.push_back(dev);
    metric_dev.push_back(1.0 / model.V(r) - 1.0);
    xs.push_back(std::pow(r, -k));
    zs.push_back(dev * std::pow(r, k));
  }
  a.f_decay = fit_decay(far, f_dev);
  a.metric_decay = fit_decay(far, metric_dev);
  a.mass_fit = a.f_decay.vanishes ? 0.0 : -fit_line(xs, zs).intercept;
  std::vector<double> remainder;
  for (std::size_t i = 0; i < far.size(); ++i) remainder.push_back(f_dev[i] + a.mass_fit * xs[i]);
  a.remainder_decay = fit_decay(far, remainder);

  a.f_decay_ok = a.f_decay.vanishes || std::abs(a.f_decay.exponent + k) <= 0.05;
  a.remainder_ok = a.remainder_decay.vanishes || a.remainder_decay.exponent < -k - 0.1;
  a.metric_decay_ok = a.metric_decay.vanishes || a.metric_decay.exponent <= -k + 0.05;
  return a;
}

}  // namespace emflow
