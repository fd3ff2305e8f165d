#include "emflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "emflow/errors.hpp"
#include "emflow/numerics.hpp"

namespace emflow {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pole(std::size_t k, std::size_t count) { return k == 0 || k + 1 == count; }

double grid_spacing(const AxiSurface& s) { return s.theta[1] - s.theta[0]; }

void check_grid(const AxiSurface& s) {
  const std::size_t n = s.theta.size();
  if (n < 5 || s.rho.size() != n)
    throw InvalidArgument("axisymmetric surface needs >= 5 nodes with matching theta/rho");
  const double h = kPi / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(s.theta[k] - h * static_cast<double>(k)) > 1e-9)
      throw InvalidArgument("theta grid must be uniform and increasing on [0, pi]");
  }
}

void check_three_dimensional(const BackgroundModel& model) {
  if (model.dimension() != 3)
    throw InvalidArgument(fmt::format(
        "the axisymmetric engine supports n = 3 only (model has n = {})", model.dimension()));
}

}  // namespace

AxiSurface make_axi_surface(const std::function<double(double)>& profile, int nodes,
                            std::string center_note) {
  if (nodes < 5) throw InvalidArgument("make_axi_surface: need at least 5 nodes");
  AxiSurface s;
  s.theta = linspace(0.0, kPi, nodes);
  s.rho.reserve(s.theta.size());
  for (double th : s.theta) s.rho.push_back(profile(th));
  s.center_note = std::move(center_note);
  return s;
}

AxiSurface resample_profile(std::span<const double> theta, std::span<const double> rho,
                            int nodes, std::string center_note) {
  if (theta.size() != rho.size() || theta.size() < 2)
    throw InvalidArgument("resample_profile: need matching theta/rho samples");
  if (std::abs(theta.front()) > 1e-12 || std::abs(theta.back() - kPi) > 1e-9)
    throw RegionError("profile curve must span theta in [0, pi] to enclose a region");
  MonotoneCubic interp({theta.begin(), theta.end()}, {rho.begin(), rho.end()});
  auto s = make_axi_surface([&](double th) { return interp(std::clamp(th, 0.0, theta.back())); },
                            nodes, std::move(center_note));
  return s;
}

double mean_curvature_sphere(const BackgroundModel& model, double r) {
  const double floor = model.domain_floor();
  if (r < floor || !(r > 0.0))
    throw DomainError(fmt::format("mean_curvature_sphere: r={} below the domain floor {}", r, floor));
  return (model.dimension() - 1) * std::sqrt(std::max(model.V(r), 0.0)) / r;
}

AxiGeometry geometry_of(const AxiSurface& surface, const BackgroundModel& model) {
  check_three_dimensional(model);
  check_grid(surface);
  const std::size_t count = surface.rho.size();
  const double floor = model.domain_floor();
  for (double r : surface.rho)
    if (!(r > floor) || !std::isfinite(r))
      throw DomainError(fmt::format("profile radius {} at or below the domain floor {}", r, floor));

  const double h = grid_spacing(surface);
  std::vector<double> d1(count), d2(count);
  polar_derivatives(surface.rho, h, d1, d2);

  AxiGeometry g;
  g.nodes.resize(count);
  std::vector<double> dens(count), fH(count), fOverH(count);
  g.H_min = std::numeric_limits<double>::infinity();
  g.H_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const double r = surface.rho[k];
    const double rp = d1[k];
    const double rpp = d2[k];
    const double th = surface.theta[k];
    const double V = model.V(r);
    const double dV = model.dV(r);
    const double W = std::sqrt(V + rp * rp / (r * r));

    // rho' cot(theta) tends to rho'' at both poles
    const double cot_term = is_pole(k, count) ? rpp : rp * std::cos(th) / std::sin(th);
    const double g_tt = rp * rp / V + r * r;
    const double h_tt = -(rpp - dV * rp * rp / (2.0 * V) - r * V - 2.0 * rp * rp / r) / W;

    NodeGeometry& node = g.nodes[k];
    node.drho = rp;
    node.d2rho = rpp;
    node.kappa_meridian = h_tt / g_tt;
    node.kappa_parallel = V / (r * W) - cot_term / (r * r * W);
    node.H = node.kappa_meridian + node.kappa_parallel;
    node.h_norm_sq =
        node.kappa_meridian * node.kappa_meridian + node.kappa_parallel * node.kappa_parallel;
    node.normal_r = V / W;
    node.normal_theta = -rp / (r * r * W);
    node.frame_normal_r = std::sqrt(V) / W;
    node.frame_normal_theta = -rp / (r * W);
    node.speed_factor = W;
    node.area_density = 2.0 * kPi * std::sqrt(g_tt) * r * std::sin(th);

    const double f = model.f(r);
    dens[k] = node.area_density;
    fH[k] = f * node.H * node.area_density;
    fOverH[k] = f / node.H * node.area_density;
    g.H_min = std::min(g.H_min, node.H);
    g.H_max = std::max(g.H_max, node.H);
  }
  g.area = simpson(dens, h);
  g.int_fH = simpson(fH, h);
  g.int_f_over_H = simpson(fOverH, h);
  return g;
}

std::vector<double> surface_laplacian(const AxiSurface& surface, const AxiGeometry& geometry,
                                      const BackgroundModel& model, std::span<const double> u) {
  const std::size_t count = surface.rho.size();
  if (u.size() != count) throw InvalidArgument("surface_laplacian: size mismatch");
  const double h = grid_spacing(surface);
  std::vector<double> du(count), d2u(count), flux(count), dflux(count), g_tt(count);
  polar_derivatives(u, h, du, d2u);
  for (std::size_t k = 0; k < count; ++k) {
    const double r = surface.rho[k];
    const double rp = geometry.nodes[k].drho;
    g_tt[k] = rp * rp / model.V(r) + r * r;
    flux[k] = is_pole(k, count) ? 0.0 : r * std::sin(surface.theta[k]) / std::sqrt(g_tt[k]) * du[k];
  }
  polar_derivatives(flux, h, dflux, {});
  std::vector<double> lap(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (is_pole(k, count)) {
      lap[k] = 2.0 * d2u[k] / g_tt[k];
    } else {
      const double r = surface.rho[k];
      lap[k] = dflux[k] / (std::sqrt(g_tt[k]) * r * std::sin(surface.theta[k]));
    }
  }
  return lap;
}

SphereState step_radial_imcf(const BackgroundModel& model, const SphereState& state, double dt,
                             const FlowSettings& settings) {
  if (dt < 0.0) throw InvalidArgument("step_radial_imcf: dt must be non-negative");
  if (dt == 0.0) return state;
  auto rate = [&](double r) {
    const double H = mean_curvature_sphere(model, r);
    if (!(H > settings.h_floor))
      throw FlowError(FlowError::Kind::SmoothnessLost,
                      fmt::format("flow leaves smooth regime: H = {} at r = {}", H, r));
    return std::sqrt(model.V(r)) / H;
  };
  const double r = state.r;
  const double k1 = rate(r);
  const double k2 = rate(r + 0.5 * dt * k1);
  const double k3 = rate(r + 0.5 * dt * k2);
  const double k4 = rate(r + dt * k3);
  return {state.t + dt, r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
}

double axisym_cfl_step(const AxiSurface& surface, const AxiGeometry& geometry,
                       const FlowSettings& settings) {
  const double rho_min = *std::min_element(surface.rho.begin(), surface.rho.end());
  const double spacing = grid_spacing(surface) * rho_min;
  return settings.cfl * spacing * spacing * geometry.H_min * geometry.H_min;
}

namespace {

enum class AxiFlow { Imcf, Conformal };

// Graph velocity d(rho)/dt at fixed theta and the Lagrangian theta velocity
// of the normal motion.
void axi_velocity(const BackgroundModel& model, const AxiSurface& s, const AxiGeometry& g,
                  AxiFlow kind, const FlowSettings& settings, std::vector<double>& rho_dot,
                  std::vector<double>& theta_dot) {
  const std::size_t count = s.rho.size();
  rho_dot.resize(count);
  theta_dot.resize(count);
  if (!(g.H_min > settings.h_floor))
    throw FlowError(FlowError::Kind::SmoothnessLost,
                    fmt::format("flow leaves smooth regime: min H = {}", g.H_min));
  for (std::size_t k = 0; k < count; ++k) {
    const auto& node = g.nodes[k];
    const double speed = kind == AxiFlow::Imcf ? 1.0 / node.H : -model.f(s.rho[k]);
    rho_dot[k] = speed * node.speed_factor;
    theta_dot[k] = speed * node.normal_theta;
  }
}

AxiSurface axi_rk4(const BackgroundModel& model, const AxiSurface& s, double dt, AxiFlow kind,
                   const FlowSettings& settings, const AxiGeometry& g0) {
  const std::size_t count = s.rho.size();
  std::vector<double> k1, k2, k3, k4, th1, scratch;
  axi_velocity(model, s, g0, kind, settings, k1, th1);

  // graph property: nodes moved along the normal must keep their theta order
  for (std::size_t k = 0; k + 1 < count; ++k) {
    if (!(s.theta[k] + dt * th1[k] < s.theta[k + 1] + dt * th1[k + 1]))
      throw FlowError(FlowError::Kind::SelfIntersection,
                      fmt::format("self-intersection detected near theta = {}", s.theta[k]));
  }

  auto stage = [&](const std::vector<double>& base, double factor) {
    AxiSurface tmp = s;
    for (std::size_t k = 0; k < count; ++k) tmp.rho[k] = s.rho[k] + factor * dt * base[k];
    return tmp;
  };
  auto eval = [&](const AxiSurface& tmp, std::vector<double>& out) {
    const auto g = geometry_of(tmp, model);
    axi_velocity(model, tmp, g, kind, settings, out, scratch);
  };

  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      if (kind == AxiFlow::Conformal)
        throw FlowError(FlowError::Kind::BoundaryReached,
                        fmt::format("conformal flow reached boundary: {}", e.what()));
      throw FlowError(FlowError::Kind::SmoothnessLost,
                      fmt::format("flow leaves smooth regime: {}", e.what()));
    }
  };
  wrap([&] { eval(stage(k1, 0.5), k2); });
  wrap([&] { eval(stage(k2, 0.5), k3); });
  wrap([&] { eval(stage(k3, 1.0), k4); });

  AxiSurface out = s;
  out.t = s.t + dt;
  for (std::size_t k = 0; k < count; ++k) {
    out.rho[k] = s.rho[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    if (!std::isfinite(out.rho[k]))
      throw FlowError(FlowError::Kind::SmoothnessLost, "flow leaves smooth regime: non-finite radius");
  }
  return out;
}

}  // namespace

AxiSurface step_axisym_imcf(const BackgroundModel& model, const AxiSurface& surface, double dt,
                            const FlowSettings& settings) {
  if (dt < 0.0) throw InvalidArgument("step_axisym_imcf: dt must be non-negative");
  AxiSurface s = surface;
  if (dt == 0.0) return s;
  const double t_target = surface.t + dt;
  double remaining = dt;
  while (remaining > 0.0) {
    const auto g = geometry_of(s, model);
    if (!(g.H_min > settings.h_floor))
      throw FlowError(FlowError::Kind::SmoothnessLost,
                      fmt::format("flow leaves smooth regime: min H = {}", g.H_min));
    double sub = std::min(remaining, axisym_cfl_step(s, g, settings));
    // avoid a sliver substep at the end
    if (remaining - sub < 1e-3 * sub) sub = remaining;
    s = axi_rk4(model, s, sub, AxiFlow::Imcf, settings, g);
    remaining -= sub;
  }
  s.t = t_target;
  return s;
}

std::vector<ConformalRate> conformal_rates(const BackgroundModel& model, const SphereState& s) {
  const int n = model.dimension();
  const double H = mean_curvature_sphere(model, s.r);
  if (!(H > 0.0)) throw FlowError(FlowError::Kind::SmoothnessLost, "conformal rate needs H > 0");
  const auto curv = curvature_at(model, s.r);
  const double f = model.f(s.r);
  const double normal_df = model.df(s.r) * std::sqrt(model.V(s.r));
  const double f_dot = -f * normal_df;
  const double H_dot = f * (H * H / (n - 1) + curv.ricci_rr);
  return {{f / H, f_dot / H - f * H_dot / (H * H), -f * f / (n - 1)}};
}

std::vector<ConformalRate> conformal_rates(const BackgroundModel& model, const AxiSurface& s) {
  const auto g = geometry_of(s, model);
  const std::size_t count = s.rho.size();
  std::vector<double> f(count);
  for (std::size_t k = 0; k < count; ++k) f[k] = model.f(s.rho[k]);
  const auto lap_f = surface_laplacian(s, g, model, f);

  std::vector<ConformalRate> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& node = g.nodes[k];
    if (!(node.H > 0.0))
      throw FlowError(FlowError::Kind::SmoothnessLost, "conformal rate needs H > 0");
    const auto curv = curvature_at(model, s.rho[k]);
    const double ric_nn = curv.ricci_rr * node.frame_normal_r * node.frame_normal_r +
                          curv.ricci_tangential * node.frame_normal_theta * node.frame_normal_theta;
    const double normal_df = model.df(s.rho[k]) * node.normal_r;
    const double f_dot = -f[k] * normal_df;
    const double H_dot = lap_f[k] + f[k] * (node.h_norm_sq + ric_nn);
    out[k] = {f[k] / node.H, f_dot / node.H - f[k] * H_dot / (node.H * node.H),
              -f[k] * f[k] / (model.dimension() - 1)};
  }
  return out;
}

ConformalStep<SphereState> conformal_flow_step(const BackgroundModel& model,
                                               const SphereState& state, double dt) {
  if (dt < 0.0) throw InvalidArgument("conformal_flow_step: dt must be non-negative");
  if (!(mean_curvature_sphere(model, state.r) > 0.0))
    throw FlowError(FlowError::Kind::SmoothnessLost, "conformal flow needs H > 0");
  const double floor = model.domain_floor();
  auto rate = [&](double r) {
    if (!(r > floor) || !(model.f(r) > 1e-12))
      throw FlowError(FlowError::Kind::BoundaryReached,
                      fmt::format("conformal flow reached boundary at r = {}", r));
    return -model.f(r) * std::sqrt(model.V(r));
  };
  SphereState next = state;
  if (dt > 0.0) {
    const double r = state.r;
    const double k1 = rate(r);
    const double k2 = rate(r + 0.5 * dt * k1);
    const double k3 = rate(r + 0.5 * dt * k2);
    const double k4 = rate(r + dt * k3);
    next = {state.t + dt, r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
    rate(next.r);
  }
  return {next, conformal_rates(model, next)};
}

ConformalStep<AxiSurface> conformal_flow_step(const BackgroundModel& model,
                                              const AxiSurface& surface, double dt,
                                              const FlowSettings& settings) {
  if (dt < 0.0) throw InvalidArgument("conformal_flow_step: dt must be non-negative");
  AxiSurface s = surface;
  const double t_target = surface.t + dt;
  double remaining = dt;
  while (remaining > 0.0) {
    AxiGeometry g;
    try {
      g = geometry_of(s, model);
    } catch (const DomainError& e) {
      throw FlowError(FlowError::Kind::BoundaryReached,
                      fmt::format("conformal flow reached boundary: {}", e.what()));
    }
    const double rho_min = *std::min_element(s.rho.begin(), s.rho.end());
    double sub = std::min(remaining, settings.cfl * grid_spacing(s) * rho_min);
    if (remaining - sub < 1e-3 * sub) sub = remaining;
    s = axi_rk4(model, s, sub, AxiFlow::Conformal, settings, g);
    remaining -= sub;
  }
  s.t = t_target;
  try {
    return {s, conformal_rates(model, s)};
  } catch (const DomainError& e) {
    throw FlowError(FlowError::Kind::BoundaryReached,
                    fmt::format("conformal flow reached boundary: {}", e.what()));
  }
}

double region_inner_radius(const BackgroundModel& model, Homology homology) {
  const auto horizon = model.horizon_radius();
  if (homology == Homology::Horizon) {
    if (!horizon)
      throw RegionError("horizon-homologous region requested but the background has no horizon");
    return *horizon;
  }
  if (horizon)
    throw RegionError("a surface enclosing r_min also encloses the horizon; no null-homologous region");
  return model.r_min();
}

namespace {

// integral of f r^{n-1} / sqrt(V) from a to b
double radial_weight_integral(const BackgroundModel& model, double a, double b) {
  const int n = model.dimension();
  return gauss_legendre(
      [&](double r) { return model.f(r) * std::pow(r, n - 1) / std::sqrt(model.V(r)); }, a, b);
}

}  // namespace

double weighted_volume(const BackgroundModel& model, const SphereState& state, Homology homology) {
  const double inner = region_inner_radius(model, homology);
  if (state.r < inner)
    throw RegionError(fmt::format("sphere r={} lies inside the inner boundary {}", state.r, inner));
  return unit_sphere_area(model.dimension() - 1) * radial_weight_integral(model, inner, state.r);
}

double weighted_volume(const BackgroundModel& model, const AxiSurface& surface, Homology homology) {
  check_three_dimensional(model);
  if (surface.theta.empty() || std::abs(surface.theta.front()) > 1e-12 ||
      std::abs(surface.theta.back() - kPi) > 1e-9)
    throw RegionError("open profile curve: theta must span [0, pi]");
  check_grid(surface);
  const double inner = region_inner_radius(model, homology);
  std::vector<double> integrand(surface.rho.size());
  for (std::size_t k = 0; k < surface.rho.size(); ++k) {
    if (surface.rho[k] < inner)
      throw RegionError("profile dips below the inner boundary of the region");
    integrand[k] = radial_weight_integral(model, inner, surface.rho[k]) * std::sin(surface.theta[k]);
  }
  return 2.0 * kPi * simpson(integrand, grid_spacing(surface));
}

double weighted_volume(const BackgroundModel& model, const Hypersurface& surface,
                       Homology homology) {
  return std::visit([&](const auto& s) { return weighted_volume(model, s, homology); }, surface);
}

SurfaceTotals surface_totals(const BackgroundModel& model, const Hypersurface& surface) {
  const int n = model.dimension();
  const double omega = unit_sphere_area(n - 1);
  SurfaceTotals out;
  if (const auto* sphere = std::get_if<SphereState>(&surface)) {
    const double r = sphere->r;
    const double H = mean_curvature_sphere(model, r);
    const double f = model.f(r);
    out.area = omega * std::pow(r, n - 1);
    out.int_fH = out.area * f * H;
    out.int_f_over_H = out.area * f / H;
    out.H_min = out.H_max = H;
    out.representative_radius = r;
    return out;
  }
  const auto& axi = std::get<AxiSurface>(surface);
  const auto g = geometry_of(axi, model);
  out.area = g.area;
  out.int_fH = g.int_fH;
  out.int_f_over_H = g.int_f_over_H;
  out.H_min = g.H_min;
  out.H_max = g.H_max;
  out.representative_radius = std::pow(g.area / omega, 1.0 / (n - 1));
  return out;
}

EvolutionSample evolution_sample(const BackgroundModel& model, const Hypersurface& surface) {
  EvolutionSample e;
  const int n = model.dimension();
  if (const auto* sphere = std::get_if<SphereState>(&surface)) {
    const double H = mean_curvature_sphere(model, sphere->r);
    const auto curv = curvature_at(model, sphere->r);
    // umbilic: |h|^2 = H^2/(n-1); lap(1/H) vanishes on a round sphere
    e.H = {H};
    e.rhs = {-(H * H / (n - 1) + curv.ricci_rr) / H};
    e.advection = {0.0};
    return e;
  }
  const auto& axi = std::get<AxiSurface>(surface);
  const auto g = geometry_of(axi, model);
  const std::size_t count = axi.rho.size();
  std::vector<double> inv_H(count), dH(count);
  e.H.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    e.H[k] = g.nodes[k].H;
    inv_H[k] = 1.0 / e.H[k];
  }
  const auto lap = surface_laplacian(axi, g, model, inv_H);
  polar_derivatives(e.H, grid_spacing(axi), dH, {});
  e.rhs.resize(count);
  e.advection.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& node = g.nodes[k];
    const auto curv = curvature_at(model, axi.rho[k]);
    const double ric_nn = curv.ricci_rr * node.frame_normal_r * node.frame_normal_r +
                          curv.ricci_tangential * node.frame_normal_theta * node.frame_normal_theta;
    e.rhs[k] = -lap[k] - (node.h_norm_sq + ric_nn) / node.H;
    e.advection[k] = node.normal_theta / node.H * dH[k];
  }
  return e;
}

namespace {

TraceRecord make_record(const BackgroundModel& model, const Hypersurface& s, double t,
                        Homology homology) {
  const auto totals = surface_totals(model, s);
  TraceRecord rec;
  rec.t = t;
  rec.r_rep = totals.representative_radius;
  rec.area = totals.area;
  rec.int_fH = totals.int_fH;
  rec.int_f_over_H = totals.int_f_over_H;
  rec.H_min = totals.H_min;
  rec.H_max = totals.H_max;
  rec.int_f_dv = weighted_volume(model, s, homology);
  const auto rates = std::visit([&](const auto& x) { return conformal_rates(model, x); }, s);
  rec.res_smooth = -std::numeric_limits<double>::infinity();
  for (const auto& c : rates) rec.res_smooth = std::max(rec.res_smooth, c.rate - c.bound);
  return rec;
}

}  // namespace

FlowTrace run_imcf(const BackgroundModel& model, const Hypersurface& initial, const FlowRun& run) {
  if (run.t_end < 0.0) throw InvalidArgument("run_imcf: t_end must be non-negative");
  if (!(run.dt > 0.0)) throw InvalidArgument("run_imcf: dt must be positive");

  FlowTrace trace;
  trace.n = model.dimension();
  trace.homology = run.homology;

  Hypersurface state = initial;
  const double t0 = std::visit([](const auto& s) { return s.t; }, state);
  trace.records.push_back(make_record(model, state, t0, run.homology));
  trace.evolution.push_back(evolution_sample(model, state));

  const auto steps = static_cast<long>(std::ceil(run.t_end / run.dt - 1e-9));
  double t_prev = 0.0;
  for (long i = 1; i <= steps; ++i) {
    const double t = std::min(static_cast<double>(i) * run.dt, run.t_end);
    const double h = t - t_prev;
    if (auto* sphere = std::get_if<SphereState>(&state)) {
      *sphere = step_radial_imcf(model, *sphere, h, run.settings);
      sphere->t = t0 + t;
    } else {
      auto& axi = std::get<AxiSurface>(state);
      axi = step_axisym_imcf(model, axi, h, run.settings);
      axi.t = t0 + t;
    }
    trace.records.push_back(make_record(model, state, t0 + t, run.homology));
    trace.evolution.push_back(evolution_sample(model, state));
    t_prev = t;
  }
  return trace;
}

}  // namespace emflow
